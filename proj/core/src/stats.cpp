#include "forgetset/stats.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <unordered_set>

#include "forgetset/errors.hpp"

namespace forgetset {

namespace {

std::vector<std::size_t> resolve_positions(const Dataset& ds,
                                           const std::optional<std::vector<ExampleId>>& subset) {
  std::vector<std::size_t> out;
  if (!subset) {
    out.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) out[i] = i;
    return out;
  }
  out.reserve(subset->size());
  for (ExampleId id : *subset) out.push_back(ds.position_of(id));
  return out;
}

GroupedStat grouped_mean(const Dataset& ds, const std::optional<std::vector<ExampleId>>& subset,
                         const std::vector<LabelIndex>& group_labels,
                         const char* pos_name, const char* neg_name,
                         const std::function<double(const Example&)>& stat) {
  if (group_labels.empty()) throw ConfigError("label group must be non-empty");
  GroupedStat g;
  double sum_pos = 0.0, sum_neg = 0.0;
  for (std::size_t pos : resolve_positions(ds, subset)) {
    const Example& ex = ds[pos];
    const double v = stat(ex);
    if (std::find(group_labels.begin(), group_labels.end(), ex.label) != group_labels.end()) {
      sum_pos += v;
      ++g.n_pos;
    } else {
      sum_neg += v;
      ++g.n_neg;
    }
  }
  if (g.n_pos == 0) throw DataError(std::string("empty group ") + pos_name);
  if (g.n_neg == 0) throw DataError(std::string("empty group ") + neg_name);
  g.group_pos = sum_pos / static_cast<double>(g.n_pos);
  g.group_neg = sum_neg / static_cast<double>(g.n_neg);
  return g;
}

}  // namespace

double jaccard(const TokenSeq& s1, const TokenSeq& s2) {
  const std::set<std::string> a(s1.begin(), s1.end());
  const std::set<std::string> b(s2.begin(), s2.end());
  if (a.empty() && b.empty()) throw DataError("jaccard undefined for two empty sequences");
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

GroupedStat overlap_by_label(const Dataset& ds, const std::optional<std::vector<ExampleId>>& subset,
                             const std::vector<LabelIndex>& positive_labels) {
  return grouped_mean(ds, subset, positive_labels, "P (positive)", "not-P (non-positive)",
                      [](const Example& ex) { return jaccard(ex.s1, ex.s2); });
}

GroupedStat keyword_rate_by_label(const Dataset& ds,
                                  const std::optional<std::vector<ExampleId>>& subset,
                                  const std::vector<std::string>& keywords,
                                  const std::vector<LabelIndex>& negative_labels) {
  const std::unordered_set<std::string> kw(keywords.begin(), keywords.end());
  return grouped_mean(ds, subset, negative_labels, "N (negative)", "not-N (non-negative)",
                      [&](const Example& ex) {
                        return std::any_of(ex.s2.begin(), ex.s2.end(),
                                           [&](const std::string& t) { return kw.count(t) > 0; })
                                   ? 1.0
                                   : 0.0;
                      });
}

}  // namespace forgetset

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "forgetset/corpus.hpp"

namespace forgetset {

// Mean of a per-example statistic over two label groups.
struct GroupedStat {
  double group_pos = 0.0;
  double group_neg = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

inline const std::vector<std::string> kDefaultNegationKeywords = {
    "not", "no", "doesn't", "don't", "never", "any"};

// Jaccard index over unique tokens. Throws DataError when both are empty.
double jaccard(const TokenSeq& s1, const TokenSeq& s2);

// Mean Jaccard(s1, s2) for examples whose label is in `positive_labels`
// (group_pos) versus the rest (group_neg). `subset` restricts to the given
// ids. An empty group is a DataError naming the group.
GroupedStat overlap_by_label(const Dataset& ds, const std::optional<std::vector<ExampleId>>& subset,
                             const std::vector<LabelIndex>& positive_labels);

// Fraction of examples whose s2 contains at least one keyword token.
// group_pos is the N group (label in `negative_labels`), group_neg is not-N.
GroupedStat keyword_rate_by_label(const Dataset& ds,
                                  const std::optional<std::vector<ExampleId>>& subset,
                                  const std::vector<std::string>& keywords,
                                  const std::vector<LabelIndex>& negative_labels);

}  // namespace forgetset

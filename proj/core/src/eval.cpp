#include "forgetset/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "forgetset/errors.hpp"
#include "forgetset/stats.hpp"

namespace forgetset {

namespace {

std::optional<double> ratio(std::size_t correct, std::size_t n) {
  if (n == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(n);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::vector<std::vector<double>> predict_proba(const Model& model, const Dataset& ds) {
  std::vector<std::vector<double>> out;
  out.reserve(ds.size());
  Workspace ws;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.push_back(forward(model, ds.s1_indices(i), ds.s2_indices(i), ws));
  }
  return out;
}

EvalReport evaluate(const Model& model, const Dataset& ds) {
  if (ds.empty()) throw DataError("empty evaluation set");
  if (model.vocab_size() != ds.vocab().size()) {
    throw ConfigError("model and dataset vocabularies differ");
  }
  EvalReport rep;
  rep.n = ds.size();
  std::vector<std::size_t> n_label(ds.labels().size()), c_label(ds.labels().size());
  Workspace ws;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& probs = forward(model, ds.s1_indices(i), ds.s2_indices(i), ws);
    const bool ok = argmax(probs) == ds[i].label;
    rep.correct += ok;
    ++n_label[ds[i].label];
    c_label[ds[i].label] += ok;
  }
  rep.accuracy = static_cast<double>(rep.correct) / static_cast<double>(rep.n);
  for (std::size_t l = 0; l < ds.labels().size(); ++l) {
    rep.per_label.push_back({ds.labels()[l], n_label[l], c_label[l], ratio(c_label[l], n_label[l])});
  }
  return rep;
}

EvalReport grouped_eval(const Model& model, const Dataset& ds,
                        const std::vector<LabelIndex>& positive_labels) {
  EvalReport rep = evaluate(model, ds);
  std::vector<double> overlap(ds.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    overlap[i] = jaccard(ds[i].s1, ds[i].s2);
    sum += overlap[i];
  }
  const double mu = sum / static_cast<double>(ds.size());
  rep.mean_overlap = mu;

  // Cells ordered positive/high, positive/low, non-positive/high, non-positive/low.
  std::size_t n[4] = {}, c[4] = {};
  Workspace ws;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const bool pos = std::find(positive_labels.begin(), positive_labels.end(), ds[i].label) !=
                     positive_labels.end();
    const bool high = overlap[i] > mu;
    const std::size_t cell = (pos ? 0 : 2) + (high ? 0 : 1);
    const auto& probs = forward(model, ds.s1_indices(i), ds.s2_indices(i), ws);
    ++n[cell];
    c[cell] += argmax(probs) == ds[i].label;
  }
  const char* groups[2] = {"positive", "non-positive"};
  const char* buckets[2] = {"high", "low"};
  for (std::size_t cell = 0; cell < 4; ++cell) {
    rep.groups.push_back({groups[cell / 2], buckets[cell % 2], n[cell], c[cell], ratio(c[cell], n[cell])});
  }
  return rep;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> out;
  for (int k = 0; k <= 50; ++k) out.push_back(k / 50.0);
  return out;
}

std::vector<CalibrationPoint> calibration_sweep(const Model& model, const Dataset& ds,
                                                LabelIndex positive_class,
                                                const std::vector<double>& thresholds) {
  if (ds.labels().size() != 2 || model.config().n_classes != 2) {
    throw DataError("calibration sweep needs a binary task");
  }
  if (positive_class >= 2) throw ConfigError("positive class index out of range");
  if (ds.empty()) throw DataError("empty evaluation set");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw ConfigError("thresholds must be sorted ascending");
  }
  const auto probs = predict_proba(model, ds);
  std::vector<CalibrationPoint> out;
  out.reserve(thresholds.size());
  const auto n = static_cast<double>(ds.size());
  for (double tau : thresholds) {
    std::size_t correct = 0, predicted_pos = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const bool pred_pos = probs[i][positive_class] >= tau;
      predicted_pos += pred_pos;
      correct += pred_pos == (ds[i].label == positive_class);
    }
    out.push_back({tau, static_cast<double>(correct) / n, static_cast<double>(predicted_pos) / n});
  }
  return out;
}

double best_threshold(const std::vector<CalibrationPoint>& points) {
  if (points.empty()) throw ConfigError("empty calibration curve");
  const CalibrationPoint* best = &points.front();
  for (const auto& p : points) {
    if (p.accuracy > best->accuracy) best = &p;
  }
  return best->threshold;
}

FormattedReport report(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw ConfigError("report needs at least one row");
  FormattedReport out;
  std::size_t w = 4;
  for (const auto& r : rows) w = std::max(w, r.name.size());
  out.csv = "name,in_dist_acc,ood_acc,avg\n";
  out.text = pad("Model", w) + "  In-dist     OOD    Avg.\n";
  for (const auto& r : rows) {
    out.csv += r.name + "," + fixed(r.in_dist, 6) + "," + fixed(r.ood, 6) + "," +
               fixed(r.avg(), 6) + "\n";
    out.text += pad(r.name, w) + "  " + pad(fixed(100.0 * r.in_dist, 1), 7) + " " +
                pad(fixed(100.0 * r.ood, 1), 7) + " " + fixed(100.0 * r.avg(), 1) + "\n";
  }
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<AggregateRow> aggregate(const std::vector<std::vector<ReportRow>>& per_seed) {
  std::vector<std::string> names;
  std::map<std::string, std::vector<const ReportRow*>> by_name;
  for (const auto& seed_rows : per_seed) {
    for (const auto& r : seed_rows) {
      if (!by_name.count(r.name)) names.push_back(r.name);
      by_name[r.name].push_back(&r);
    }
  }
  std::vector<AggregateRow> out;
  for (const auto& name : names) {
    std::vector<double> id, ood, avg;
    for (const auto* r : by_name[name]) {
      id.push_back(r->in_dist);
      ood.push_back(r->ood);
      avg.push_back(r->avg());
    }
    out.push_back({name, id.size(), mean(id), sample_std(id), mean(ood), sample_std(ood),
                   mean(avg), sample_std(avg)});
  }
  return out;
}

FormattedReport aggregate_report(const std::vector<AggregateRow>& rows) {
  if (rows.empty()) throw ConfigError("report needs at least one row");
  FormattedReport out;
  std::size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.name.size());
  auto pm = [](double m, double s) { return fixed(100.0 * m, 1) + "±" + fixed(100.0 * s, 1); };
  out.csv = "name,n_seeds,in_dist_mean,in_dist_std,ood_mean,ood_std,avg_mean,avg_std\n";
  out.text = pad("Model", w) + "  In-dist      OOD          Avg.\n";
  for (const auto& r : rows) {
    out.csv += r.name + "," + std::to_string(r.n_seeds) + "," + fixed(r.in_dist_mean, 6) + "," +
               fixed(r.in_dist_std, 6) + "," + fixed(r.ood_mean, 6) + "," + fixed(r.ood_std, 6) +
               "," + fixed(r.avg_mean, 6) + "," + fixed(r.avg_std, 6) + "\n";
    out.text += pad(r.name, w) + "  " + pad(pm(r.in_dist_mean, r.in_dist_std), 12) + " " +
                pad(pm(r.ood_mean, r.ood_std), 12) + " " + pm(r.avg_mean, r.avg_std) + "\n";
  }
  return out;
}

std::string grouped_csv(const EvalReport& rep) {
  std::string out = "group_label,overlap_bucket,n,accuracy\n";
  for (const auto& g : rep.groups) {
    out += g.group_label + "," + g.overlap_bucket + "," + std::to_string(g.n) + "," +
           (g.accuracy ? fixed(*g.accuracy, 6) : std::string("NA")) + "\n";
  }
  return out;
}

std::string calibration_csv(const std::vector<CalibrationPoint>& points) {
  std::string out = "threshold,accuracy,positive_rate\n";
  for (const auto& p : points) {
    out += fixed(p.threshold, 2) + "," + fixed(p.accuracy, 6) + "," + fixed(p.positive_rate, 6) +
           "\n";
  }
  return out;
}

std::string report_json(const EvalReport& rep) {
  nlohmann::ordered_json j;
  j["n"] = rep.n;
  j["correct"] = rep.correct;
  j["accuracy"] = rep.accuracy;
  auto& pl = j["per_label"] = nlohmann::ordered_json::array();
  for (const auto& l : rep.per_label) {
    nlohmann::ordered_json e;
    e["label"] = l.label;
    e["n"] = l.n;
    e["correct"] = l.correct;
    e["accuracy"] = l.accuracy ? nlohmann::ordered_json(*l.accuracy) : nlohmann::ordered_json();
    pl.push_back(e);
  }
  if (rep.mean_overlap) j["mean_overlap"] = *rep.mean_overlap;
  if (!rep.groups.empty()) {
    auto& gs = j["groups"] = nlohmann::ordered_json::array();
    for (const auto& g : rep.groups) {
      nlohmann::ordered_json e;
      e["group_label"] = g.group_label;
      e["overlap_bucket"] = g.overlap_bucket;
      e["n"] = g.n;
      e["correct"] = g.correct;
      e["accuracy"] = g.accuracy ? nlohmann::ordered_json(*g.accuracy) : nlohmann::ordered_json();
      gs.push_back(e);
    }
  }
  if (!rep.calibration.empty()) {
    auto& cs = j["calibration"] = nlohmann::ordered_json::array();
    for (const auto& p : rep.calibration) {
      cs.push_back({{"threshold", p.threshold}, {"accuracy", p.accuracy},
                    {"positive_rate", p.positive_rate}});
    }
  }
  j["metadata"] = rep.metadata;
  return j.dump(2) + "\n";
}

}  // namespace forgetset

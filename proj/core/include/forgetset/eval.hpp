#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forgetset/corpus.hpp"
#include "forgetset/nnmodel.hpp"

namespace forgetset {

struct LabelAccuracy {
  std::string label;
  std::size_t n = 0;
  std::size_t correct = 0;
  std::optional<double> accuracy;  // absent when n == 0
};

// One (label group x overlap bucket) cell.
struct GroupCell {
  std::string group_label;     // "positive" or "non-positive"
  std::string overlap_bucket;  // "high" (> mean Jaccard) or "low"
  std::size_t n = 0;
  std::size_t correct = 0;
  std::optional<double> accuracy;
};

struct CalibrationPoint {
  double threshold = 0.0;
  double accuracy = 0.0;
  double positive_rate = 0.0;
};

struct EvalReport {
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::vector<LabelAccuracy> per_label;
  std::optional<double> mean_overlap;
  std::vector<GroupCell> groups;
  std::vector<CalibrationPoint> calibration;
  std::map<std::string, std::string> metadata;
};

// Class probabilities for every example, in dataset order.
std::vector<std::vector<double>> predict_proba(const Model& model, const Dataset& ds);

// Argmax accuracy overall and per label. Throws DataError when ds is empty.
EvalReport evaluate(const Model& model, const Dataset& ds);

// evaluate() plus accuracy per (positive vs non-positive) x (high vs low
// overlap) cell, where high means Jaccard strictly above the dataset mean.
EvalReport grouped_eval(const Model& model, const Dataset& ds,
                        const std::vector<LabelIndex>& positive_labels);

// 0.00, 0.02, ..., 1.00
std::vector<double> default_threshold_grid();

// Predicts positive iff p(positive_class) >= threshold. Binary tasks only;
// thresholds must be ascending.
std::vector<CalibrationPoint> calibration_sweep(const Model& model, const Dataset& ds,
                                                LabelIndex positive_class,
                                                const std::vector<double>& thresholds);

// Smallest threshold attaining the maximum accuracy.
double best_threshold(const std::vector<CalibrationPoint>& points);

struct ReportRow {
  std::string name;
  double in_dist = 0.0;
  double ood = 0.0;
  double avg() const { return 0.5 * (in_dist + ood); }
};

struct FormattedReport {
  std::string text;
  std::string csv;
};

// Table with an Avg. column. Throws ConfigError on an empty row list.
FormattedReport report(const std::vector<ReportRow>& rows);

// Mean and sample standard deviation of per-seed rows sharing a name, in
// first-seen order. Columns report "mean ± std" in percent.
struct AggregateRow {
  std::string name;
  std::size_t n_seeds = 0;
  double in_dist_mean = 0.0, in_dist_std = 0.0;
  double ood_mean = 0.0, ood_std = 0.0;
  double avg_mean = 0.0, avg_std = 0.0;
};

std::vector<AggregateRow> aggregate(const std::vector<std::vector<ReportRow>>& per_seed);
FormattedReport aggregate_report(const std::vector<AggregateRow>& rows);

std::string grouped_csv(const EvalReport& rep);
std::string calibration_csv(const std::vector<CalibrationPoint>& points);
std::string report_json(const EvalReport& rep);

double mean(const std::vector<double>& v);
// Sample (n - 1) standard deviation; 0 for fewer than two values.
double sample_std(const std::vector<double>& v);

}  // namespace forgetset

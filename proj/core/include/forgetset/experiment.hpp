#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "forgetset/eval.hpp"
#include "forgetset/json_io.hpp"
#include "forgetset/ledger.hpp"
#include "forgetset/nnmodel.hpp"
#include "forgetset/robustify.hpp"
#include "forgetset/stats.hpp"
#include "forgetset/synthgen.hpp"
#include "forgetset/trainer.hpp"

namespace forgetset {

// End-to-end synthetic benchmark: shallow producer, two-stage strong model,
// random and loss-ranked controls, from-scratch ablation, calibration.
struct ExperimentConfig {
  SynthConfig synth;
  // When true the run seed replaces synth.seed.
  bool vary_data_seed = true;
  ModelConfig producer_model = ModelConfig::shallow();
  TrainConfig producer_train;
  ModelConfig strong_model = ModelConfig::strong();
  TrainConfig phase1;
  std::optional<TrainConfig> phase2;  // default_phase2(phase1) when absent
  TrainConfig scratch_train;
  std::vector<double> loss_fractions = {0.02, 0.05, 0.10, 0.15, 0.20, 0.33};
  std::vector<double> thresholds = default_threshold_grid();

  TrainConfig resolved_phase2() const { return phase2 ? *phase2 : default_phase2(phase1); }
};

Json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const Json& j);

// Seeds of every stochastic component of one run.
struct RunSeeds {
  std::uint64_t data = 0;
  std::uint64_t producer_init = 0, producer_shuffle = 0;
  std::uint64_t strong_init = 0, phase1_shuffle = 0, phase2_shuffle = 0;
  std::uint64_t random_subset = 0;
  std::uint64_t scratch_init = 0, scratch_shuffle = 0;
};

RunSeeds derive_run_seeds(const ExperimentConfig& cfg, std::uint64_t seed);

struct LossCurvePoint {
  double q = 0.0;
  std::size_t size = 0;
  double in_dist = 0.0;
  double ood = 0.0;
};

struct ExperimentResult {
  std::uint64_t seed = 0;
  RunSeeds seeds;
  std::size_t n_train = 0;
  std::size_t n_forgettables = 0;
  double minority_base_rate = 0.0;
  double minority_rate_forgettables = 0.0;
  GroupedStat overlap_all, overlap_forgettables;
  ForgettingHistogram histogram;
  // never-learned implies incorrect at the final recording, for every run.
  bool never_learned_consistent = true;

  ReportRow phase1, phase2_forgettables, phase2_random;
  std::vector<LossCurvePoint> loss_curve;
  ReportRow scratch_forgettables, scratch_random;

  std::vector<CalibrationPoint> calibration_phase1, calibration_phase2;
  double best_threshold_phase1 = 0.0, best_threshold_phase2 = 0.0;
  EvalReport grouped_phase1, grouped_phase2;  // on the OOD split

  // Rows of the headline table in display order.
  std::vector<ReportRow> table() const;
  Json summary() const;
};

// Runs everything for one seed. With `out_dir`, writes the data splits,
// ledger, losses, forgettable ids, histogram, checkpoints, evaluation
// reports, calibration and loss curves, the table and a manifest.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                                const std::optional<std::filesystem::path>& out_dir = {},
                                bool verbose = false);

// True iff every never-learned row is incorrect at the last recording.
bool never_learned_implies_final_incorrect(const ForgettingLedger& ledger);

// train.jsonl, test_id.jsonl, test_ood.jsonl and manifest.json (resolved
// config plus per-split counts) into `dir`.
void write_synth_outputs(const SynthConfig& cfg, const SynthSplits& splits,
                         const std::filesystem::path& dir);
Json synth_manifest(const SynthConfig& cfg, const SynthSplits& splits);

// Mean and sample std of the headline rows over runs.
FormattedReport experiment_table(const std::vector<ExperimentResult>& runs);
std::string loss_curve_csv(const std::vector<LossCurvePoint>& curve, const ReportRow& forgettables);

}  // namespace forgetset

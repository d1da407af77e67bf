#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "forgetset/corpus.hpp"
#include "forgetset/json_io.hpp"
#include "forgetset/ledger.hpp"
#include "forgetset/nnmodel.hpp"
#include "forgetset/trainer.hpp"

namespace forgetset {

// Phase-2 learning rate relative to phase 1.
inline constexpr double kPhase2LearningRateRatio = 5.0;
inline constexpr std::size_t kPhase2Epochs = 3;

// 3 epochs at phase1.learning_rate / 5 with an independent shuffle seed.
TrainConfig default_phase2(const TrainConfig& phase1);

struct PipelineConfig {
  TrainConfig phase1;
  TrainConfig phase2;
  ModelConfig strong_model = ModelConfig::strong();
  std::uint64_t strong_seed = 0;
};

enum class SubsetKind { forgettables, random, loss_top, explicit_ids };

std::string_view to_string(SubsetKind k);

// Which examples phase 2 trains on and where they came from.
struct SubsetSpec {
  SubsetKind kind = SubsetKind::explicit_ids;
  std::optional<ForgettingLedger> ledger;  // forgettables
  std::size_t random_n = 0;                // random
  std::uint64_t random_seed = 0;
  std::optional<FinalLosses> losses;  // loss_top: exactly one of q / top_n
  std::optional<double> q;
  std::optional<std::size_t> top_n;
  std::vector<ExampleId> ids;  // explicit_ids
  std::string origin;          // file the spec was read from, if any
};

struct ResolvedSubset {
  std::vector<ExampleId> ids;  // ascending
  Json provenance;             // source, parameters, size, id-list hash
};

// Uniform draw of n ids without replacement, returned ascending.
std::vector<ExampleId> random_subset(const Dataset& ds, std::size_t n, std::uint64_t seed);

// Throws DataError if any id is not in `ds`.
ResolvedSubset resolve_subset(const Dataset& ds, const SubsetSpec& spec);

struct ProducerResult {
  std::vector<ExampleId> forgettables;
  ForgettingLedger ledger;
  FinalLosses final_losses;
  Model model;
};

// Trains a fresh shallow model on all of `ds` and returns its forgettables.
ProducerResult produce_forgettables(const Dataset& ds, const ModelConfig& producer_cfg,
                                    std::uint64_t model_seed, const TrainConfig& train_cfg);

struct PipelineOptions {
  // Start phase 2 from this model instead of running phase 1.
  std::optional<Model> phase1_model;
  // When set, phase1.json/.bin and phase2.json/.bin are written here.
  std::optional<std::filesystem::path> checkpoint_dir;
  const TrainHooks* phase2_hooks = nullptr;
};

struct PipelineResult {
  Model phase1;
  Model phase2;
  Json manifest;
  std::vector<std::string> warnings;
};

// Phase 1 trains the strong model on the full set; phase 2 continues from
// those parameters on the subset only with a fresh optimizer. Throws
// DataError("phase-2 subset empty") for an empty subset.
PipelineResult run_pipeline(const Dataset& train, const PipelineConfig& cfg,
                            const ResolvedSubset& subset, const PipelineOptions& options = {});

// Fresh model trained only on the subset.
Model train_from_scratch_on_subset(const Dataset& train, const std::vector<ExampleId>& subset,
                                   const ModelConfig& model_cfg, std::uint64_t model_seed,
                                   const TrainConfig& train_cfg);

}  // namespace forgetset

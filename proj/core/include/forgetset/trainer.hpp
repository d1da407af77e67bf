#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "forgetset/corpus.hpp"
#include "forgetset/ledger.hpp"
#include "forgetset/nnmodel.hpp"

namespace forgetset {

enum class OptimizerKind { sgd, adam };
enum class RecordGranularity { per_epoch, per_presentation };

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  RecordGranularity record = RecordGranularity::per_epoch;
  // Index of the first epoch; per-epoch shuffles are keyed on
  // (seed, epoch index), so a resumed run continues the same schedule.
  std::size_t first_epoch = 0;

  void validate() const;  // throws ConfigError

  bool operator==(const TrainConfig&) const = default;
};

// Plain SGD or bias-corrected Adam over a flat parameter vector. State
// starts fresh for every run.
class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::size_t n_params);
  void step(std::span<double> params, std::span<const double> grad);

 private:
  OptimizerKind kind_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

struct TrainHooks {
  // Called with the dataset position of every example the run reads.
  std::function<void(std::size_t)> on_access;
};

struct TrainResult {
  ForgettingLedger ledger;
  FinalLosses final_losses;
};

// Mini-batch training over the examples at `positions` (all of `ds` when
// empty). Each epoch shuffles, takes mean-reduced gradient steps and then
// records the argmax correctness of every trained example. Parameters are
// kept at float precision after each step. Throws NumericalError on a
// non-finite loss or parameter.
TrainResult train(Model& model, const Dataset& ds, const TrainConfig& cfg,
                  std::span<const std::size_t> positions = {},
                  const TrainHooks* hooks = nullptr);

// Positions of the given ids in `ds`.
std::vector<std::size_t> positions_of(const Dataset& ds, std::span<const ExampleId> ids);

}  // namespace forgetset

#include "forgetset/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "forgetset/errors.hpp"
#include "forgetset/rng.hpp"

namespace forgetset {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (optimizer == OptimizerKind::adam) {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
  }
}

Optimizer::Optimizer(const TrainConfig& cfg, std::size_t n_params)
    : kind_(cfg.optimizer),
      lr_(cfg.learning_rate),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.epsilon) {
  if (kind_ == OptimizerKind::adam) {
    m_.assign(n_params, 0.0);
    v_.assign(n_params, 0.0);
  }
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
  if (kind_ == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i] = static_cast<float>(params[i] - lr_ * grad[i]);
    }
    return;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] = static_cast<float>(params[i] - lr_ * m_hat / (std::sqrt(v_hat) + eps_));
  }
}

std::vector<std::size_t> positions_of(const Dataset& ds, std::span<const ExampleId> ids) {
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(ds.position_of(id));
  return out;
}

TrainResult train(Model& model, const Dataset& ds, const TrainConfig& cfg,
                  std::span<const std::size_t> positions, const TrainHooks* hooks) {
  cfg.validate();
  if (model.vocab_size() != ds.vocab().size()) {
    throw ConfigError("model vocabulary size " + std::to_string(model.vocab_size()) +
                      " does not match dataset vocabulary size " +
                      std::to_string(ds.vocab().size()));
  }
  if (ds.labels().size() > model.config().n_classes) {
    throw ConfigError("dataset has more labels than the model has classes");
  }
  std::vector<std::size_t> rows;
  if (positions.empty()) {
    rows.resize(ds.size());
    std::iota(rows.begin(), rows.end(), 0);
  } else {
    rows.assign(positions.begin(), positions.end());
  }
  if (rows.empty()) throw DataError("training set is empty");
  for (auto p : rows) {
    if (p >= ds.size()) throw DataError("training position out of range");
  }

  auto touch = [&](std::size_t p) {
    if (hooks && hooks->on_access) hooks->on_access(p);
  };

  std::vector<ExampleId> ids;
  ids.reserve(rows.size());
  for (auto p : rows) ids.push_back(ds[p].id);
  TrainResult result{ForgettingLedger(ids), FinalLosses{ids, std::vector<double>(rows.size())}};

  const std::size_t n = rows.size();
  Optimizer opt(cfg, model.parameter_count());
  std::vector<double> grad(model.parameter_count());
  Workspace ws;
  // Row indices into `rows`, reshuffled every epoch.
  std::vector<std::size_t> order(n);
  std::vector<std::uint8_t> presented(n);
  std::vector<std::uint8_t> column(n);

  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const std::size_t epoch = cfg.first_epoch + e;
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, epoch));
    rng.shuffle(std::span<std::size_t>(order));

    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_no) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t r = order[k];
        const std::size_t p = rows[r];
        touch(p);
        const double l = accumulate_gradient(model, ds.s1_indices(p), ds.s2_indices(p),
                                              ds[p].label, grad, scale, ws);
        presented[r] = argmax(ws.probs) == ds[p].label;
        batch_loss += l;
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_no));
      }
      opt.step(model.parameters(), grad);
      if (!model.all_finite()) {
        throw NumericalError("non-finite parameter after epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_no));
      }
    }

    const bool last = e + 1 == cfg.epochs;
    if (cfg.record == RecordGranularity::per_presentation) {
      result.ledger.append_recording(presented);
    }
    if (cfg.record == RecordGranularity::per_epoch || last) {
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t p = rows[r];
        touch(p);
        const double l = loss(model, ds.s1_indices(p), ds.s2_indices(p), ds[p].label, ws);
        column[r] = argmax(ws.probs) == ds[p].label;
        if (last) result.final_losses.loss[r] = l;
      }
      if (cfg.record == RecordGranularity::per_epoch) result.ledger.append_recording(column);
    }
  }
  return result;
}

}  // namespace forgetset

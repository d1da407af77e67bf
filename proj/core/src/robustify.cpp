#include "forgetset/robustify.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "forgetset/checkpoint.hpp"
#include "forgetset/errors.hpp"
#include "forgetset/rng.hpp"

namespace forgetset {

TrainConfig default_phase2(const TrainConfig& phase1) {
  TrainConfig c = phase1;
  c.epochs = kPhase2Epochs;
  c.learning_rate = phase1.learning_rate / kPhase2LearningRateRatio;
  c.seed = derive_seed(phase1.seed, 2);
  c.first_epoch = 0;
  return c;
}

std::string_view to_string(SubsetKind k) {
  switch (k) {
    case SubsetKind::forgettables: return "forgettables";
    case SubsetKind::random: return "random";
    case SubsetKind::loss_top: return "loss_top";
    case SubsetKind::explicit_ids: return "explicit";
  }
  return "explicit";
}

std::vector<ExampleId> random_subset(const Dataset& ds, std::size_t n, std::uint64_t seed) {
  if (n > ds.size()) {
    throw ConfigError("random subset of " + std::to_string(n) + " exceeds dataset size " +
                      std::to_string(ds.size()));
  }
  std::vector<ExampleId> ids(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) ids[i] = ds[i].id;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(ids.size() - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(n);
  std::sort(ids.begin(), ids.end());
  return ids;
}

ResolvedSubset resolve_subset(const Dataset& ds, const SubsetSpec& spec) {
  ResolvedSubset out;
  Json& prov = out.provenance;
  prov["source"] = to_string(spec.kind);
  if (!spec.origin.empty()) prov["origin"] = spec.origin;
  switch (spec.kind) {
    case SubsetKind::forgettables:
      if (!spec.ledger) throw ConfigError("forgettables subset needs a ledger");
      out.ids = extract_forgettables(*spec.ledger);
      break;
    case SubsetKind::random:
      out.ids = random_subset(ds, spec.random_n, spec.random_seed);
      prov["n"] = spec.random_n;
      prov["seed"] = spec.random_seed;
      break;
    case SubsetKind::loss_top:
      if (!spec.losses) throw ConfigError("loss_top subset needs final losses");
      if (spec.q.has_value() == spec.top_n.has_value()) {
        throw ConfigError("loss_top subset needs exactly one of q or N");
      }
      out.ids = spec.q ? rank_by_loss_fraction(*spec.losses, *spec.q)
                       : rank_by_loss(*spec.losses, *spec.top_n);
      if (spec.q) prov["q"] = *spec.q;
      if (spec.top_n) prov["top_n"] = *spec.top_n;
      std::sort(out.ids.begin(), out.ids.end());
      break;
    case SubsetKind::explicit_ids:
      out.ids = spec.ids;
      std::sort(out.ids.begin(), out.ids.end());
      out.ids.erase(std::unique(out.ids.begin(), out.ids.end()), out.ids.end());
      break;
  }
  for (auto id : out.ids) {
    if (id >= ds.size()) throw DataError("subset id " + std::to_string(id) + " not in dataset");
  }
  prov["size"] = out.ids.size();
  prov["hash"] = id_list_hash(out.ids);
  return out;
}

ProducerResult produce_forgettables(const Dataset& ds, const ModelConfig& producer_cfg,
                                    std::uint64_t model_seed, const TrainConfig& train_cfg) {
  Model model = Model::init(producer_cfg, ds.vocab().size(), model_seed);
  TrainResult tr = train(model, ds, train_cfg);
  auto ids = extract_forgettables(tr.ledger);
  return ProducerResult{std::move(ids), std::move(tr.ledger), std::move(tr.final_losses),
                        std::move(model)};
}

PipelineResult run_pipeline(const Dataset& train_set, const PipelineConfig& cfg,
                            const ResolvedSubset& subset, const PipelineOptions& options) {
  if (subset.ids.empty()) throw DataError("phase-2 subset empty");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> warnings;
  if (cfg.phase2.learning_rate > cfg.phase1.learning_rate) {
    warnings.push_back("phase-2 learning rate exceeds phase-1 learning rate");
  }
  const auto positions = positions_of(train_set, subset.ids);

  Model phase1 = options.phase1_model
                     ? *options.phase1_model
                     : Model::init(cfg.strong_model, train_set.vocab().size(), cfg.strong_seed);
  if (!options.phase1_model) train(phase1, train_set, cfg.phase1);

  Model phase2 = phase1;
  train(phase2, train_set, cfg.phase2, positions, options.phase2_hooks);
  const auto t1 = std::chrono::steady_clock::now();

  Json m;
  m["phase1"] = to_json(cfg.phase1);
  m["phase2"] = to_json(cfg.phase2);
  m["strong_model"] = to_json(cfg.strong_model);
  m["strong_seed"] = cfg.strong_seed;
  m["phase1_from_checkpoint"] = options.phase1_model.has_value();
  m["subset"] = subset.provenance;
  if (options.checkpoint_dir) {
    const auto p1 = *options.checkpoint_dir / "phase1.json";
    const auto p2 = *options.checkpoint_dir / "phase2.json";
    save_checkpoint(phase1, train_set.vocab(), p1);
    save_checkpoint(phase2, train_set.vocab(), p2);
    m["checkpoints"] = {{"phase1", p1.filename().string()}, {"phase2", p2.filename().string()}};
  }
  m["warnings"] = warnings;
  m["wall_clock_seconds"] = std::chrono::duration<double>(t1 - t0).count();
  return PipelineResult{std::move(phase1), std::move(phase2), std::move(m), std::move(warnings)};
}

Model train_from_scratch_on_subset(const Dataset& train_set, const std::vector<ExampleId>& subset,
                                   const ModelConfig& model_cfg, std::uint64_t model_seed,
                                   const TrainConfig& train_cfg) {
  if (subset.empty()) throw DataError("training subset empty");
  Model model = Model::init(model_cfg, train_set.vocab().size(), model_seed);
  const auto positions = positions_of(train_set, subset);
  train(model, train_set, train_cfg, positions);
  return model;
}

}  // namespace forgetset

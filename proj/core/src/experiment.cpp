#include "forgetset/experiment.hpp"

#include <cstdio>
#include <iostream>

#include "forgetset/checkpoint.hpp"
#include "forgetset/errors.hpp"
#include "forgetset/io_util.hpp"
#include "forgetset/rng.hpp"

namespace forgetset {

namespace {

enum SeedStream : std::uint64_t {
  kProducerInit = 101,
  kProducerShuffle,
  kStrongInit,
  kPhase1Shuffle,
  kPhase2Shuffle,
  kRandomSubset,
  kScratchInit,
  kScratchShuffle,
};

double minority_rate(const Dataset& ds, const std::vector<ExampleId>& ids) {
  if (ids.empty()) return 0.0;
  std::size_t m = 0;
  for (auto id : ids) m += ds[ds.position_of(id)].minority.value_or(false);
  return static_cast<double>(m) / static_cast<double>(ids.size());
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Json grouped_stat_json(const GroupedStat& g) {
  return Json{{"group_pos", g.group_pos}, {"group_neg", g.group_neg}, {"n_pos", g.n_pos},
              {"n_neg", g.n_neg}};
}

Json row_json(const ReportRow& r) {
  return Json{{"name", r.name}, {"in_dist", r.in_dist}, {"ood", r.ood}, {"avg", r.avg()}};
}

}  // namespace

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["version"] = kConfigVersion;
  j["synth"] = to_json(c.synth);
  j["vary_data_seed"] = c.vary_data_seed;
  j["producer"] = {{"model", to_json(c.producer_model)}, {"train", to_json(c.producer_train)}};
  j["strong"] = {{"model", to_json(c.strong_model)},
                 {"phase1", to_json(c.phase1)},
                 {"phase2", to_json(c.resolved_phase2())}};
  j["scratch"] = {{"train", to_json(c.scratch_train)}};
  j["loss_fractions"] = c.loss_fractions;
  j["thresholds"] = c.thresholds;
  return j;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  require_version(j, "experiment config");
  require_known_keys(j, {"version", "synth", "vary_data_seed", "producer", "strong", "scratch",
                         "loss_fractions", "thresholds"},
                     "experiment config");
  ExperimentConfig c;
  if (j.contains("synth")) {
    Json s = j["synth"];
    c.synth = synth_config_from_json(s);
  }
  if (j.contains("vary_data_seed")) {
    if (!j["vary_data_seed"].is_boolean()) throw ConfigError("vary_data_seed must be a boolean");
    c.vary_data_seed = j["vary_data_seed"].get<bool>();
  }
  if (j.contains("producer")) {
    const auto& p = j["producer"];
    require_known_keys(p, {"model", "train"}, "producer");
    if (p.contains("model")) c.producer_model = model_config_from_json(p["model"]);
    if (p.contains("train")) c.producer_train = train_config_from_json(p["train"]);
  }
  if (j.contains("strong")) {
    const auto& s = j["strong"];
    require_known_keys(s, {"model", "phase1", "phase2"}, "strong");
    if (s.contains("model")) c.strong_model = model_config_from_json(s["model"]);
    if (s.contains("phase1")) c.phase1 = train_config_from_json(s["phase1"]);
    if (s.contains("phase2")) {
      c.phase2 = train_config_from_json(s["phase2"], default_phase2(c.phase1));
    }
  }
  if (j.contains("scratch")) {
    const auto& s = j["scratch"];
    require_known_keys(s, {"train"}, "scratch");
    if (s.contains("train")) c.scratch_train = train_config_from_json(s["train"]);
  }
  try {
    if (j.contains("loss_fractions")) c.loss_fractions = j["loss_fractions"].get<std::vector<double>>();
    if (j.contains("thresholds")) c.thresholds = j["thresholds"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("loss_fractions and thresholds must be arrays of numbers");
  }
  for (double q : c.loss_fractions) {
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("loss fractions must lie in (0, 1]");
  }
  return c;
}

RunSeeds derive_run_seeds(const ExperimentConfig& cfg, std::uint64_t seed) {
  RunSeeds s;
  s.data = cfg.vary_data_seed ? seed : cfg.synth.seed;
  s.producer_init = derive_seed(seed, kProducerInit);
  s.producer_shuffle = derive_seed(seed, kProducerShuffle);
  s.strong_init = derive_seed(seed, kStrongInit);
  s.phase1_shuffle = derive_seed(seed, kPhase1Shuffle);
  s.phase2_shuffle = derive_seed(seed, kPhase2Shuffle);
  s.random_subset = derive_seed(seed, kRandomSubset);
  s.scratch_init = derive_seed(seed, kScratchInit);
  s.scratch_shuffle = derive_seed(seed, kScratchShuffle);
  return s;
}

Json synth_manifest(const SynthConfig& cfg, const SynthSplits& splits) {
  auto counts = [](const Dataset& ds) {
    std::size_t pos = 0, minority = 0;
    for (const auto& ex : ds.examples()) {
      pos += ds.labels()[ex.label] == kPositiveLabel;
      minority += ex.minority.value_or(false);
    }
    return Json{{"n", ds.size()}, {"positive", pos}, {"minority", minority}};
  };
  Json j;
  j["config"] = to_json(cfg);
  j["labels"] = splits.train.labels();
  j["vocab_size"] = splits.train.vocab().size();
  j["splits"] = {{"train", counts(splits.train)},
                 {"test_id", counts(splits.test_id)},
                 {"test_ood", counts(splits.test_ood)}};
  j["files"] = {{"train", "train.jsonl"}, {"test_id", "test_id.jsonl"}, {"test_ood", "test_ood.jsonl"}};
  return j;
}

void write_synth_outputs(const SynthConfig& cfg, const SynthSplits& splits,
                         const std::filesystem::path& dir) {
  save_jsonl(splits.train, dir / "train.jsonl");
  save_jsonl(splits.test_id, dir / "test_id.jsonl");
  save_jsonl(splits.test_ood, dir / "test_ood.jsonl");
  write_text_file(dir / "manifest.json", synth_manifest(cfg, splits).dump(2) + "\n");
}

bool never_learned_implies_final_incorrect(const ForgettingLedger& ledger) {
  if (ledger.n_recordings() == 0) return true;
  for (std::size_t i = 0; i < ledger.n_examples(); ++i) {
    if (ledger.never_learned(i) && ledger.correct(i, ledger.n_recordings() - 1)) return false;
  }
  return true;
}

std::vector<ReportRow> ExperimentResult::table() const {
  std::vector<ReportRow> rows = {phase1, phase2_forgettables, phase2_random};
  for (const auto& p : loss_curve) {
    rows.push_back({"strong+loss" + fmt("%.0f", 100.0 * p.q) + "%", p.in_dist, p.ood});
  }
  rows.push_back(scratch_forgettables);
  rows.push_back(scratch_random);
  return rows;
}

Json ExperimentResult::summary() const {
  Json j;
  j["seed"] = seed;
  j["seeds"] = {{"data", seeds.data},
                {"producer_init", seeds.producer_init},
                {"producer_shuffle", seeds.producer_shuffle},
                {"strong_init", seeds.strong_init},
                {"phase1_shuffle", seeds.phase1_shuffle},
                {"phase2_shuffle", seeds.phase2_shuffle},
                {"random_subset", seeds.random_subset},
                {"scratch_init", seeds.scratch_init},
                {"scratch_shuffle", seeds.scratch_shuffle}};
  j["n_train"] = n_train;
  j["n_forgettables"] = n_forgettables;
  j["minority_base_rate"] = minority_base_rate;
  j["minority_rate_forgettables"] = minority_rate_forgettables;
  j["overlap_all"] = grouped_stat_json(overlap_all);
  j["overlap_forgettables"] = grouped_stat_json(overlap_forgettables);
  Json h;
  for (const auto& [k, v] : histogram.learned) h[std::to_string(k)] = v;
  h["never"] = histogram.never_learned;
  j["histogram"] = h;
  j["never_learned_consistent"] = never_learned_consistent;
  auto& rows = j["rows"] = Json::array();
  for (const auto& r : table()) rows.push_back(row_json(r));
  j["best_threshold_phase1"] = best_threshold_phase1;
  j["best_threshold_phase2"] = best_threshold_phase2;
  return j;
}

std::string loss_curve_csv(const std::vector<LossCurvePoint>& curve, const ReportRow& forg) {
  std::string out = "source,fraction,size,in_dist_acc,ood_acc\n";
  for (const auto& p : curve) {
    out += "loss_top," + fmt("%.4f", p.q) + "," + std::to_string(p.size) + "," +
           fmt("%.6f", p.in_dist) + "," + fmt("%.6f", p.ood) + "\n";
  }
  out += "forgettables,NA,NA," + fmt("%.6f", forg.in_dist) + "," + fmt("%.6f", forg.ood) + "\n";
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                                const std::optional<std::filesystem::path>& out_dir,
                                bool verbose) {
  namespace fs = std::filesystem;
  auto log = [&](const std::string& msg) {
    if (verbose) std::cerr << "[seed " << seed << "] " << msg << "\n";
  };
  ExperimentResult res;
  res.seed = seed;
  res.seeds = derive_run_seeds(cfg, seed);
  const RunSeeds& s = res.seeds;

  SynthConfig synth = cfg.synth;
  synth.seed = s.data;
  const SynthSplits data = generate(synth);
  const Dataset& train_set = data.train;
  const LabelIndex positive = train_set.vocab().label_index(kPositiveLabel);
  res.n_train = train_set.size();

  // Shallow producer.
  log("producer");
  TrainConfig producer_train = cfg.producer_train;
  producer_train.seed = s.producer_shuffle;
  ProducerResult prod =
      produce_forgettables(train_set, cfg.producer_model, s.producer_init, producer_train);
  res.never_learned_consistent &= never_learned_implies_final_incorrect(prod.ledger);
  res.n_forgettables = prod.forgettables.size();
  std::vector<ExampleId> all_ids(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i) all_ids[i] = train_set[i].id;
  res.minority_base_rate = minority_rate(train_set, all_ids);
  res.minority_rate_forgettables = minority_rate(train_set, prod.forgettables);
  res.histogram = histogram(prod.ledger);
  res.overlap_all = overlap_by_label(train_set, std::nullopt, {positive});
  if (!prod.forgettables.empty()) {
    try {
      res.overlap_forgettables = overlap_by_label(train_set, prod.forgettables, {positive});
    } catch (const DataError&) {
      // A one-sided forgettable set leaves one group empty; keep zeros.
    }
  }

  auto eval_row = [&](const std::string& name, const Model& m) {
    return ReportRow{name, evaluate(m, data.test_id).accuracy, evaluate(m, data.test_ood).accuracy};
  };

  // Phase 1 once; every phase-2 variant starts from it.
  log("phase 1");
  PipelineConfig pcfg;
  pcfg.strong_model = cfg.strong_model;
  pcfg.strong_seed = s.strong_init;
  pcfg.phase1 = cfg.phase1;
  pcfg.phase1.seed = s.phase1_shuffle;
  pcfg.phase2 = cfg.resolved_phase2();
  pcfg.phase2.seed = s.phase2_shuffle;
  Model phase1 = Model::init(cfg.strong_model, train_set.vocab().size(), s.strong_init);
  const TrainResult phase1_run = train(phase1, train_set, pcfg.phase1);
  res.never_learned_consistent &= never_learned_implies_final_incorrect(phase1_run.ledger);
  res.phase1 = eval_row("strong", phase1);

  PipelineOptions from_phase1;
  from_phase1.phase1_model = phase1;
  auto run_phase2 = [&](const SubsetSpec& spec) {
    const ResolvedSubset subset = resolve_subset(train_set, spec);
    return run_pipeline(train_set, pcfg, subset, from_phase1);
  };

  log("phase 2 on forgettables (" + std::to_string(prod.forgettables.size()) + ")");
  SubsetSpec forg_spec;
  forg_spec.kind = SubsetKind::forgettables;
  forg_spec.ledger = prod.ledger;
  std::optional<PipelineResult> forg_run;
  if (!prod.forgettables.empty()) {
    forg_run = run_phase2(forg_spec);
    res.phase2_forgettables = eval_row("strong+forgettables", forg_run->phase2);
  } else {
    res.phase2_forgettables = ReportRow{"strong+forgettables", res.phase1.in_dist, res.phase1.ood};
  }

  log("phase 2 on random subset");
  SubsetSpec rand_spec;
  rand_spec.kind = SubsetKind::random;
  rand_spec.random_n = std::max<std::size_t>(1, prod.forgettables.size());
  rand_spec.random_seed = s.random_subset;
  const ResolvedSubset rand_subset = resolve_subset(train_set, rand_spec);
  const PipelineResult rand_run = run_pipeline(train_set, pcfg, rand_subset, from_phase1);
  res.phase2_random = eval_row("strong+random", rand_run.phase2);

  log("loss-ranked subsets");
  for (double q : cfg.loss_fractions) {
    SubsetSpec spec;
    spec.kind = SubsetKind::loss_top;
    spec.losses = prod.final_losses;
    spec.q = q;
    const ResolvedSubset subset = resolve_subset(train_set, spec);
    const PipelineResult run = run_pipeline(train_set, pcfg, subset, from_phase1);
    res.loss_curve.push_back({q, subset.ids.size(), evaluate(run.phase2, data.test_id).accuracy,
                              evaluate(run.phase2, data.test_ood).accuracy});
  }

  log("from-scratch ablation");
  TrainConfig scratch = cfg.scratch_train;
  scratch.seed = s.scratch_shuffle;
  if (!prod.forgettables.empty()) {
    const Model mf = train_from_scratch_on_subset(train_set, prod.forgettables, cfg.strong_model,
                                                  s.scratch_init, scratch);
    res.scratch_forgettables = eval_row("scratch:forgettables", mf);
  } else {
    res.scratch_forgettables = ReportRow{"scratch:forgettables", 0.0, 0.0};
  }
  const Model mr = train_from_scratch_on_subset(train_set, rand_subset.ids, cfg.strong_model,
                                                s.scratch_init, scratch);
  res.scratch_random = eval_row("scratch:random", mr);

  log("calibration");
  const Model& phase2 = forg_run ? forg_run->phase2 : phase1;
  res.calibration_phase1 = calibration_sweep(phase1, data.test_ood, positive, cfg.thresholds);
  res.calibration_phase2 = calibration_sweep(phase2, data.test_ood, positive, cfg.thresholds);
  res.best_threshold_phase1 = best_threshold(res.calibration_phase1);
  res.best_threshold_phase2 = best_threshold(res.calibration_phase2);
  res.grouped_phase1 = grouped_eval(phase1, data.test_ood, {positive});
  res.grouped_phase2 = grouped_eval(phase2, data.test_ood, {positive});

  if (out_dir) {
    const fs::path root = *out_dir;
    fs::create_directories(root / "data");
    fs::create_directories(root / "producer");
    fs::create_directories(root / "strong");
    fs::create_directories(root / "eval");
    write_synth_outputs(synth, data, root / "data");
    write_ledger_csv(prod.ledger, root / "producer" / "ledger.csv");
    write_losses_csv(prod.final_losses, root / "producer" / "losses.csv");
    write_id_list(prod.forgettables, root / "producer" / "forgettables.txt");
    write_text_file(root / "producer" / "histogram.csv", histogram_to_csv(res.histogram));
    save_checkpoint(prod.model, train_set.vocab(), root / "producer" / "model.json");
    write_ledger_csv(phase1_run.ledger, root / "strong" / "phase1_ledger.csv");
    save_checkpoint(phase1, train_set.vocab(), root / "strong" / "phase1.json");
    if (forg_run) {
      save_checkpoint(forg_run->phase2, train_set.vocab(), root / "strong" / "phase2_forgettables.json");
    }
    save_checkpoint(rand_run.phase2, train_set.vocab(), root / "strong" / "phase2_random.json");
    write_id_list(rand_subset.ids, root / "strong" / "random_subset.txt");
    write_text_file(root / "eval" / "grouped_phase1.csv", grouped_csv(res.grouped_phase1));
    write_text_file(root / "eval" / "grouped_phase2.csv", grouped_csv(res.grouped_phase2));
    write_text_file(root / "eval" / "calibration_phase1.csv", calibration_csv(res.calibration_phase1));
    write_text_file(root / "eval" / "calibration_phase2.csv", calibration_csv(res.calibration_phase2));
    write_text_file(root / "eval" / "loss_curve.csv",
                    loss_curve_csv(res.loss_curve, res.phase2_forgettables));
    const FormattedReport rep = report(res.table());
    write_text_file(root / "report.csv", rep.csv);
    write_text_file(root / "report.txt", rep.text);
    Json manifest;
    manifest["config"] = to_json(cfg);
    manifest["summary"] = res.summary();
    if (forg_run) manifest["phase2_forgettables"] = forg_run->manifest["subset"];
    manifest["phase2_random"] = rand_run.manifest["subset"];
    write_text_file(root / "manifest.json", manifest.dump(2) + "\n");
  }
  return res;
}

FormattedReport experiment_table(const std::vector<ExperimentResult>& runs) {
  std::vector<std::vector<ReportRow>> per_seed;
  for (const auto& r : runs) per_seed.push_back(r.table());
  return aggregate_report(aggregate(per_seed));
}

}  // namespace forgetset

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "forgetset/checkpoint.hpp"
#include "forgetset/errors.hpp"
#include "forgetset/eval.hpp"
#include "forgetset/experiment.hpp"
#include "forgetset/io_util.hpp"
#include "forgetset/json_io.hpp"
#include "forgetset/ledger.hpp"
#include "forgetset/robustify.hpp"
#include "forgetset/stats.hpp"
#include "forgetset/synthgen.hpp"
#include "forgetset/trainer.hpp"

namespace forgetset::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string seeds = "1,2,3,4,5";
  std::string out;
  std::string out_dir;
  std::string data;
  std::string ledger;
  std::string ckpt;
  std::string subset;
  std::string hist;
  std::string role = "producer";
  std::vector<std::string> positive = {std::string(kPositiveLabel)};
  std::vector<std::string> rows;
  std::vector<std::string> runs;
  bool quiet = false;
};

// Paths a command may create. On failure the ones that did not exist
// beforehand are removed again.
class Outputs {
 public:
  void declare(const fs::path& p) {
    if (p.empty()) return;
    if (!fs::exists(p)) fresh_.push_back(p);
  }
  void rollback() {
    std::error_code ec;
    for (auto it = fresh_.rbegin(); it != fresh_.rend(); ++it) fs::remove_all(*it, ec);
  }

 private:
  std::vector<fs::path> fresh_;
};

ExperimentConfig load_config(const Options& o) {
  if (o.config.empty()) return ExperimentConfig{};
  return experiment_config_from_json(parse_json_file(o.config));
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required flag ") + flag);
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("invalid seed '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("no seeds given");
  if (std::set<std::uint64_t>(out.begin(), out.end()).size() != out.size()) {
    throw ConfigError("seeds must be distinct");
  }
  return out;
}

std::vector<LabelIndex> label_indices(const Vocabulary& vocab, const std::vector<std::string>& names) {
  std::vector<LabelIndex> out;
  for (const auto& n : names) out.push_back(vocab.label_index(n));
  return out;
}

void print(const Options& o, const std::string& text) {
  if (!o.quiet) std::cout << text;
}

int cmd_gen(const Options& o, Outputs& outs) {
  require(o.out_dir, "--out-dir");
  const ExperimentConfig cfg = load_config(o);
  SynthConfig synth = cfg.synth;
  if (o.seed) synth.seed = derive_run_seeds(cfg, *o.seed).data;
  const SynthSplits splits = generate(synth);
  outs.declare(o.out_dir);
  fs::create_directories(o.out_dir);
  write_synth_outputs(synth, splits, o.out_dir);
  print(o, "wrote " + std::to_string(splits.train.size()) + " train, " +
               std::to_string(splits.test_id.size()) + " in-dist, " +
               std::to_string(splits.test_ood.size()) + " ood examples to " + o.out_dir + "\n");
  return kOk;
}

int cmd_train(const Options& o, Outputs& outs) {
  require(o.data, "--data");
  require(o.out_dir, "--out-dir");
  const ExperimentConfig cfg = load_config(o);
  const RunSeeds seeds = derive_run_seeds(cfg, o.seed.value_or(0));
  const Dataset ds = load_jsonl(o.data);

  ModelConfig mcfg;
  TrainConfig tcfg;
  std::uint64_t init_seed = 0;
  if (o.role == "producer") {
    mcfg = cfg.producer_model;
    tcfg = cfg.producer_train;
    init_seed = seeds.producer_init;
    tcfg.seed = seeds.producer_shuffle;
  } else if (o.role == "strong") {
    mcfg = cfg.strong_model;
    tcfg = cfg.phase1;
    init_seed = seeds.strong_init;
    tcfg.seed = seeds.phase1_shuffle;
  } else {
    throw ConfigError("--role must be producer or strong");
  }

  Model model = Model::init(mcfg, ds.vocab().size(), init_seed);
  const TrainResult r = train(model, ds, tcfg);
  const fs::path dir = o.out_dir;
  outs.declare(dir);
  fs::create_directories(dir);
  for (const char* f : {"model.json", "model.bin", "ledger.csv", "losses.csv"}) outs.declare(dir / f);
  save_checkpoint(model, ds.vocab(), dir / "model.json");
  write_ledger_csv(r.ledger, dir / "ledger.csv");
  write_losses_csv(r.final_losses, dir / "losses.csv");
  print(o, "trained " + std::string(o.role) + " model for " + std::to_string(tcfg.epochs) +
               " epochs; " + std::to_string(extract_forgettables(r.ledger).size()) +
               " forgettable examples\n");
  return kOk;
}

int cmd_forget(const Options& o, Outputs& outs) {
  require(o.ledger, "--ledger");
  require(o.out, "--out");
  const ForgettingLedger ledger = read_ledger_csv(o.ledger);
  const auto ids = extract_forgettables(ledger);
  outs.declare(o.out);
  write_id_list(ids, o.out);
  const ForgettingHistogram h = histogram(ledger);
  if (!o.hist.empty()) {
    outs.declare(o.hist);
    write_text_file(o.hist, histogram_to_csv(h));
  }
  print(o, std::to_string(ids.size()) + " of " + std::to_string(ledger.n_examples()) +
               " examples forgettable (" + std::to_string(h.never_learned) + " never learned)\n");
  return kOk;
}

std::string stat_row(const std::string& name, const std::string& scope, const GroupedStat& g) {
  return name + "," + scope + "," + format_double(g.group_pos) + "," + format_double(g.group_neg) +
         "," + std::to_string(g.n_pos) + "," + std::to_string(g.n_neg) + "\n";
}

int cmd_stats(const Options& o, Outputs& outs) {
  require(o.data, "--data");
  const Dataset ds = load_jsonl(o.data);
  const auto positive = label_indices(ds.vocab(), o.positive);
  std::vector<LabelIndex> negative;
  for (LabelIndex l = 0; l < ds.labels().size(); ++l) {
    if (std::find(positive.begin(), positive.end(), l) == positive.end()) negative.push_back(l);
  }
  std::string csv = "statistic,scope,group_pos,group_neg,n_pos,n_neg\n";
  csv += stat_row("overlap", "all", overlap_by_label(ds, std::nullopt, positive));
  csv += stat_row("negation", "all", keyword_rate_by_label(ds, std::nullopt, kDefaultNegationKeywords, negative));
  if (!o.subset.empty()) {
    const auto ids = read_id_list(o.subset);
    csv += stat_row("overlap", "subset", overlap_by_label(ds, ids, positive));
    csv += stat_row("negation", "subset", keyword_rate_by_label(ds, ids, kDefaultNegationKeywords, negative));
  }
  if (!o.out.empty()) {
    outs.declare(o.out);
    write_text_file(o.out, csv);
  }
  print(o, csv);
  return kOk;
}

// A subset spec is either a plain id list or a JSON object:
//   {"version":1, "source":"forgettables", "ledger":"ledger.csv"}
//   {"version":1, "source":"random", "n":500, "seed":3}
//   {"version":1, "source":"loss_top", "losses":"losses.csv", "q":0.1 | "top_n":500}
//   {"version":1, "source":"explicit", "ids":"ids.txt"}
// Relative paths are resolved against the spec's directory.
SubsetSpec load_subset_spec(const std::string& path) {
  SubsetSpec spec;
  spec.origin = path;
  if (fs::path(path).extension() != ".json") {
    spec.kind = SubsetKind::explicit_ids;
    spec.ids = read_id_list(path);
    return spec;
  }
  const Json j = parse_json_file(path);
  require_version(j, "subset spec");
  const fs::path base = fs::path(path).parent_path();
  auto file = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
      throw ConfigError(path + ": missing string field '" + key + "'");
    }
    const fs::path p = j[key].get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  const std::string source = j.value("source", "");
  try {
    if (source == "forgettables") {
      require_known_keys(j, {"version", "source", "ledger"}, "subset spec");
      spec.kind = SubsetKind::forgettables;
      spec.ledger = read_ledger_csv(file("ledger"));
    } else if (source == "random") {
      require_known_keys(j, {"version", "source", "n", "seed"}, "subset spec");
      spec.kind = SubsetKind::random;
      spec.random_n = j.at("n").get<std::size_t>();
      spec.random_seed = j.value("seed", std::uint64_t{0});
    } else if (source == "loss_top") {
      require_known_keys(j, {"version", "source", "losses", "q", "top_n"}, "subset spec");
      spec.kind = SubsetKind::loss_top;
      spec.losses = read_losses_csv(file("losses"));
      if (j.contains("q")) spec.q = j["q"].get<double>();
      if (j.contains("top_n")) spec.top_n = j["top_n"].get<std::size_t>();
    } else if (source == "explicit") {
      require_known_keys(j, {"version", "source", "ids"}, "subset spec");
      spec.kind = SubsetKind::explicit_ids;
      spec.ids = read_id_list(file("ids"));
    } else {
      throw ConfigError(path + ": unknown subset source '" + source + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return spec;
}

int cmd_robustify(const Options& o, Outputs& outs) {
  require(o.data, "--data");
  require(o.subset, "--subset");
  require(o.out_dir, "--out-dir");
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load_config(o);
  const RunSeeds seeds = derive_run_seeds(cfg, o.seed.value_or(0));
  PipelineConfig pcfg;
  pcfg.strong_model = cfg.strong_model;
  pcfg.strong_seed = seeds.strong_init;
  pcfg.phase1 = cfg.phase1;
  pcfg.phase1.seed = seeds.phase1_shuffle;
  pcfg.phase2 = cfg.resolved_phase2();
  pcfg.phase2.seed = seeds.phase2_shuffle;

  Dataset ds = load_jsonl(o.data);
  PipelineOptions opt;
  if (!o.ckpt.empty()) {
    Checkpoint ck = load_checkpoint(o.ckpt);
    ds = ds.reindexed(ck.vocab);
    opt.phase1_model = std::move(ck.model);
  }
  const ResolvedSubset subset = resolve_subset(ds, load_subset_spec(o.subset));

  const fs::path dir = o.out_dir;
  outs.declare(dir);
  fs::create_directories(dir);
  for (const char* f : {"phase1.json", "phase1.bin", "phase2.json", "phase2.bin", "manifest.json"}) {
    outs.declare(dir / f);
  }
  opt.checkpoint_dir = dir;
  PipelineResult res = run_pipeline(ds, pcfg, subset, opt);
  res.manifest["seed"] = o.seed.value_or(0);
  if (!o.ckpt.empty()) res.manifest["phase1_from"] = o.ckpt;
  res.manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text_file(dir / "manifest.json", res.manifest.dump(2) + "\n");
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  print(o, "phase 2 trained on " + std::to_string(subset.ids.size()) + " examples; checkpoints in " +
               o.out_dir + "\n");
  return kOk;
}

int cmd_eval(const Options& o, Outputs& outs) {
  require(o.data, "--data");
  require(o.ckpt, "--ckpt");
  const Checkpoint ck = load_checkpoint(o.ckpt);
  const Dataset ds = load_jsonl(o.data, &ck.vocab);
  const auto positive = label_indices(ds.vocab(), o.positive);
  EvalReport rep = grouped_eval(ck.model, ds, positive);
  if (ds.labels().size() == 2 && positive.size() == 1) {
    rep.calibration = calibration_sweep(ck.model, ds, positive[0], load_config(o).thresholds);
  }
  rep.metadata["checkpoint"] = o.ckpt;
  rep.metadata["data"] = o.data;
  if (!o.out_dir.empty()) {
    const fs::path dir = o.out_dir;
    outs.declare(dir);
    fs::create_directories(dir);
    for (const char* f : {"eval.json", "grouped.csv", "calibration.csv"}) outs.declare(dir / f);
    write_text_file(dir / "eval.json", report_json(rep));
    write_text_file(dir / "grouped.csv", grouped_csv(rep));
    if (!rep.calibration.empty()) write_text_file(dir / "calibration.csv", calibration_csv(rep.calibration));
  }
  std::string text = "accuracy " + format_double(rep.accuracy) + " (" + std::to_string(rep.correct) +
                     "/" + std::to_string(rep.n) + ")\n";
  if (!rep.calibration.empty()) {
    text += "best threshold " + format_double(best_threshold(rep.calibration)) + "\n";
  }
  print(o, text);
  return kOk;
}

double eval_accuracy(const fs::path& path) {
  const Json j = parse_json_file(path.string());
  if (!j.contains("accuracy") || !j["accuracy"].is_number()) {
    throw DataError(path.string() + ": no accuracy field");
  }
  return j["accuracy"].get<double>();
}

// report.csv rows written by repro / an earlier report.
std::vector<ReportRow> read_report_csv(const fs::path& path) {
  std::stringstream ss(read_text_file(path));
  std::string line;
  std::getline(ss, line);
  if (line != "name,in_dist_acc,ood_acc,avg") throw DataError(path.string() + ": unexpected header");
  std::vector<ReportRow> rows;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string name, id, ood;
    std::getline(ls, name, ',');
    std::getline(ls, id, ',');
    std::getline(ls, ood, ',');
    try {
      rows.push_back({name, std::stod(id), std::stod(ood)});
    } catch (const std::exception&) {
      throw DataError(path.string() + ": malformed row '" + line + "'");
    }
  }
  return rows;
}

int cmd_report(const Options& o, Outputs& outs) {
  if (o.rows.empty() == o.runs.empty()) throw ConfigError("give either --row or --runs");
  FormattedReport rep;
  if (!o.rows.empty()) {
    std::vector<ReportRow> rows;
    for (const auto& spec : o.rows) {
      const auto eq = spec.find('=');
      const auto comma = spec.find(',', eq == std::string::npos ? 0 : eq);
      if (eq == std::string::npos || comma == std::string::npos) {
        throw ConfigError("--row expects NAME=IN_DIST_EVAL.json,OOD_EVAL.json");
      }
      rows.push_back({spec.substr(0, eq), eval_accuracy(spec.substr(eq + 1, comma - eq - 1)),
                      eval_accuracy(spec.substr(comma + 1))});
    }
    rep = report(rows);
  } else {
    std::vector<std::vector<ReportRow>> per_seed;
    for (const auto& dir : o.runs) {
      if (!fs::exists(fs::path(dir) / "manifest.json")) {
        throw DataError(dir + ": no manifest.json (incomplete run)");
      }
      per_seed.push_back(read_report_csv(fs::path(dir) / "report.csv"));
    }
    rep = aggregate_report(aggregate(per_seed));
  }
  if (!o.out.empty()) {
    outs.declare(o.out);
    write_text_file(o.out, rep.csv);
  }
  print(o, rep.text);
  return kOk;
}

int cmd_repro(const Options& o, Outputs& outs) {
  require(o.out_dir, "--out-dir");
  const ExperimentConfig cfg = load_config(o);
  const auto seeds = o.seed ? std::vector<std::uint64_t>{*o.seed} : parse_seeds(o.seeds);
  const fs::path root = o.out_dir;
  outs.declare(root);
  fs::create_directories(root);
  std::vector<ExperimentResult> runs;
  Json summary = Json::array();
  for (std::uint64_t s : seeds) {
    const fs::path dir = root / ("seed_" + std::to_string(s));
    outs.declare(dir);
    runs.push_back(run_experiment(cfg, s, dir, !o.quiet));
    summary.push_back(runs.back().summary());
  }
  const FormattedReport table = experiment_table(runs);
  for (const char* f : {"report.csv", "report.txt", "summary.json", "config.json"}) outs.declare(root / f);
  write_text_file(root / "report.csv", table.csv);
  write_text_file(root / "report.txt", table.text);
  write_text_file(root / "summary.json", summary.dump(2) + "\n");
  write_text_file(root / "config.json", to_json(cfg).dump(2) + "\n");
  print(o, table.text);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Forgettable-example robustification toolkit", "forgetset"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config (JSON)");
    sub->add_flag("--quiet", o.quiet, "Suppress normal output");
  };
  auto* gen = app.add_subcommand("gen", "Generate the synthetic benchmark");
  common(gen);
  gen->add_option("--seed", o.seed, "Run seed");
  gen->add_option("--out-dir", o.out_dir, "Output directory");

  auto* trn = app.add_subcommand("train", "Train a model and record its forgetting ledger");
  common(trn);
  trn->add_option("--data", o.data, "Training JSONL");
  trn->add_option("--seed", o.seed, "Run seed");
  trn->add_option("--role", o.role, "producer (shallow) or strong");
  trn->add_option("--out-dir", o.out_dir, "Output directory");

  auto* fgt = app.add_subcommand("forget", "Extract the forgettable set from a ledger");
  common(fgt);
  fgt->add_option("--ledger", o.ledger, "Ledger CSV");
  fgt->add_option("--out", o.out, "Id list output");
  fgt->add_option("--hist", o.hist, "Histogram CSV output");

  auto* sts = app.add_subcommand("stats", "Overlap and negation statistics by label group");
  common(sts);
  sts->add_option("--data", o.data, "Dataset JSONL");
  sts->add_option("--subset", o.subset, "Id list restricting the subset rows");
  sts->add_option("--positive", o.positive, "Positive label names");
  sts->add_option("--out", o.out, "CSV output");

  auto* rob = app.add_subcommand("robustify", "Two-stage training on a subset");
  common(rob);
  rob->add_option("--data", o.data, "Training JSONL");
  rob->add_option("--subset", o.subset, "Subset spec (JSON) or id list");
  rob->add_option("--ckpt", o.ckpt, "Phase-1 checkpoint to start from");
  rob->add_option("--seed", o.seed, "Run seed");
  rob->add_option("--out-dir", o.out_dir, "Output directory");

  auto* evl = app.add_subcommand("eval", "Accuracy, grouped accuracy and calibration sweep");
  common(evl);
  evl->add_option("--data", o.data, "Evaluation JSONL");
  evl->add_option("--ckpt", o.ckpt, "Model checkpoint");
  evl->add_option("--positive", o.positive, "Positive label names");
  evl->add_option("--out-dir", o.out_dir, "Output directory");

  auto* rpt = app.add_subcommand("report", "Result tables");
  common(rpt);
  rpt->add_option("--row", o.rows, "NAME=IN_DIST_EVAL.json,OOD_EVAL.json");
  rpt->add_option("--runs", o.runs, "Run directories to aggregate");
  rpt->add_option("--out", o.out, "CSV output");

  auto* rep = app.add_subcommand("repro", "Full experiment over seeds");
  common(rep);
  rep->add_option("--seeds", o.seeds, "Comma-separated seeds");
  rep->add_option("--seed", o.seed, "Single seed");
  rep->add_option("--out-dir", o.out_dir, "Output directory");

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  Outputs outs;
  try {
    if (gen->parsed()) return cmd_gen(o, outs);
    if (trn->parsed()) return cmd_train(o, outs);
    if (fgt->parsed()) return cmd_forget(o, outs);
    if (sts->parsed()) return cmd_stats(o, outs);
    if (rob->parsed()) return cmd_robustify(o, outs);
    if (evl->parsed()) return cmd_eval(o, outs);
    if (rpt->parsed()) return cmd_report(o, outs);
    if (rep->parsed()) return cmd_repro(o, outs);
    return kUsage;
  } catch (const ConfigError& e) {
    outs.rollback();
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    outs.rollback();
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    outs.rollback();
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
}

}  // namespace forgetset::cli

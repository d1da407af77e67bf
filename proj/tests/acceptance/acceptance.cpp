// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when all pass).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "forgetset/experiment.hpp"
#include "forgetset/io_util.hpp"
#include "gradcheck.hpp"
#include "ledger_oracle.hpp"
#include "test_util.hpp"

using namespace forgetset;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(int id, const std::string& title, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s -- %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Tolerances.
constexpr std::size_t kGradChecks = 200;
constexpr double kGradRelError = 1e-4;
constexpr double kGradSeconds = 60.0;
constexpr std::size_t kLedgerMatrices = 1000;
constexpr double kLedgerSeconds = 10.0;
constexpr double kEnrichment = 2.0;
constexpr double kBaseRate = 0.10, kBaseRateTol = 0.01;
constexpr double kEnrichmentSeconds = 120.0;
constexpr double kOodGainPoints = 5.0;
constexpr double kIdDropPoints = 3.0;
constexpr double kRobustifySeconds = 600.0;
constexpr double kLossCurveSlackPoints = 2.0;
const std::vector<std::uint64_t> kSeeds = {1, 2, 3, 4, 5};
constexpr std::uint64_t kEnrichmentSeed = 42;

void criterion_gradients() {
  const auto t0 = Clock::now();
  std::size_t ok = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < kGradChecks; ++i) {
    const Pooling pool = i % 2 ? Pooling::max : Pooling::mean;
    const auto r = testing::check_gradient(testing::random_case(50000 + i, pool), i);
    worst = std::max(worst, r.rel_error);
    ok += r.rel_error < kGradRelError && r.absent_rows_zero;
  }
  const double dt = seconds_since(t0);
  verdict(1, "gradient correctness", ok == kGradChecks && dt < kGradSeconds,
          std::to_string(ok) + "/" + std::to_string(kGradChecks) + " pairs (mean and max pool), max rel err " +
              fmt("%.2e", worst) + " < 1e-4, " + fmt("%.1fs", dt));
}

// Matrix part of criterion 2; the training-run part is folded in once the
// experiment runs are available.
struct LedgerOracleOutcome {
  std::size_t mismatches = 0;
  double seconds = 0.0;
};

LedgerOracleOutcome ledger_oracle() {
  const auto t0 = Clock::now();
  Rng rng(777);
  LedgerOracleOutcome out;
  for (std::size_t k = 0; k < kLedgerMatrices; ++k) {
    out.mismatches += testing::ledger_mismatches(testing::random_matrix(rng, 1 + rng.below(200), 1 + rng.below(20)));
  }
  out.seconds = seconds_since(t0);
  return out;
}

void criterion_enrichment(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  SynthConfig synth;  // defaults: 10k train, p_bias 0.9
  synth.seed = kEnrichmentSeed;
  const SynthSplits data = generate(synth);
  const RunSeeds s = derive_run_seeds(cfg, kEnrichmentSeed);
  TrainConfig t = cfg.producer_train;
  t.seed = s.producer_shuffle;
  const ProducerResult prod = produce_forgettables(data.train, cfg.producer_model, s.producer_init, t);

  std::size_t minority = 0, minority_f = 0;
  for (const auto& ex : data.train.examples()) minority += *ex.minority;
  for (ExampleId id : prod.forgettables) minority_f += *data.train[data.train.position_of(id)].minority;
  const double base = static_cast<double>(minority) / data.train.size();
  const double rate_f = prod.forgettables.empty() ? 0.0 : static_cast<double>(minority_f) / prod.forgettables.size();
  const LabelIndex pos = data.train.vocab().label_index(kPositiveLabel);
  const GroupedStat all = overlap_by_label(data.train, std::nullopt, {pos});
  bool flip = false;
  GroupedStat sub{};
  try {
    sub = overlap_by_label(data.train, prod.forgettables, {pos});
    flip = sub.group_pos < sub.group_neg;
  } catch (const std::exception&) {
  }
  const double dt = seconds_since(t0);
  const bool ok = std::fabs(base - kBaseRate) <= kBaseRateTol && rate_f >= kEnrichment * base &&
                  all.group_pos > all.group_neg && flip && dt < kEnrichmentSeconds;
  verdict(4, "minority enrichment", ok,
          "|F|=" + std::to_string(prod.forgettables.size()) + ", base rate " + fmt("%.4f", base) +
              ", rate in F " + fmt("%.4f", rate_f) + " (" + fmt("%.2fx", base > 0 ? rate_f / base : 0.0) +
              ", need >= 2x); overlap all P/non-P " + fmt("%.3f", all.group_pos) + "/" +
              fmt("%.3f", all.group_neg) + ", in F " + fmt("%.3f", sub.group_pos) + "/" +
              fmt("%.3f", sub.group_neg) + ", " + fmt("%.1fs", dt));
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(read_text_file(p));
  std::string line;
  std::getline(ss, line);  // header
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

struct SeedArtifacts {
  std::map<std::string, ReportRow> rows;
  double tau1 = 0.0, tau2 = 0.0;
  bool never_learned_consistent = false;
  bool monotone = true;
  std::vector<std::pair<double, double>> loss_curve;  // (fraction, ood)
  double forgettables_ood = 0.0;
  bool curve_complete = false;
};

bool monotone_positive_rate(const fs::path& p) {
  const auto rows = read_csv(p);
  if (rows.empty()) return false;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (std::stod(rows[k][2]) > std::stod(rows[k - 1][2])) return false;
  }
  return true;
}

SeedArtifacts read_seed(const fs::path& dir, const std::vector<double>& fractions) {
  SeedArtifacts a;
  const Json summary = parse_json_file((dir / "manifest.json").string()).at("summary");
  for (const auto& r : summary.at("rows")) {
    a.rows[r.at("name").get<std::string>()] = {r.at("name").get<std::string>(), r.at("in_dist").get<double>(),
                                               r.at("ood").get<double>()};
  }
  a.tau1 = summary.at("best_threshold_phase1").get<double>();
  a.tau2 = summary.at("best_threshold_phase2").get<double>();
  a.never_learned_consistent = summary.at("never_learned_consistent").get<bool>();
  a.monotone = monotone_positive_rate(dir / "eval" / "calibration_phase1.csv") &&
               monotone_positive_rate(dir / "eval" / "calibration_phase2.csv");
  std::vector<double> seen;
  bool have_f = false;
  for (const auto& row : read_csv(dir / "eval" / "loss_curve.csv")) {
    if (row[0] == "loss_top") {
      a.loss_curve.emplace_back(std::stod(row[1]), std::stod(row[4]));
      seen.push_back(std::stod(row[1]));
    } else if (row[0] == "forgettables") {
      a.forgettables_ood = std::stod(row[4]);
      have_f = true;
    }
  }
  a.curve_complete = have_f && seen.size() == fractions.size();
  for (std::size_t k = 0; a.curve_complete && k < seen.size(); ++k) {
    a.curve_complete = std::fabs(seen[k] - fractions[k]) < 1e-9;
  }
  return a;
}

bool trees_identical(const fs::path& a, const fs::path& b, std::size_t& files, std::string& first_diff) {
  files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    ++files;
    if (!fs::exists(b / rel) || read_file(e.path()) != read_file(b / rel)) {
      first_diff = rel.string();
      return false;
    }
  }
  std::size_t other = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) other += e.is_regular_file();
  if (other != files) {
    first_diff = "(file count)";
    return false;
  }
  return files > 0;
}

double mean_of(const std::vector<SeedArtifacts>& seeds, const std::string& row, bool ood) {
  double s = 0.0;
  for (const auto& a : seeds) {
    const ReportRow& r = a.rows.at(row);
    s += ood ? r.ood : r.in_dist;
  }
  return s / seeds.size();
}

}  // namespace

int main(int argc, char** argv) {
  const std::string config_path = argc > 1 ? argv[1] : FORGETSET_ACCEPTANCE_CONFIG;
  const ExperimentConfig cfg = experiment_config_from_json(parse_json_file(config_path));
  std::printf("acceptance config: %s\n", config_path.c_str());

  criterion_gradients();
  const LedgerOracleOutcome oracle = ledger_oracle();
  criterion_enrichment(cfg);

  TempDir tmp;
  const fs::path first = tmp.path() / "run1";
  const fs::path second = tmp.path() / "run2";
  std::string seeds_csv;
  for (auto s : kSeeds) seeds_csv += (seeds_csv.empty() ? "" : ",") + std::to_string(s);

  const auto t0 = Clock::now();
  const int rc = cli::run({"forgetset", "repro", "--quiet", "--config", config_path, "--seeds", seeds_csv,
                           "--out-dir", first.string()});
  const double repro_seconds = seconds_since(t0);
  if (rc != 0) {
    std::printf("repro exited with %d\n", rc);
    for (int c : {2, 3, 5, 6, 7, 8}) verdict(c, "experiment", false, "repro failed");
    return failures;
  }
  std::printf("%s", read_text_file(first / "report.txt").c_str());

  std::vector<SeedArtifacts> seeds;
  for (auto s : kSeeds) seeds.push_back(read_seed(first / ("seed_" + std::to_string(s)), cfg.loss_fractions));

  // 2: ledger oracle plus never-learned consistency on every real run.
  bool consistent = true;
  for (const auto& a : seeds) consistent &= a.never_learned_consistent;
  verdict(2, "ledger oracle equivalence", oracle.mismatches == 0 && oracle.seconds < kLedgerSeconds && consistent,
          std::to_string(kLedgerMatrices) + " matrices, " + std::to_string(oracle.mismatches) + " mismatches, " +
              fmt("%.2fs", oracle.seconds) + "; never-learned => final-incorrect on all " +
              std::to_string(2 * seeds.size()) + " training runs: " + (consistent ? "yes" : "no"));

  // 3: a second repro of one seed reproduces its directory byte for byte.
  const std::uint64_t det_seed = kSeeds.front();
  const int rc2 = cli::run({"forgetset", "repro", "--quiet", "--config", config_path, "--seed",
                            std::to_string(det_seed), "--out-dir", second.string()});
  std::size_t files = 0;
  std::string diff;
  const std::string sub = "seed_" + std::to_string(det_seed);
  const bool same = rc2 == 0 && trees_identical(first / sub, second / sub, files, diff);
  verdict(3, "determinism", same,
          same ? std::to_string(files) + " files (ledgers, checkpoints, reports) byte-identical across two repro runs"
               : "difference in " + diff);

  // 5: two-stage robustification over the seeds.
  const double id1 = mean_of(seeds, "strong", false), ood1 = mean_of(seeds, "strong", true);
  const double idf = mean_of(seeds, "strong+forgettables", false), oodf = mean_of(seeds, "strong+forgettables", true);
  const double oodr = mean_of(seeds, "strong+random", true);
  const double gain_f = 100.0 * (oodf - ood1), gain_r = 100.0 * (oodr - ood1);
  const double id_drop = 100.0 * (id1 - idf);
  verdict(5, "two-stage robustification",
          gain_f >= kOodGainPoints && id_drop <= kIdDropPoints && gain_r < gain_f && repro_seconds < kRobustifySeconds,
          "mean over " + std::to_string(seeds.size()) + " seeds: OOD " + fmt("%.2f", 100 * ood1) + " -> " +
              fmt("%.2f", 100 * oodf) + " (" + fmt("%+.2f", gain_f) + " pts, need >= +5), ID drop " +
              fmt("%.2f", id_drop) + " pts (need <= 3), random-subset gain " + fmt("%+.2f", gain_r) +
              " pts (need < forgettables gain), " + fmt("%.0fs", repro_seconds) + " for the full repro");

  // 6: from-scratch ablation.
  const double sf = mean_of(seeds, "scratch:forgettables", false), sr = mean_of(seeds, "scratch:random", false);
  verdict(6, "forgettables-only ablation", sf < sr,
          "mean ID accuracy from scratch: forgettables " + fmt("%.2f", 100 * sf) + " vs random " +
              fmt("%.2f", 100 * sr));

  // 7: calibration; thresholds averaged over seeds.
  double tau1 = 0.0, tau2 = 0.0;
  bool monotone = true;
  std::string per_seed;
  for (const auto& a : seeds) {
    tau1 += a.tau1 / seeds.size();
    tau2 += a.tau2 / seeds.size();
    monotone &= a.monotone;
    per_seed += fmt(" %.2f", a.tau1) + "->" + fmt("%.2f", a.tau2);
  }
  verdict(7, "calibration sweep",
          tau1 > 0.5 && std::fabs(tau2 - 0.5) < std::fabs(tau1 - 0.5) && monotone,
          "mean tau* phase 1 " + fmt("%.3f", tau1) + " (need > 0.5), phase 2 " + fmt("%.3f", tau2) +
              " (need closer to 0.5); per seed" + per_seed + "; positive rate monotone: " + (monotone ? "yes" : "no"));

  // 8: loss-ranked curve vs forgettables, averaged over seeds.
  bool complete = true;
  double f_ood = 0.0;
  std::vector<double> curve(cfg.loss_fractions.size(), 0.0);
  for (const auto& a : seeds) {
    complete &= a.curve_complete;
    f_ood += 100.0 * a.forgettables_ood / seeds.size();
    for (std::size_t k = 0; k < a.loss_curve.size() && k < curve.size(); ++k) {
      curve[k] += 100.0 * a.loss_curve[k].second / seeds.size();
    }
  }
  const double best = curve.empty() ? 0.0 : *std::max_element(curve.begin(), curve.end());
  std::string pts;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    pts += fmt(" q=%.2f:", cfg.loss_fractions[k]) + fmt("%.1f", curve[k]);
  }
  verdict(8, "loss vs forgetting curve", complete && f_ood >= best - kLossCurveSlackPoints,
          std::string("curve emitted: ") + (complete ? "yes" : "no") + "; mean OOD forgettables " +
              fmt("%.2f", f_ood) + " vs best loss-ranked " + fmt("%.2f", best) + " (need >= best - 2);" + pts);

  std::printf("%d criteria failed\n", failures);
  return failures;
}

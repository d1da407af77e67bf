#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "forgetset/corpus.hpp"
#include "forgetset/errors.hpp"
#include "forgetset/stats.hpp"
#include "forgetset/synthgen.hpp"

using namespace forgetset;

namespace {

SynthConfig small_config(std::uint64_t seed) {
  SynthConfig c;
  c.seed = seed;
  c.n_train = 2000;
  c.n_test_id = 500;
  c.n_test_ood = 500;
  return c;
}

double minority_fraction(const Dataset& ds) {
  std::size_t m = 0;
  for (const auto& ex : ds.examples()) m += ex.minority.value_or(false);
  return static_cast<double>(m) / static_cast<double>(ds.size());
}

double three_sigma(double p, std::size_t n) {
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace

TEST_CASE("seed-42 train split has the configured minority rate") {
  SynthConfig c;
  c.seed = 42;
  c.n_train = 10000;
  c.p_bias = 0.9;
  const SynthSplits s = generate(c);
  REQUIRE(s.train.size() == 10000);
  // Binomial expectation 1 - p_bias = 0.10.
  CHECK(std::fabs(minority_fraction(s.train) - 0.10) <= 0.01);
}

TEST_CASE("p_bias extremes") {
  SynthConfig c = small_config(3);
  c.p_bias = 1.0;
  CHECK(minority_fraction(generate(c).train) == 0.0);

  // p_bias_ood = 0: every OOD example anti-matches, so positives have lower overlap.
  const SynthSplits s = generate(small_config(4));
  CHECK(minority_fraction(s.test_ood) == 1.0);
  const auto g = overlap_by_label(s.test_ood, std::nullopt, {s.test_ood.vocab().label_index(kPositiveLabel)});
  CHECK(g.group_pos < g.group_neg);
}

TEST_CASE("generation is deterministic and splits use distinct streams") {
  const SynthSplits a = generate(small_config(7));
  const SynthSplits b = generate(small_config(7));
  CHECK(to_jsonl(a.train) == to_jsonl(b.train));
  CHECK(to_jsonl(a.test_ood) == to_jsonl(b.test_ood));
  CHECK(a.train[0].s1 != a.test_id[0].s1);
  CHECK(to_jsonl(generate(small_config(8)).train) != to_jsonl(a.train));
}

TEST_CASE("example structure follows the construction") {
  const SynthConfig c = small_config(11);
  const SynthSplits s = generate(c);
  const auto pos_core = core_pos_tokens(c);
  const auto neg_core = core_neg_tokens(c);
  std::set<std::string> core(pos_core.begin(), pos_core.end());
  core.insert(neg_core.begin(), neg_core.end());
  for (const auto& ex : s.train.examples()) {
    REQUIRE(ex.s1.size() == c.len_s1);
    CHECK(std::set<std::string>(ex.s1.begin(), ex.s1.end()).size() == c.len_s1);
    std::size_t shared = 0, core_count = 0;
    for (const auto& t : ex.s2) {
      shared += std::count(ex.s1.begin(), ex.s1.end(), t);
      core_count += core.count(t);
    }
    CHECK(core_count <= 1);
    CHECK(ex.s2.size() == c.len_s1 + core_count);
    const bool positive = s.train.labels()[ex.label] == kPositiveLabel;
    const bool high = shared == 6;  // round(0.75 * 8)
    CHECK((high || shared == 1));   // round(0.10 * 8)
    CHECK(*ex.minority == (high != positive));
  }
}

TEST_CASE("property: label balance and bias realization within 3 sigma") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const SynthConfig c = small_config(seed);
    const SynthSplits s = generate(c);
    for (const Dataset* ds : {&s.train, &s.test_id, &s.test_ood}) {
      std::size_t pos = 0;
      for (const auto& ex : ds->examples()) pos += ds->labels()[ex.label] == kPositiveLabel;
      const double frac = static_cast<double>(pos) / static_cast<double>(ds->size());
      CHECK(std::fabs(frac - 0.5) <= three_sigma(0.5, ds->size()));
    }
    const double match = 1.0 - minority_fraction(s.train);
    CHECK(std::fabs(match - c.p_bias) <= three_sigma(c.p_bias, s.train.size()));
  }
}

TEST_CASE("learnability oracle: core-token rule is accurate on every split") {
  const SynthConfig c = small_config(21);
  const SynthSplits s = generate(c);
  const auto pos_core = core_pos_tokens(c);
  for (const Dataset* ds : {&s.train, &s.test_id, &s.test_ood}) {
    std::size_t correct = 0;
    for (const auto& ex : ds->examples()) {
      const bool has_pos = std::any_of(ex.s2.begin(), ex.s2.end(), [&](const std::string& t) {
        return std::find(pos_core.begin(), pos_core.end(), t) != pos_core.end();
      });
      correct += has_pos == (ds->labels()[ex.label] == kPositiveLabel);
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(ds->size()) >= 1.0 - c.core_noise);
  }
}

TEST_CASE("test splits share the training vocabulary") {
  const SynthSplits s = generate(small_config(5));
  CHECK(s.test_id.vocab() == s.train.vocab());
  CHECK(s.test_ood.vocab() == s.train.vocab());
}

TEST_CASE("invalid configurations are rejected") {
  SynthConfig c;
  c.vocab_size = 20;
  CHECK_THROWS_AS(generate(c), ConfigError);
  c = SynthConfig{};
  c.overlap_lo = 0.8;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SynthConfig{};
  c.p_bias = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "forgetset/corpus.hpp"

namespace forgetset {

// Label names of synthetic data; sorted, so "positive" has index 1.
inline constexpr const char* kNegativeLabel = "negative";
inline constexpr const char* kPositiveLabel = "positive";

struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t n_train = 10000;
  std::size_t n_test_id = 2000;
  std::size_t n_test_ood = 2000;
  // Content tokens in total, core tokens included.
  std::size_t vocab_size = 200;
  std::size_t len_s1 = 8;
  std::size_t n_core_pos = 5;
  std::size_t n_core_neg = 5;
  // Probability that the overlap level agrees with the label.
  double p_bias = 0.90;
  double p_bias_ood = 0.0;
  double overlap_hi = 0.75;
  double overlap_lo = 0.10;
  // Probability that the core token is left out of s2.
  double core_noise = 0.05;

  void validate() const;  // throws ConfigError
};

struct SynthSplits {
  Dataset train;
  Dataset test_id;
  Dataset test_ood;
};

std::vector<std::string> core_pos_tokens(const SynthConfig& cfg);
std::vector<std::string> core_neg_tokens(const SynthConfig& cfg);
std::vector<std::string> distractor_tokens(const SynthConfig& cfg);

// Generates one split with the given bias probability from its own stream.
Dataset generate_split(const SynthConfig& cfg, std::size_t n, double p_bias,
                       std::uint64_t stream_seed);

// Train, in-distribution and out-of-distribution splits from disjoint
// streams derived from cfg.seed. Same cfg gives identical datasets.
SynthSplits generate(const SynthConfig& cfg);

}  // namespace forgetset

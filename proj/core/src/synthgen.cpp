#include "forgetset/synthgen.hpp"

#include <cmath>
#include <string>

#include "forgetset/errors.hpp"
#include "forgetset/rng.hpp"

namespace forgetset {

namespace {

constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kTestIdStream = 2;
constexpr std::uint64_t kTestOodStream = 3;

std::vector<std::string> numbered(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::size_t copied_count(double overlap, std::size_t len) {
  return static_cast<std::size_t>(std::lround(overlap * static_cast<double>(len)));
}

std::string join(const TokenSeq& toks) {
  std::string out;
  for (const auto& t : toks) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace

void SynthConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(p_bias) || !prob(p_bias_ood)) throw ConfigError("p_bias must lie in [0, 1]");
  if (!prob(core_noise)) throw ConfigError("core_noise must lie in [0, 1]");
  if (!(overlap_lo >= 0.0 && overlap_lo < overlap_hi && overlap_hi <= 1.0)) {
    throw ConfigError("require 0 <= overlap_lo < overlap_hi <= 1");
  }
  if (len_s1 == 0) throw ConfigError("len_s1 must be positive");
  if (n_core_pos == 0 || n_core_neg == 0) throw ConfigError("core token sets must be non-empty");
  const std::size_t core = n_core_pos + n_core_neg;
  const std::size_t needed = 2 * len_s1 - copied_count(overlap_lo, len_s1);
  if (vocab_size < core || vocab_size - core < needed) {
    throw ConfigError("vocab_size " + std::to_string(vocab_size) + " too small: need " +
                      std::to_string(core) + " core tokens plus " + std::to_string(needed) +
                      " distractors");
  }
}

std::vector<std::string> core_pos_tokens(const SynthConfig& cfg) {
  return numbered("pos", cfg.n_core_pos);
}

std::vector<std::string> core_neg_tokens(const SynthConfig& cfg) {
  return numbered("neg", cfg.n_core_neg);
}

std::vector<std::string> distractor_tokens(const SynthConfig& cfg) {
  return numbered("w", cfg.vocab_size - cfg.n_core_pos - cfg.n_core_neg);
}

Dataset generate_split(const SynthConfig& cfg, std::size_t n, double p_bias,
                       std::uint64_t stream_seed) {
  cfg.validate();
  const auto pos_core = core_pos_tokens(cfg);
  const auto neg_core = core_neg_tokens(cfg);
  std::vector<std::string> pool = distractor_tokens(cfg);
  const std::size_t len = cfg.len_s1;
  const std::size_t k_hi = copied_count(cfg.overlap_hi, len);
  const std::size_t k_lo = copied_count(cfg.overlap_lo, len);

  Rng rng(stream_seed);
  // Partial Fisher-Yates: the first m entries of pool become a uniform
  // sample without replacement.
  auto draw_front = [&](std::size_t m) {
    for (std::size_t i = 0; i < m; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
  };

  std::vector<Example> examples;
  examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = rng.bernoulli(0.5);
    const bool matches = rng.bernoulli(p_bias);
    const bool high = positive == matches;
    const std::size_t k = high ? k_hi : k_lo;

    // s1 occupies pool[0, len); fresh s2 distractors come from beyond it.
    const std::size_t fresh = len - k;
    draw_front(len);
    TokenSeq s1(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(len));
    TokenSeq s2;
    s2.reserve(len + 1);
    {
      std::vector<std::size_t> order(len);
      for (std::size_t t = 0; t < len; ++t) order[t] = t;
      for (std::size_t t = 0; t < k; ++t) {
        const auto j = t + static_cast<std::size_t>(rng.below(len - t));
        std::swap(order[t], order[j]);
        s2.push_back(s1[order[t]]);
      }
    }
    for (std::size_t t = 0; t < fresh; ++t) {
      const auto j = len + t + static_cast<std::size_t>(rng.below(pool.size() - len - t));
      std::swap(pool[len + t], pool[j]);
      s2.push_back(pool[len + t]);
    }
    if (!rng.bernoulli(cfg.core_noise)) {
      const auto& core = positive ? pos_core : neg_core;
      s2.push_back(core[static_cast<std::size_t>(rng.below(core.size()))]);
    }
    rng.shuffle(std::span<std::string>(s2));

    Example ex;
    ex.id = static_cast<ExampleId>(i);
    // Round trip through the tokenizer so in-memory data equals loaded data.
    ex.s1 = tokenize(join(s1));
    ex.s2 = tokenize(join(s2));
    ex.label = positive ? 1 : 0;
    ex.minority = !matches;
    examples.push_back(std::move(ex));
  }
  auto vocab = build_vocabulary(examples, {kNegativeLabel, kPositiveLabel});
  return Dataset(std::move(examples), std::move(vocab));
}

SynthSplits generate(const SynthConfig& cfg) {
  cfg.validate();
  Dataset train =
      generate_split(cfg, cfg.n_train, cfg.p_bias, derive_seed(cfg.seed, kTrainStream));
  // Test splits share the training vocabulary.
  Dataset test_id =
      generate_split(cfg, cfg.n_test_id, cfg.p_bias, derive_seed(cfg.seed, kTestIdStream))
          .reindexed(train.vocab());
  Dataset test_ood =
      generate_split(cfg, cfg.n_test_ood, cfg.p_bias_ood, derive_seed(cfg.seed, kTestOodStream))
          .reindexed(train.vocab());
  return SynthSplits{std::move(train), std::move(test_id), std::move(test_ood)};
}

}  // namespace forgetset

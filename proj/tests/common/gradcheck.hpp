#pragma once

// Central finite-difference oracle for the model's analytic gradient.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "forgetset/nnmodel.hpp"
#include "forgetset/rng.hpp"

namespace forgetset::testing {

struct GradCheckCase {
  Model model;
  std::vector<std::uint32_t> s1, s2;
  std::size_t label = 0;
};

struct GradCheckResult {
  double rel_error = 0.0;        // ||a - n|| / (||a|| + ||n||) over the sampled entries
  std::size_t sampled = 0;
  bool absent_rows_zero = true;  // embedding rows of absent tokens get no gradient
};

inline GradCheckCase random_case(std::uint64_t seed, Pooling pool) {
  Rng rng(seed);
  ModelConfig cfg;
  cfg.emb_dim = 3 + rng.below(6);
  cfg.pool = pool;
  cfg.hidden_dims.clear();
  for (std::size_t l = 0, n = 1 + rng.below(2); l < n; ++l) cfg.hidden_dims.push_back(3 + rng.below(8));
  cfg.n_classes = 2 + rng.below(2);
  const std::size_t vocab = 5 + rng.below(20);
  Model m = Model::init(cfg, vocab, rng.next_u64());
  // Wider weights than the default init so ReLUs are not all in one regime.
  for (double& p : m.parameters()) p = rng.uniform(-1.0, 1.0);
  GradCheckCase c{m, {}, {}, rng.below(cfg.n_classes)};
  for (std::size_t k = 0, n = 1 + rng.below(6); k < n; ++k) c.s1.push_back(static_cast<std::uint32_t>(rng.below(m.embedding_rows())));
  for (std::size_t k = 0, n = 1 + rng.below(6); k < n; ++k) c.s2.push_back(static_cast<std::uint32_t>(rng.below(m.embedding_rows())));
  return c;
}

inline GradCheckResult check_gradient(GradCheckCase c, std::uint64_t sample_seed,
                                      std::size_t per_tensor = 10, double eps = 1e-5) {
  const LossAndGradient an = backward(c.model, c.s1, c.s2, c.label);
  Rng rng(sample_seed);
  Workspace ws;
  GradCheckResult out;
  std::set<std::uint32_t> present(c.s1.begin(), c.s1.end());
  present.insert(c.s2.begin(), c.s2.end());
  const std::vector<std::uint32_t> rows(present.begin(), present.end());
  const std::size_t d = c.model.config().emb_dim;

  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  auto params = c.model.parameters();
  for (const TensorInfo& t : c.model.tensors()) {
    for (std::size_t k = 0; k < per_tensor; ++k) {
      std::size_t idx;
      if (t.name == "embeddings") {
        idx = t.offset + rows[rng.below(rows.size())] * d + rng.below(d);
      } else {
        idx = t.offset + rng.below(t.count);
      }
      const double saved = params[idx];
      params[idx] = saved + eps;
      const double up = loss(c.model, c.s1, c.s2, c.label, ws);
      params[idx] = saved - eps;
      const double down = loss(c.model, c.s1, c.s2, c.label, ws);
      params[idx] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = an.gradient[idx];
      diff2 += (analytic - numeric) * (analytic - numeric);
      a2 += analytic * analytic;
      n2 += numeric * numeric;
      ++out.sampled;
    }
  }
  const double denom = std::sqrt(a2) + std::sqrt(n2);
  out.rel_error = denom == 0.0 ? 0.0 : std::sqrt(diff2) / denom;

  const TensorInfo& emb = c.model.tensor_info("embeddings");
  for (std::size_t r = 0; r < c.model.embedding_rows(); ++r) {
    if (present.count(static_cast<std::uint32_t>(r))) continue;
    for (std::size_t j = 0; j < d; ++j) {
      if (an.gradient[emb.offset + r * d + j] != 0.0) out.absent_rows_zero = false;
    }
  }
  return out;
}

}  // namespace forgetset::testing

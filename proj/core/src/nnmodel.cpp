#include "forgetset/nnmodel.hpp"

#include <algorithm>
#include <cmath>

#include "forgetset/errors.hpp"
#include "forgetset/rng.hpp"

namespace forgetset {

void ModelConfig::validate() const {
  if (emb_dim == 0) throw ConfigError("emb_dim must be >= 1");
  if (hidden_dims.empty()) throw ConfigError("hidden_dims must be non-empty");
  for (auto w : hidden_dims) {
    if (w == 0) throw ConfigError("hidden layer widths must be >= 1");
  }
  if (n_classes < 2) throw ConfigError("n_classes must be >= 2");
}

ModelConfig ModelConfig::shallow() { return ModelConfig{}; }

ModelConfig ModelConfig::strong() {
  ModelConfig c;
  c.emb_dim = 128;
  c.hidden_dims = {256, 256};
  c.tier = "strong";
  return c;
}

std::vector<TensorInfo> tensor_layout(const ModelConfig& cfg, std::size_t vocab_size) {
  std::vector<TensorInfo> out;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<std::size_t> shape) {
    std::size_t count = 1;
    for (auto d : shape) count *= d;
    out.push_back(TensorInfo{std::move(name), std::move(shape), offset, count});
    offset += count;
  };
  add("embeddings", {vocab_size + 1, cfg.emb_dim});
  std::size_t in = 4 * cfg.emb_dim;
  for (std::size_t l = 0; l < cfg.hidden_dims.size(); ++l) {
    const std::size_t width = cfg.hidden_dims[l];
    add("hidden." + std::to_string(l) + ".weight", {width, in});
    add("hidden." + std::to_string(l) + ".bias", {width});
    in = width;
  }
  add("output.weight", {cfg.n_classes, in});
  add("output.bias", {cfg.n_classes});
  return out;
}

Model::Model(ModelConfig cfg, std::size_t vocab_size, std::uint64_t seed,
             std::vector<double> params)
    : cfg_(std::move(cfg)), vocab_size_(vocab_size), seed_(seed), params_(std::move(params)) {
  cfg_.validate();
  tensors_ = tensor_layout(cfg_, vocab_size_);
  const auto& last = tensors_.back();
  if (params_.size() != last.offset + last.count) {
    throw ConfigError("parameter vector has " + std::to_string(params_.size()) +
                      " entries, layout needs " + std::to_string(last.offset + last.count));
  }
}

Model Model::init(const ModelConfig& cfg, std::size_t vocab_size, std::uint64_t seed) {
  cfg.validate();
  const auto layout = tensor_layout(cfg, vocab_size);
  std::vector<double> params(layout.back().offset + layout.back().count, 0.0);
  Rng rng(seed);
  for (const auto& t : layout) {
    const bool is_bias = t.shape.size() == 1;
    if (is_bias) continue;
    for (std::size_t i = 0; i < t.count; ++i) params[t.offset + i] = rng.uniform(-0.1, 0.1);
  }
  Model m(cfg, vocab_size, seed, std::move(params));
  m.round_to_float();
  return m;
}

const TensorInfo& Model::tensor_info(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw ConfigError("no tensor named " + std::string(name));
}

std::span<const double> Model::tensor(std::string_view name) const {
  const auto& t = tensor_info(name);
  return std::span<const double>(params_).subspan(t.offset, t.count);
}

std::span<double> Model::tensor(std::string_view name) {
  const auto& t = tensor_info(name);
  return std::span<double>(params_).subspan(t.offset, t.count);
}

void Model::round_to_float() {
  for (auto& v : params_) v = static_cast<double>(static_cast<float>(v));
}

bool Model::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

void pool_into(const Model& model, std::span<const std::uint32_t> tokens,
               std::vector<double>& out, std::vector<std::uint32_t>* argmax) {
  if (tokens.empty()) throw DataError("cannot encode an empty token sequence");
  const std::size_t d = model.config().emb_dim;
  const std::size_t rows = model.embedding_rows();
  const auto emb = model.parameters();
  for (auto t : tokens) {
    if (t >= rows) throw DataError("token index " + std::to_string(t) + " out of range");
  }
  out.assign(d, 0.0);
  if (model.config().pool == Pooling::mean) {
    for (auto t : tokens) {
      const double* row = emb.data() + static_cast<std::size_t>(t) * d;
      for (std::size_t j = 0; j < d; ++j) out[j] += row[j];
    }
    const double inv = 1.0 / static_cast<double>(tokens.size());
    for (auto& v : out) v *= inv;
    if (argmax) argmax->clear();
    return;
  }
  std::vector<std::uint32_t> local;
  auto& arg = argmax ? *argmax : local;
  arg.assign(d, 0);
  const double* first = emb.data() + static_cast<std::size_t>(tokens[0]) * d;
  std::copy(first, first + d, out.begin());
  for (std::size_t pos = 1; pos < tokens.size(); ++pos) {
    const double* row = emb.data() + static_cast<std::size_t>(tokens[pos]) * d;
    for (std::size_t j = 0; j < d; ++j) {
      // Strict comparison keeps the earliest position on ties.
      if (row[j] > out[j]) {
        out[j] = row[j];
        arg[j] = static_cast<std::uint32_t>(pos);
      }
    }
  }
}

void interact_into(std::span<const double> p, std::span<const double> h,
                   std::vector<double>& out) {
  if (p.size() != h.size()) {
    throw ConfigError("interact: length mismatch " + std::to_string(p.size()) + " vs " +
                      std::to_string(h.size()));
  }
  const std::size_t d = p.size();
  out.resize(4 * d);
  for (std::size_t j = 0; j < d; ++j) {
    out[j] = p[j];
    out[d + j] = h[j];
    out[2 * d + j] = std::fabs(p[j] - h[j]);
    out[3 * d + j] = p[j] * h[j];
  }
}

// y = W x + b for row-major W [out, in].
void affine(const double* w, const double* b, std::span<const double> x, std::size_t out_dim,
            std::vector<double>& y) {
  const std::size_t in = x.size();
  y.resize(out_dim);
  for (std::size_t o = 0; o < out_dim; ++o) {
    const double* row = w + o * in;
    // Fixed four-way split of the sum; the order is part of the numerics.
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= in; i += 4) {
      a0 += row[i] * x[i];
      a1 += row[i + 1] * x[i + 1];
      a2 += row[i + 2] * x[i + 2];
      a3 += row[i + 3] * x[i + 3];
    }
    for (; i < in; ++i) a0 += row[i] * x[i];
    y[o] = b[o] + ((a0 + a1) + (a2 + a3));
  }
}

double log_sum_exp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

std::vector<double> encode(const Model& model, std::span<const std::uint32_t> tokens,
                           std::vector<std::uint32_t>* argmax) {
  std::vector<double> out;
  pool_into(model, tokens, out, argmax);
  return out;
}

std::vector<double> interact(std::span<const double> p, std::span<const double> h) {
  std::vector<double> out;
  interact_into(p, h, out);
  return out;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

const std::vector<double>& forward(const Model& model, std::span<const std::uint32_t> s1,
                                   std::span<const std::uint32_t> s2, Workspace& ws) {
  const auto& cfg = model.config();
  const auto params = model.parameters();
  pool_into(model, s1, ws.p, &ws.p_arg);
  pool_into(model, s2, ws.h, &ws.h_arg);
  interact_into(ws.p, ws.h, ws.features);

  const std::size_t n_hidden = cfg.hidden_dims.size();
  ws.acts.resize(n_hidden);
  std::span<const double> x = ws.features;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    affine(params.data() + model.weight_offset(l), params.data() + model.bias_offset(l), x,
           cfg.hidden_dims[l], ws.acts[l]);
    for (auto& v : ws.acts[l]) v = v > 0.0 ? v : 0.0;
    x = ws.acts[l];
  }
  affine(params.data() + model.weight_offset(n_hidden), params.data() + model.bias_offset(n_hidden),
         x, cfg.n_classes, ws.logits);
  const double lse = log_sum_exp(ws.logits);
  ws.probs.resize(cfg.n_classes);
  for (std::size_t c = 0; c < cfg.n_classes; ++c) ws.probs[c] = std::exp(ws.logits[c] - lse);
  return ws.probs;
}

Prediction forward(const Model& model, std::span<const std::uint32_t> s1,
                   std::span<const std::uint32_t> s2) {
  Workspace ws;
  forward(model, s1, s2, ws);
  return Prediction{ws.logits, ws.probs};
}

double loss(const Model& model, std::span<const std::uint32_t> s1,
            std::span<const std::uint32_t> s2, std::size_t label, Workspace& ws) {
  if (label >= model.config().n_classes) throw DataError("label index out of range");
  forward(model, s1, s2, ws);
  return log_sum_exp(ws.logits) - ws.logits[label];
}

double accumulate_gradient(const Model& model, std::span<const std::uint32_t> s1,
                           std::span<const std::uint32_t> s2, std::size_t label,
                           std::span<double> grad, double scale, Workspace& ws) {
  if (grad.size() != model.parameter_count()) throw ConfigError("gradient buffer size mismatch");
  const double value = loss(model, s1, s2, label, ws);
  const auto& cfg = model.config();
  const auto params = model.parameters();
  const std::size_t n_hidden = cfg.hidden_dims.size();

  // dLoss/dlogits = probs - onehot(label)
  ws.delta.assign(ws.probs.begin(), ws.probs.end());
  ws.delta[label] -= 1.0;
  for (auto& v : ws.delta) v *= scale;

  for (std::size_t l = n_hidden + 1; l-- > 0;) {
    std::span<const double> input = l == 0 ? std::span<const double>(ws.features)
                                           : std::span<const double>(ws.acts[l - 1]);
    const std::size_t in = input.size();
    const std::size_t out = ws.delta.size();
    const double* w = params.data() + model.weight_offset(l);
    double* gw = grad.data() + model.weight_offset(l);
    double* gb = grad.data() + model.bias_offset(l);
    ws.delta_prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = ws.delta[o];
      if (d == 0.0) continue;
      gb[o] += d;
      const double* __restrict row = w + o * in;
      const double* __restrict xin = input.data();
      double* __restrict grow = gw + o * in;
      double* __restrict dprev = ws.delta_prev.data();
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * xin[i];
      for (std::size_t i = 0; i < in; ++i) dprev[i] += d * row[i];
    }
    if (l > 0) {
      // ReLU mask from the post-activation values.
      const auto& a = ws.acts[l - 1];
      for (std::size_t i = 0; i < in; ++i) {
        if (a[i] <= 0.0) ws.delta_prev[i] = 0.0;
      }
    }
    std::swap(ws.delta, ws.delta_prev);
  }

  // ws.delta now holds dLoss/dfeatures, blocks [p, h, |p-h|, p*h].
  const std::size_t d = cfg.emb_dim;
  std::vector<double> dp(d), dh(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = ws.p[j] - ws.h[j];
    const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    const double g_abs = ws.delta[2 * d + j] * sgn;
    dp[j] = ws.delta[j] + g_abs + ws.delta[3 * d + j] * ws.h[j];
    dh[j] = ws.delta[d + j] - g_abs + ws.delta[3 * d + j] * ws.p[j];
  }

  double* gemb = grad.data();
  auto scatter = [&](std::span<const std::uint32_t> tokens, const std::vector<double>& g,
                     const std::vector<std::uint32_t>& arg) {
    if (cfg.pool == Pooling::mean) {
      const double inv = 1.0 / static_cast<double>(tokens.size());
      for (auto t : tokens) {
        double* row = gemb + static_cast<std::size_t>(t) * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += g[j] * inv;
      }
    } else {
      for (std::size_t j = 0; j < d; ++j) {
        gemb[static_cast<std::size_t>(tokens[arg[j]]) * d + j] += g[j];
      }
    }
  };
  scatter(s1, dp, ws.p_arg);
  scatter(s2, dh, ws.h_arg);
  return value;
}

LossAndGradient backward(const Model& model, std::span<const std::uint32_t> s1,
                         std::span<const std::uint32_t> s2, std::size_t label) {
  LossAndGradient out;
  out.gradient.assign(model.parameter_count(), 0.0);
  Workspace ws;
  out.loss = accumulate_gradient(model, s1, s2, label, out.gradient, 1.0, ws);
  return out;
}

}  // namespace forgetset

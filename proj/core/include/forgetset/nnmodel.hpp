#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace forgetset {

enum class Pooling { mean, max };

struct ModelConfig {
  std::size_t emb_dim = 32;
  Pooling pool = Pooling::mean;
  std::vector<std::size_t> hidden_dims = {64, 64};
  std::size_t n_classes = 2;
  std::string tier = "shallow";

  void validate() const;  // throws ConfigError

  // Low-capacity forgettables producer.
  static ModelConfig shallow();
  // Higher-capacity model that gets robustified.
  static ModelConfig strong();

  bool operator==(const ModelConfig&) const = default;
};

struct TensorInfo {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;  // in elements of the flat parameter vector
  std::size_t count = 0;
};

// Siamese bag-of-words classifier. All parameters live in one flat vector;
// gradients share its layout. Weight matrices are row-major [out, in].
class Model {
 public:
  Model(ModelConfig cfg, std::size_t vocab_size, std::uint64_t seed, std::vector<double> params);

  // Uniform [-0.1, 0.1] embeddings and weights, zero biases. The embedding
  // table has vocab_size + 1 rows; the last is the OOV row.
  static Model init(const ModelConfig& cfg, std::size_t vocab_size, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t embedding_rows() const { return vocab_size_ + 1; }
  std::uint64_t seed() const { return seed_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo& tensor_info(std::string_view name) const;
  std::span<const double> tensor(std::string_view name) const;
  std::span<double> tensor(std::string_view name);

  // Layer l = 0..hidden_dims.size(); the last index is the output layer.
  std::size_t layer_count() const { return cfg_.hidden_dims.size() + 1; }
  std::size_t weight_offset(std::size_t layer) const { return tensors_[1 + 2 * layer].offset; }
  std::size_t bias_offset(std::size_t layer) const { return tensors_[2 + 2 * layer].offset; }

  // Rounds every parameter to the nearest 32-bit float so the in-memory
  // model equals its checkpoint exactly.
  void round_to_float();

  bool all_finite() const;

  bool operator==(const Model& other) const {
    return cfg_ == other.cfg_ && vocab_size_ == other.vocab_size_ && params_ == other.params_;
  }

 private:
  ModelConfig cfg_;
  std::size_t vocab_size_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> params_;
  std::vector<TensorInfo> tensors_;
};

std::vector<TensorInfo> tensor_layout(const ModelConfig& cfg, std::size_t vocab_size);

// Scratch buffers reused across forward/backward calls.
struct Workspace {
  std::vector<double> p, h;
  std::vector<std::uint32_t> p_arg, h_arg;  // max-pool argmax positions
  std::vector<double> features;
  std::vector<std::vector<double>> acts;  // post-ReLU hidden activations
  std::vector<double> logits, probs;
  std::vector<double> delta, delta_prev;
};

// Mean or max pool of the token embedding rows. Throws on empty input or
// out-of-range indices. `argmax`, when given, receives the earliest token
// position attaining each component's max.
std::vector<double> encode(const Model& model, std::span<const std::uint32_t> tokens,
                           std::vector<std::uint32_t>* argmax = nullptr);

// [p, h, |p - h|, p * h].
std::vector<double> interact(std::span<const double> p, std::span<const double> h);

struct Prediction {
  std::vector<double> logits;
  std::vector<double> probs;
};

Prediction forward(const Model& model, std::span<const std::uint32_t> s1,
                   std::span<const std::uint32_t> s2);

// Forward into `ws`; returns ws.probs.
const std::vector<double>& forward(const Model& model, std::span<const std::uint32_t> s1,
                                   std::span<const std::uint32_t> s2, Workspace& ws);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

// Cross-entropy loss -log p[label] without gradients.
double loss(const Model& model, std::span<const std::uint32_t> s1,
            std::span<const std::uint32_t> s2, std::size_t label, Workspace& ws);

// Adds scale * dLoss/dParams into `grad` (same layout as the parameters)
// and returns the unscaled loss.
double accumulate_gradient(const Model& model, std::span<const std::uint32_t> s1,
                           std::span<const std::uint32_t> s2, std::size_t label,
                           std::span<double> grad, double scale, Workspace& ws);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

LossAndGradient backward(const Model& model, std::span<const std::uint32_t> s1,
                         std::span<const std::uint32_t> s2, std::size_t label);

}  // namespace forgetset

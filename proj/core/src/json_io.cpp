#include "forgetset/json_io.hpp"

#include <algorithm>

#include "forgetset/errors.hpp"
#include "forgetset/io_util.hpp"

namespace forgetset {

namespace {

template <typename T>
void read_field(const Json& j, const char* key, T& out, std::string_view ctx) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(ctx) + ": field \"" + key + "\" has the wrong type");
  }
  if constexpr (std::is_unsigned_v<T>) {
    if (it->is_number_integer() && it->template get<long long>() < 0) {
      throw ConfigError(std::string(ctx) + ": field \"" + key + "\" must be non-negative");
    }
  }
}

}  // namespace

void require_known_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                        std::string_view context) {
  if (!j.is_object()) throw ConfigError(std::string(context) + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(std::string(context) + ": unknown key \"" + key + "\"");
    }
  }
}

void require_version(const Json& j, std::string_view context) {
  if (!j.is_object() || !j.contains("version")) {
    throw ConfigError(std::string(context) + ": missing \"version\" field");
  }
  if (!j["version"].is_number_integer() || j["version"].get<int>() != kConfigVersion) {
    throw ConfigError(std::string(context) + ": unsupported config version");
  }
}

std::string_view to_string(Pooling p) { return p == Pooling::mean ? "mean" : "max"; }

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

std::string_view to_string(RecordGranularity g) {
  return g == RecordGranularity::per_epoch ? "per_epoch" : "per_presentation";
}

Json to_json(const SynthConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["n_train"] = c.n_train;
  j["n_test_id"] = c.n_test_id;
  j["n_test_ood"] = c.n_test_ood;
  j["vocab_size"] = c.vocab_size;
  j["len_s1"] = c.len_s1;
  j["n_core_pos"] = c.n_core_pos;
  j["n_core_neg"] = c.n_core_neg;
  j["p_bias"] = c.p_bias;
  j["p_bias_ood"] = c.p_bias_ood;
  j["overlap_hi"] = c.overlap_hi;
  j["overlap_lo"] = c.overlap_lo;
  j["core_noise"] = c.core_noise;
  return j;
}

SynthConfig synth_config_from_json(const Json& j) {
  constexpr std::string_view ctx = "synth config";
  require_known_keys(j, {"version", "seed", "n_train", "n_test_id", "n_test_ood", "vocab_size",
                         "len_s1", "n_core_pos", "n_core_neg", "p_bias", "p_bias_ood",
                         "overlap_hi", "overlap_lo", "core_noise"},
                     ctx);
  SynthConfig c;
  read_field(j, "seed", c.seed, ctx);
  read_field(j, "n_train", c.n_train, ctx);
  read_field(j, "n_test_id", c.n_test_id, ctx);
  read_field(j, "n_test_ood", c.n_test_ood, ctx);
  read_field(j, "vocab_size", c.vocab_size, ctx);
  read_field(j, "len_s1", c.len_s1, ctx);
  read_field(j, "n_core_pos", c.n_core_pos, ctx);
  read_field(j, "n_core_neg", c.n_core_neg, ctx);
  read_field(j, "p_bias", c.p_bias, ctx);
  read_field(j, "p_bias_ood", c.p_bias_ood, ctx);
  read_field(j, "overlap_hi", c.overlap_hi, ctx);
  read_field(j, "overlap_lo", c.overlap_lo, ctx);
  read_field(j, "core_noise", c.core_noise, ctx);
  c.validate();
  return c;
}

Json to_json(const ModelConfig& c) {
  Json j;
  j["emb_dim"] = c.emb_dim;
  j["pool"] = to_string(c.pool);
  j["hidden_dims"] = c.hidden_dims;
  j["n_classes"] = c.n_classes;
  j["tier"] = c.tier;
  return j;
}

ModelConfig model_config_from_json(const Json& j) {
  constexpr std::string_view ctx = "model config";
  require_known_keys(j, {"emb_dim", "pool", "hidden_dims", "n_classes", "tier"}, ctx);
  ModelConfig c;
  if (j.value("tier", std::string()) == "strong") c = ModelConfig::strong();
  read_field(j, "emb_dim", c.emb_dim, ctx);
  read_field(j, "hidden_dims", c.hidden_dims, ctx);
  read_field(j, "n_classes", c.n_classes, ctx);
  read_field(j, "tier", c.tier, ctx);
  if (const auto it = j.find("pool"); it != j.end()) {
    const auto s = it->is_string() ? it->get<std::string>() : std::string();
    if (s == "mean") {
      c.pool = Pooling::mean;
    } else if (s == "max") {
      c.pool = Pooling::max;
    } else {
      throw ConfigError("model config: pool must be \"mean\" or \"max\"");
    }
  }
  c.validate();
  return c;
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["optimizer"] = to_string(c.optimizer);
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["seed"] = c.seed;
  j["record"] = to_string(c.record);
  j["first_epoch"] = c.first_epoch;
  return j;
}

TrainConfig train_config_from_json(const Json& j, const TrainConfig& defaults) {
  constexpr std::string_view ctx = "train config";
  require_known_keys(j, {"epochs", "batch_size", "learning_rate", "optimizer", "beta1", "beta2",
                         "epsilon", "seed", "record", "first_epoch"},
                     ctx);
  TrainConfig c = defaults;
  read_field(j, "epochs", c.epochs, ctx);
  read_field(j, "batch_size", c.batch_size, ctx);
  read_field(j, "learning_rate", c.learning_rate, ctx);
  read_field(j, "beta1", c.beta1, ctx);
  read_field(j, "beta2", c.beta2, ctx);
  read_field(j, "epsilon", c.epsilon, ctx);
  read_field(j, "seed", c.seed, ctx);
  read_field(j, "first_epoch", c.first_epoch, ctx);
  if (const auto it = j.find("optimizer"); it != j.end()) {
    const auto s = it->is_string() ? it->get<std::string>() : std::string();
    if (s == "sgd") {
      c.optimizer = OptimizerKind::sgd;
    } else if (s == "adam") {
      c.optimizer = OptimizerKind::adam;
    } else {
      throw ConfigError("train config: optimizer must be \"sgd\" or \"adam\"");
    }
  }
  if (const auto it = j.find("record"); it != j.end()) {
    const auto s = it->is_string() ? it->get<std::string>() : std::string();
    if (s == "per_epoch") {
      c.record = RecordGranularity::per_epoch;
    } else if (s == "per_presentation") {
      c.record = RecordGranularity::per_presentation;
    } else {
      throw ConfigError("train config: record must be \"per_epoch\" or \"per_presentation\"");
    }
  }
  c.validate();
  return c;
}

Json parse_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
}

}  // namespace forgetset

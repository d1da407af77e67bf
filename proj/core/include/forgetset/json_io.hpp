#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "forgetset/nnmodel.hpp"
#include "forgetset/synthgen.hpp"
#include "forgetset/trainer.hpp"

namespace forgetset {

using Json = nlohmann::ordered_json;

inline constexpr int kConfigVersion = 1;

// Throws ConfigError if `j` is not an object or holds a key outside `allowed`.
void require_known_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                        std::string_view context);

// Checks the mandatory "version" field of a top-level config.
void require_version(const Json& j, std::string_view context);

Json to_json(const SynthConfig& c);
Json to_json(const ModelConfig& c);
Json to_json(const TrainConfig& c);

// Missing keys keep their defaults; unknown keys and wrong types are errors.
SynthConfig synth_config_from_json(const Json& j);
ModelConfig model_config_from_json(const Json& j);
TrainConfig train_config_from_json(const Json& j, const TrainConfig& defaults = {});

Json parse_json_file(const std::string& path);

std::string_view to_string(Pooling p);
std::string_view to_string(OptimizerKind k);
std::string_view to_string(RecordGranularity g);

}  // namespace forgetset

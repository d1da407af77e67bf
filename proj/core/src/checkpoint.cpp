#include "forgetset/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "forgetset/errors.hpp"
#include "forgetset/io_util.hpp"
#include "forgetset/json_io.hpp"

namespace forgetset {

namespace {

constexpr const char* kFormat = "forgetset-checkpoint";

std::string encode_f32_le(std::span<const double> values) {
  std::string out(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) out[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  return out;
}

}  // namespace

std::filesystem::path blob_path_for(const std::filesystem::path& manifest) {
  auto p = manifest;
  p.replace_extension(".bin");
  return p;
}

void save_checkpoint(const Model& model, const Vocabulary& vocab,
                     const std::filesystem::path& manifest) {
  if (vocab.size() != model.vocab_size()) {
    throw ConfigError("checkpoint: vocabulary does not match the model");
  }
  const auto blob = blob_path_for(manifest);
  Json j;
  j["format"] = kFormat;
  j["version"] = 1;
  j["config"] = to_json(model.config());
  j["vocab_size"] = model.vocab_size();
  j["seed"] = model.seed();
  j["dtype"] = "float32";
  j["byte_order"] = "little";
  j["blob"] = blob.filename().string();
  j["blob_bytes"] = model.parameter_count() * 4;
  auto& ts = j["tensors"] = Json::array();
  for (const auto& t : model.tensors()) {
    Json e;
    e["name"] = t.name;
    e["shape"] = t.shape;
    e["offset"] = t.offset * 4;
    e["bytes"] = t.count * 4;
    ts.push_back(e);
  }
  j["vocabulary"] = {{"tokens", vocab.tokens()}, {"labels", vocab.labels()}};
  write_text_file(blob, encode_f32_le(model.parameters()));
  write_text_file(manifest, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& manifest) {
  const Json j = parse_json_file(manifest.string());
  const std::string src = manifest.string();
  try {
    if (j.value("format", std::string()) != kFormat) {
      throw DataError(src + ": not a checkpoint manifest");
    }
    if (j.value("dtype", std::string()) != "float32" ||
        j.value("byte_order", std::string()) != "little") {
      throw DataError(src + ": unsupported tensor encoding");
    }
    const ModelConfig cfg = model_config_from_json(j.at("config"));
    const auto vocab_size = j.at("vocab_size").get<std::size_t>();
    const auto seed = j.at("seed").get<std::uint64_t>();
    Vocabulary vocab(j.at("vocabulary").at("tokens").get<std::vector<std::string>>(),
                     j.at("vocabulary").at("labels").get<std::vector<std::string>>());
    if (vocab.size() != vocab_size) throw DataError(src + ": vocabulary size mismatch");

    const auto layout = tensor_layout(cfg, vocab_size);
    const auto& ts = j.at("tensors");
    if (!ts.is_array() || ts.size() != layout.size()) {
      throw DataError(src + ": tensor table does not match the model config");
    }
    for (std::size_t k = 0; k < layout.size(); ++k) {
      const auto& e = ts[k];
      if (e.at("name").get<std::string>() != layout[k].name ||
          e.at("shape").get<std::vector<std::size_t>>() != layout[k].shape ||
          e.at("offset").get<std::size_t>() != layout[k].offset * 4 ||
          e.at("bytes").get<std::size_t>() != layout[k].count * 4) {
        throw DataError(src + ": tensor " + e.at("name").get<std::string>() +
                        " disagrees with the model config");
      }
    }
    const std::size_t n = layout.back().offset + layout.back().count;
    const auto blob_path = manifest.parent_path() / j.at("blob").get<std::string>();
    const std::string raw = read_text_file(blob_path);
    if (raw.size() != n * 4) {
      throw DataError(blob_path.string() + ": expected " + std::to_string(n * 4) + " bytes, got " +
                      std::to_string(raw.size()));
    }
    std::vector<double> params(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[4 * i + b])) << (8 * b);
      }
      params[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    return Checkpoint{Model(cfg, vocab_size, seed, std::move(params)), std::move(vocab)};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(src + ": malformed checkpoint manifest: " + e.what());
  }
}

}  // namespace forgetset

#pragma once

#include <filesystem>

#include "forgetset/corpus.hpp"
#include "forgetset/nnmodel.hpp"

namespace forgetset {

struct Checkpoint {
  Model model;
  Vocabulary vocab;
};

// Blob file that accompanies a manifest: same stem, ".bin" extension.
std::filesystem::path blob_path_for(const std::filesystem::path& manifest);

// Writes a JSON manifest (config, vocab size, seed, tensor names, shapes
// and byte offsets, vocabulary) and a little-endian float32 tensor blob.
void save_checkpoint(const Model& model, const Vocabulary& vocab,
                     const std::filesystem::path& manifest);

// Validates the blob against the manifest's tensor table.
Checkpoint load_checkpoint(const std::filesystem::path& manifest);

}  // namespace forgetset

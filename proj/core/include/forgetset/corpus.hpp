#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace forgetset {

using TokenSeq = std::vector<std::string>;
using IndexSeq = std::vector<std::uint32_t>;
using LabelIndex = std::uint32_t;
using ExampleId = std::uint32_t;

inline constexpr std::size_t kMaxSequenceLength = 128;

// Lowercases (ASCII), splits on Unicode whitespace, strips leading and
// trailing ASCII punctuation from each token and drops empty tokens.
TokenSeq tokenize(std::string_view text);

// Token vocabulary plus label names. Index size() is reserved for
// out-of-vocabulary tokens, so embedding tables need rows() entries.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, std::vector<std::string> labels);

  std::size_t size() const { return tokens_.size(); }
  std::size_t rows() const { return tokens_.size() + 1; }
  std::uint32_t oov_index() const { return static_cast<std::uint32_t>(tokens_.size()); }

  std::uint32_t lookup(const std::string& token) const;
  IndexSeq lookup(const TokenSeq& tokens) const;
  // Adds token if absent; returns its index.
  std::uint32_t add(const std::string& token);

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::string>& labels() const { return labels_; }

  std::optional<LabelIndex> find_label(std::string_view name) const;
  LabelIndex label_index(std::string_view name) const;  // throws DataError

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && labels_ == other.labels_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> labels_;
};

struct Example {
  ExampleId id = 0;
  TokenSeq s1;
  TokenSeq s2;
  LabelIndex label = 0;
  std::optional<bool> minority;

  bool operator==(const Example&) const = default;
};

// Ordered, id-indexed collection of examples. Ids are unique and dense in
// [0, n); positions follow insertion order. Immutable after construction.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Example> examples, Vocabulary vocab);

  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }

  const Example& operator[](std::size_t i) const { return examples_[i]; }
  const std::vector<Example>& examples() const { return examples_; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<std::string>& labels() const { return vocab_.labels(); }

  // Position of the example with the given id; throws DataError if absent.
  std::size_t position_of(ExampleId id) const;

  const IndexSeq& s1_indices(std::size_t i) const { return s1_idx_[i]; }
  const IndexSeq& s2_indices(std::size_t i) const { return s2_idx_[i]; }

  // Same examples indexed against another vocabulary; label names are
  // remapped by name and must exist in it.
  Dataset reindexed(const Vocabulary& vocab) const;

  // Label indices for the given names; unknown names are a DataError.
  std::vector<LabelIndex> label_set(const std::vector<std::string>& names) const;

  bool operator==(const Dataset& other) const {
    return examples_ == other.examples_ && vocab_.labels() == other.vocab_.labels();
  }

 private:
  std::vector<Example> examples_;
  Vocabulary vocab_;
  std::vector<IndexSeq> s1_idx_;
  std::vector<IndexSeq> s2_idx_;
  std::vector<std::size_t> position_;
};

// Loads a JSONL file of {"id","s1","s2","label","minority"?} objects.
// Without a vocabulary one is built from the file's tokens (first-seen
// order) and labels (sorted). With one, unseen tokens map to OOV and
// unknown labels are errors.
Dataset load_jsonl(const std::filesystem::path& path,
                   const Vocabulary* vocab = nullptr);

Dataset parse_jsonl(std::string_view content, const Vocabulary* vocab = nullptr,
                    std::string_view source = "<memory>");

void save_jsonl(const Dataset& ds, const std::filesystem::path& path);

std::string to_jsonl(const Dataset& ds);

// Builds a vocabulary over all tokens of the examples with the given labels.
Vocabulary build_vocabulary(const std::vector<Example>& examples,
                            std::vector<std::string> labels);

}  // namespace forgetset

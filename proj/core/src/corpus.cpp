#include "forgetset/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forgetset/errors.hpp"

namespace forgetset {

namespace {

// Decodes one UTF-8 code point at `pos`; returns the code point and its
// byte length. Invalid sequences decode as a single opaque byte.
std::pair<char32_t, std::size_t> decode_utf8(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t k) -> int {
    if (pos + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
    }
  }
  return {0xFFFD, 1};
}

bool is_unicode_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 0x21 && u <= 0x2F) || (u >= 0x3A && u <= 0x40) ||
         (u >= 0x5B && u <= 0x60) || (u >= 0x7B && u <= 0x7E);
}

void push_token(std::string& raw, TokenSeq& out) {
  std::size_t b = 0, e = raw.size();
  while (b < e && is_ascii_punct(raw[b])) ++b;
  while (e > b && is_ascii_punct(raw[e - 1])) --e;
  if (e > b) {
    std::string tok = raw.substr(b, e - b);
    for (char& c : tok) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    out.push_back(std::move(tok));
  }
  raw.clear();
}

TokenSeq tokenize_field(const std::string& text, std::string_view field,
                        std::string_view source, std::size_t line) {
  TokenSeq toks = tokenize(text);
  if (toks.empty()) {
    throw DataError(std::string(source) + ": field \"" + std::string(field) +
                    "\" has no tokens at line " + std::to_string(line));
  }
  if (toks.size() > kMaxSequenceLength) toks.resize(kMaxSequenceLength);
  return toks;
}

std::string join(const TokenSeq& toks) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out.push_back(' ');
    out += toks[i];
  }
  return out;
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  std::string raw;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto [cp, len] = decode_utf8(text, pos);
    if (is_unicode_space(cp)) {
      push_token(raw, out);
    } else {
      raw.append(text.substr(pos, len));
    }
    pos += len;
  }
  push_token(raw, out);
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::string> labels)
    : labels_(std::move(labels)) {
  for (auto& t : tokens) add(t);
}

std::uint32_t Vocabulary::lookup(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? oov_index() : it->second;
}

IndexSeq Vocabulary::lookup(const TokenSeq& tokens) const {
  IndexSeq out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lookup(t));
  return out;
}

std::uint32_t Vocabulary::add(const std::string& token) {
  const auto [it, inserted] =
      index_.emplace(token, static_cast<std::uint32_t>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::optional<LabelIndex> Vocabulary::find_label(std::string_view name) const {
  const auto it = std::find(labels_.begin(), labels_.end(), name);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<LabelIndex>(it - labels_.begin());
}

LabelIndex Vocabulary::label_index(std::string_view name) const {
  if (auto idx = find_label(name)) return *idx;
  throw DataError("unknown label \"" + std::string(name) + "\"");
}

Dataset::Dataset(std::vector<Example> examples, Vocabulary vocab)
    : examples_(std::move(examples)), vocab_(std::move(vocab)) {
  const std::size_t n = examples_.size();
  position_.assign(n, n);
  s1_idx_.reserve(n);
  s2_idx_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Example& ex = examples_[i];
    if (ex.id >= n) {
      throw DataError("id " + std::to_string(ex.id) + " outside dense range [0, " +
                      std::to_string(n) + ")");
    }
    if (position_[ex.id] != n) throw DataError("duplicate id " + std::to_string(ex.id));
    position_[ex.id] = i;
    if (ex.label >= vocab_.labels().size()) {
      throw DataError("label index out of range for id " + std::to_string(ex.id));
    }
    if (ex.s1.empty() || ex.s2.empty()) {
      throw DataError("empty sentence for id " + std::to_string(ex.id));
    }
    s1_idx_.push_back(vocab_.lookup(ex.s1));
    s2_idx_.push_back(vocab_.lookup(ex.s2));
  }
}

std::size_t Dataset::position_of(ExampleId id) const {
  if (id >= position_.size()) throw DataError("unknown example id " + std::to_string(id));
  return position_[id];
}

Dataset Dataset::reindexed(const Vocabulary& vocab) const {
  std::vector<Example> copy = examples_;
  for (auto& ex : copy) ex.label = vocab.label_index(vocab_.labels().at(ex.label));
  return Dataset(std::move(copy), vocab);
}

std::vector<LabelIndex> Dataset::label_set(const std::vector<std::string>& names) const {
  std::vector<LabelIndex> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(vocab_.label_index(n));
  return out;
}

Vocabulary build_vocabulary(const std::vector<Example>& examples,
                            std::vector<std::string> labels) {
  Vocabulary v({}, std::move(labels));
  for (const auto& ex : examples) {
    for (const auto& t : ex.s1) v.add(t);
    for (const auto& t : ex.s2) v.add(t);
  }
  return v;
}

Dataset parse_jsonl(std::string_view content, const Vocabulary* vocab,
                    std::string_view source) {
  struct Raw {
    Example ex;
    std::string label;
  };
  std::vector<Raw> rows;
  std::unordered_map<std::uint64_t, std::size_t> seen;
  const std::string src(source);

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    auto fail = [&](const std::string& why) -> DataError {
      return DataError(src + ": malformed line " + std::to_string(line_no) + ": " + why);
    };
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw fail(e.what());
    }
    if (!obj.is_object()) throw fail("not a JSON object");
    for (const char* key : {"id", "s1", "s2", "label"}) {
      if (!obj.contains(key)) throw fail(std::string("missing field \"") + key + "\"");
    }
    if (!obj["id"].is_number_integer() || obj["id"].get<std::int64_t>() < 0) {
      throw fail("\"id\" must be a non-negative integer");
    }
    if (!obj["s1"].is_string() || !obj["s2"].is_string() || !obj["label"].is_string()) {
      throw fail("\"s1\", \"s2\" and \"label\" must be strings");
    }
    const auto id64 = obj["id"].get<std::uint64_t>();
    if (const auto it = seen.find(id64); it != seen.end()) {
      throw DataError(src + ": duplicate id " + std::to_string(id64) + " at line " +
                      std::to_string(line_no));
    }
    seen.emplace(id64, line_no);

    Raw r;
    r.ex.id = static_cast<ExampleId>(id64);
    r.ex.s1 = tokenize_field(obj["s1"].get<std::string>(), "s1", src, line_no);
    r.ex.s2 = tokenize_field(obj["s2"].get<std::string>(), "s2", src, line_no);
    r.label = obj["label"].get<std::string>();
    if (const auto it = obj.find("minority"); it != obj.end() && !it->is_null()) {
      if (!it->is_boolean()) throw fail("\"minority\" must be a boolean or null");
      r.ex.minority = it->get<bool>();
    }
    if (vocab != nullptr && !vocab->find_label(r.label)) {
      throw DataError(src + ": unknown label \"" + r.label + "\" at line " +
                      std::to_string(line_no));
    }
    if (id64 > std::numeric_limits<ExampleId>::max()) throw fail("id too large");
    rows.push_back(std::move(r));
  }

  for (const auto& r : rows) {
    if (r.ex.id >= rows.size()) {
      throw DataError(src + ": ids must be dense in [0, " + std::to_string(rows.size()) +
                      "); found id " + std::to_string(r.ex.id));
    }
  }

  Vocabulary v;
  if (vocab != nullptr) {
    v = *vocab;
  } else {
    std::set<std::string> names;
    for (const auto& r : rows) names.insert(r.label);
    v = Vocabulary({}, {names.begin(), names.end()});
    for (const auto& r : rows) {
      for (const auto& t : r.ex.s1) v.add(t);
      for (const auto& t : r.ex.s2) v.add(t);
    }
  }
  std::vector<Example> examples;
  examples.reserve(rows.size());
  for (auto& r : rows) {
    r.ex.label = v.label_index(r.label);
    examples.push_back(std::move(r.ex));
  }
  return Dataset(std::move(examples), std::move(v));
}

Dataset load_jsonl(const std::filesystem::path& path, const Vocabulary* vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_jsonl(buf.str(), vocab, path.string());
}

std::string to_jsonl(const Dataset& ds) {
  std::string out;
  for (const auto& ex : ds.examples()) {
    nlohmann::ordered_json obj;
    obj["id"] = ex.id;
    obj["s1"] = join(ex.s1);
    obj["s2"] = join(ex.s2);
    obj["label"] = ds.labels().at(ex.label);
    if (ex.minority) obj["minority"] = *ex.minority;
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

void save_jsonl(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_jsonl(ds);
  if (!out.flush()) throw DataError("write failed for " + path.string());
}

}  // namespace forgetset

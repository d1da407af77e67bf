#include "forgetset/ledger.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "forgetset/errors.hpp"
#include "forgetset/io_util.hpp"

namespace forgetset {

ForgettingLedger::ForgettingLedger(std::vector<ExampleId> ids)
    : ids_(std::move(ids)),
      bits_(ids_.size()),
      events_(ids_.size(), 0),
      first_learned_(ids_.size(), kNever) {}

ForgettingLedger ForgettingLedger::from_bits(std::vector<ExampleId> ids,
                                             const std::vector<std::string>& bit_rows) {
  if (ids.size() != bit_rows.size()) throw DataError("ledger: ids and bit rows differ in length");
  ForgettingLedger ledger(std::move(ids));
  const std::size_t r = bit_rows.empty() ? 0 : bit_rows.front().size();
  std::vector<std::uint8_t> column(ledger.n_examples());
  for (const auto& row : bit_rows) {
    if (row.size() != r) throw DataError("ledger: bit rows have unequal lengths");
    if (row.find_first_not_of("01") != std::string::npos) {
      throw DataError("ledger: bits must be 0/1, got \"" + row + "\"");
    }
  }
  for (std::size_t k = 0; k < r; ++k) {
    for (std::size_t i = 0; i < bit_rows.size(); ++i) column[i] = bit_rows[i][k] == '1';
    ledger.append_recording(column);
  }
  return ledger;
}

void ForgettingLedger::append_recording(std::span<const std::uint8_t> correct) {
  if (correct.size() != ids_.size()) throw DataError("ledger: recording size mismatch");
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const std::uint8_t now = correct[i] ? 1 : 0;
    auto& row = bits_[i];
    if (!row.empty() && row.back() == 1 && now == 0) ++events_[i];
    if (now == 1 && first_learned_[i] == kNever) first_learned_[i] = n_recordings_;
    row.push_back(now);
  }
  ++n_recordings_;
}

std::string ForgettingLedger::bits(std::size_t row) const {
  std::string out;
  out.reserve(bits_[row].size());
  for (auto b : bits_[row]) out.push_back(b ? '1' : '0');
  return out;
}

std::optional<std::size_t> ForgettingLedger::first_learned(std::size_t row) const {
  if (first_learned_[row] == kNever) return std::nullopt;
  return first_learned_[row];
}

std::vector<ExampleId> extract_forgettables(const ForgettingLedger& ledger) {
  std::vector<ExampleId> out;
  for (std::size_t i = 0; i < ledger.n_examples(); ++i) {
    if (ledger.forgettable(i)) out.push_back(ledger.ids()[i]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t ForgettingHistogram::total() const {
  std::size_t n = never_learned;
  for (const auto& [k, v] : learned) n += v;
  return n;
}

ForgettingHistogram histogram(const ForgettingLedger& ledger) {
  ForgettingHistogram h;
  for (std::size_t i = 0; i < ledger.n_examples(); ++i) {
    if (ledger.never_learned(i)) {
      ++h.never_learned;
    } else {
      ++h.learned[ledger.event_count(i)];
    }
  }
  return h;
}

std::vector<ExampleId> rank_by_loss(const FinalLosses& losses, std::size_t count) {
  const std::size_t n = losses.ids.size();
  if (count < 1 || count > n) {
    throw ConfigError("rank_by_loss: N must lie in [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (losses.loss[a] != losses.loss[b]) return losses.loss[a] > losses.loss[b];
    return losses.ids[a] < losses.ids[b];
  });
  std::vector<ExampleId> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(losses.ids[order[k]]);
  return out;
}

std::vector<ExampleId> rank_by_loss_fraction(const FinalLosses& losses, double q) {
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("rank_by_loss: q must lie in (0, 1]");
  const auto n = static_cast<double>(losses.ids.size());
  auto count = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  count = std::clamp<std::size_t>(count, 1, losses.ids.size());
  return rank_by_loss(losses, count);
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> lines_of(const std::string& content) {
  std::vector<std::string> out;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& s, const std::string& where) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw DataError(where + ": cannot parse number \"" + s + "\"");
  }
  return v;
}

}  // namespace

std::string ledger_to_csv(const ForgettingLedger& ledger) {
  std::string out = "example_id,first_learned,events,forgettable,bits\n";
  for (std::size_t i = 0; i < ledger.n_examples(); ++i) {
    const auto fl = ledger.first_learned(i);
    out += std::to_string(ledger.ids()[i]);
    out += ',';
    out += fl ? std::to_string(*fl) : std::string("never");
    out += ',';
    out += std::to_string(ledger.event_count(i));
    out += ',';
    out += ledger.forgettable(i) ? '1' : '0';
    out += ',';
    out += ledger.bits(i);
    out += '\n';
  }
  return out;
}

ForgettingLedger ledger_from_csv(const std::string& content, const std::string& source) {
  const auto lines = lines_of(content);
  if (lines.empty() || lines[0] != "example_id,first_learned,events,forgettable,bits") {
    throw DataError(source + ": missing ledger header");
  }
  std::vector<ExampleId> ids;
  std::vector<std::string> rows;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const std::string where = source + " line " + std::to_string(k + 1);
    const auto f = split(lines[k], ',');
    if (f.size() != 5) throw DataError(where + ": expected 5 fields");
    ids.push_back(parse_number<ExampleId>(f[0], where));
    rows.push_back(f[4]);
  }
  auto ledger = ForgettingLedger::from_bits(std::move(ids), rows);
  // Derived columns must agree with the stored bits.
  for (std::size_t i = 0; i < ledger.n_examples(); ++i) {
    const auto f = split(lines[i + 1], ',');
    const auto fl = ledger.first_learned(i);
    const std::string want_fl = fl ? std::to_string(*fl) : std::string("never");
    if (f[1] != want_fl || f[2] != std::to_string(ledger.event_count(i)) ||
        f[3] != (ledger.forgettable(i) ? "1" : "0")) {
      throw DataError(source + " line " + std::to_string(i + 2) +
                      ": derived columns disagree with bits");
    }
  }
  return ledger;
}

void write_ledger_csv(const ForgettingLedger& ledger, const std::filesystem::path& path) {
  write_text_file(path, ledger_to_csv(ledger));
}

ForgettingLedger read_ledger_csv(const std::filesystem::path& path) {
  return ledger_from_csv(read_text_file(path), path.string());
}

std::string losses_to_csv(const FinalLosses& losses) {
  std::string out = "example_id,loss\n";
  for (std::size_t i = 0; i < losses.ids.size(); ++i) {
    out += std::to_string(losses.ids[i]);
    out += ',';
    out += format_double(losses.loss[i]);
    out += '\n';
  }
  return out;
}

void write_losses_csv(const FinalLosses& losses, const std::filesystem::path& path) {
  write_text_file(path, losses_to_csv(losses));
}

FinalLosses read_losses_csv(const std::filesystem::path& path) {
  const auto lines = lines_of(read_text_file(path));
  if (lines.empty() || lines[0] != "example_id,loss") {
    throw DataError(path.string() + ": missing losses header");
  }
  FinalLosses out;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const std::string where = path.string() + " line " + std::to_string(k + 1);
    const auto f = split(lines[k], ',');
    if (f.size() != 2) throw DataError(where + ": expected 2 fields");
    out.ids.push_back(parse_number<ExampleId>(f[0], where));
    out.loss.push_back(parse_number<double>(f[1], where));
  }
  return out;
}

std::string histogram_to_csv(const ForgettingHistogram& hist) {
  std::string out = "events,count\n";
  for (const auto& [k, v] : hist.learned) {
    out += std::to_string(k) + "," + std::to_string(v) + "\n";
  }
  out += "never," + std::to_string(hist.never_learned) + "\n";
  return out;
}

std::string id_list_to_text(const std::vector<ExampleId>& ids) {
  std::string out;
  for (auto id : ids) {
    out += std::to_string(id);
    out += '\n';
  }
  return out;
}

void write_id_list(const std::vector<ExampleId>& ids, const std::filesystem::path& path) {
  write_text_file(path, id_list_to_text(ids));
}

std::vector<ExampleId> read_id_list(const std::filesystem::path& path) {
  std::vector<ExampleId> out;
  const auto lines = lines_of(read_text_file(path));
  for (std::size_t k = 0; k < lines.size(); ++k) {
    out.push_back(parse_number<ExampleId>(lines[k], path.string() + " line " +
                                                        std::to_string(k + 1)));
  }
  return out;
}

std::string id_list_hash(const std::vector<ExampleId>& ids) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : id_list_to_text(ids)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace forgetset

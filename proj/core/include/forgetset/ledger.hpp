#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forgetset/corpus.hpp"

namespace forgetset {

// Per-example correctness history over recordings with streaming forgetting
// statistics. Row i belongs to example ids()[i].
class ForgettingLedger {
 public:
  ForgettingLedger() = default;
  explicit ForgettingLedger(std::vector<ExampleId> ids);

  // Rebuilds a ledger from stored 0/1 rows (all of equal length).
  static ForgettingLedger from_bits(std::vector<ExampleId> ids,
                                    const std::vector<std::string>& bit_rows);

  // One correctness flag per row, in row order.
  void append_recording(std::span<const std::uint8_t> correct);

  std::size_t n_examples() const { return ids_.size(); }
  std::size_t n_recordings() const { return n_recordings_; }
  const std::vector<ExampleId>& ids() const { return ids_; }

  bool correct(std::size_t row, std::size_t recording) const {
    return bits_[row][recording] != 0;
  }
  std::string bits(std::size_t row) const;

  // Number of correct -> incorrect transitions between adjacent recordings.
  std::size_t event_count(std::size_t row) const { return events_[row]; }
  // First recording classified correctly, if any.
  std::optional<std::size_t> first_learned(std::size_t row) const;
  bool never_learned(std::size_t row) const { return !first_learned(row).has_value(); }
  bool forgettable(std::size_t row) const { return events_[row] > 0 || never_learned(row); }

  bool operator==(const ForgettingLedger& other) const {
    return ids_ == other.ids_ && bits_ == other.bits_ && n_recordings_ == other.n_recordings_;
  }

 private:
  static constexpr std::size_t kNever = static_cast<std::size_t>(-1);

  std::vector<ExampleId> ids_;
  std::vector<std::vector<std::uint8_t>> bits_;
  std::vector<std::size_t> events_;
  std::vector<std::size_t> first_learned_;
  std::size_t n_recordings_ = 0;
};

// Ids flagged forgettable, ascending.
std::vector<ExampleId> extract_forgettables(const ForgettingLedger& ledger);

struct ForgettingHistogram {
  // Event count -> number of learned examples with that count.
  std::map<std::size_t, std::size_t> learned;
  std::size_t never_learned = 0;

  std::size_t total() const;
};

ForgettingHistogram histogram(const ForgettingLedger& ledger);

// Per-example cross-entropy after the final epoch.
struct FinalLosses {
  std::vector<ExampleId> ids;
  std::vector<double> loss;
};

// Top-N ids by loss, descending; ties go to the smaller id.
std::vector<ExampleId> rank_by_loss(const FinalLosses& losses, std::size_t count);
// Top ceil(q * n) ids, for 0 < q <= 1.
std::vector<ExampleId> rank_by_loss_fraction(const FinalLosses& losses, double q);

// Header: example_id,first_learned,events,forgettable,bits
std::string ledger_to_csv(const ForgettingLedger& ledger);
ForgettingLedger ledger_from_csv(const std::string& content, const std::string& source);
void write_ledger_csv(const ForgettingLedger& ledger, const std::filesystem::path& path);
ForgettingLedger read_ledger_csv(const std::filesystem::path& path);

// Header: example_id,loss
std::string losses_to_csv(const FinalLosses& losses);
void write_losses_csv(const FinalLosses& losses, const std::filesystem::path& path);
FinalLosses read_losses_csv(const std::filesystem::path& path);

// Header: events,count with a final "never" row.
std::string histogram_to_csv(const ForgettingHistogram& hist);

// One id per line.
std::string id_list_to_text(const std::vector<ExampleId>& ids);
void write_id_list(const std::vector<ExampleId>& ids, const std::filesystem::path& path);
std::vector<ExampleId> read_id_list(const std::filesystem::path& path);

// 64-bit FNV-1a of id_list_to_text(ids), as 16 hex digits.
std::string id_list_hash(const std::vector<ExampleId>& ids);

}  // namespace forgetset

#pragma once

// Brute-force recount of forgetting statistics from a full correctness matrix.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "forgetset/ledger.hpp"
#include "forgetset/rng.hpp"

namespace forgetset::testing {

struct RowOracle {
  std::size_t events = 0;
  std::optional<std::size_t> first_learned;
  bool forgettable = false;
};

inline RowOracle recount(const std::vector<std::uint8_t>& row) {
  RowOracle o;
  for (std::size_t t = 0; t < row.size(); ++t) {
    if (row[t] && !o.first_learned) o.first_learned = t;
    if (t > 0 && row[t - 1] == 1 && row[t] == 0) ++o.events;
  }
  o.forgettable = o.events > 0 || !o.first_learned;
  return o;
}

// Random matrix [examples][recordings]; per-row accuracy varies so all
// regimes (never learned, always correct, flip-flopping) appear.
inline std::vector<std::vector<std::uint8_t>> random_matrix(Rng& rng, std::size_t n, std::size_t t) {
  std::vector<std::vector<std::uint8_t>> m(n, std::vector<std::uint8_t>(t));
  for (auto& row : m) {
    const double p = rng.uniform();
    for (auto& b : row) b = rng.bernoulli(p) ? 1 : 0;
  }
  return m;
}

// Streams the matrix column by column into a ledger and compares every row
// and the extracted set with the recount. Returns the number of mismatches.
inline std::size_t ledger_mismatches(const std::vector<std::vector<std::uint8_t>>& m) {
  const std::size_t n = m.size();
  const std::size_t t = n ? m[0].size() : 0;
  std::vector<ExampleId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<ExampleId>(i);
  ForgettingLedger ledger(ids);
  std::vector<std::uint8_t> col(n);
  for (std::size_t r = 0; r < t; ++r) {
    for (std::size_t i = 0; i < n; ++i) col[i] = m[i][r];
    ledger.append_recording(col);
  }
  std::size_t bad = 0;
  std::vector<ExampleId> expected;
  for (std::size_t i = 0; i < n; ++i) {
    const RowOracle o = recount(m[i]);
    if (ledger.event_count(i) != o.events) ++bad;
    if (ledger.first_learned(i) != o.first_learned) ++bad;
    if (ledger.forgettable(i) != o.forgettable) ++bad;
    if (o.forgettable) expected.push_back(ids[i]);
  }
  if (extract_forgettables(ledger) != expected) ++bad;
  return bad;
}

}  // namespace forgetset::testing

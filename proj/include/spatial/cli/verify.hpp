#pragma once

#include <cstdint>
#include <string>

namespace spatial::cli {

// Formula-vs-enumeration audit of the pair-aggregation scheme. The
// enumerator here walks raw index pairs directly from the (M, K, N)
// semantics and never calls the aggregation implementation.
struct PairVerifyReport {
  std::int64_t formula_total = 0;
  std::int64_t enumerated_total = 0;
  std::int64_t aggregated_total = 0;
  std::int64_t enumerated_patch = 0;
  std::int64_t aggregated_patch = 0;
  bool match = false;
  std::string text;
};

PairVerifyReport verify_pairs(int m, int k, int n);

// Pair table (indices, kinds, targets) as CSV for oracle comparison.
// Patch targets come from seeded dummy geometry (64x64, s=24).
std::string dump_pairs_csv(int m, int k, int n, std::uint64_t seed);

}  // namespace spatial::cli

#pragma once

#include <cstdint>
#include <vector>

#include "spatial/patch/patch.hpp"

namespace spatial::agg {

// Per-row provenance of an encoder representation batch. Rows are ordered:
// all K*M image views first (image-major: row m*K + k), then all M*N patch
// rows grouped by image (row K*M + m*N + p).
struct Provenance {
  enum class Kind { kImageView, kPatch };
  Kind kind = Kind::kImageView;
  int image_index = 0;
  int view_index = 0;  // augmentation index or patch index within the image
  patching::PatchSpec spec;  // patches only
};

enum class PairKind { kImagePos, kImageNeg, kPatch };

struct PairRow {
  int left = 0;   // row indices into the representation batch
  int right = 0;
  int class_target = 1;  // 1 positive, 0 negative
  double tx = 0;         // distance target
  double ty = 0;
  PairKind kind = PairKind::kImagePos;
};

struct PairCounts {
  std::int64_t image_pos = 0;
  std::int64_t image_neg = 0;
  std::int64_t patch = 0;
  std::int64_t total() const { return image_pos + image_neg + patch; }
};

// Validate the row-ordering invariant of a tagged representation batch.
void check_batch_ordering(const std::vector<Provenance>& tags, int m, int k, int n);

// Positive pairs from the augmentation-shifting scheme plus one negative per
// positive obtained by shifting the right element to the next image
// (wrap-around). Emits M*(K^2-K) rows. K < 2 is a configuration error.
std::vector<PairRow> aggregate_image_pairs(const std::vector<Provenance>& tags, int m, int k);

// Unordered same-image patch pairs, positives only, with signed relative
// distance targets; M*(N^2-N)/2 rows. N < 2 yields an empty result.
std::vector<PairRow> aggregate_patch_pairs(const std::vector<Provenance>& tags, int m, int n);

// Closed form M(K^2-K) + M(N^2-N)/2.
std::int64_t total_pair_count(std::int64_t m, std::int64_t k, std::int64_t n);

// Both aggregations concatenated (image pairs first), with count check.
std::vector<PairRow> build_pairs(const std::vector<Provenance>& tags, int m, int k, int n);

PairCounts count_by_kind(const std::vector<PairRow>& rows);

}  // namespace spatial::agg

#pragma once

#include <optional>
#include <vector>

#include "spatial/core/image.hpp"
#include "spatial/core/rng.hpp"

namespace spatial::patching {

// A sampled square patch. Positions are sampled on the integer pixel grid
// (px/py) and exposed normalized (top-left corner, x rightward, y downward).
// Specs may also be constructed from bare normalized coordinates, in which
// case px/py are -1 and predicates fall back to floating-point arithmetic.
struct PatchSpec {
  double x = 0;  // in [0, 1 - s/W]
  double y = 0;  // in [0, 1 - s/H]
  int size_px = 0;
  int image_index = 0;
  int img_w = 0;
  int img_h = 0;
  int px = -1;  // integer grid position, -1 when not grid-aligned
  int py = -1;

  bool grid_aligned() const { return px >= 0 && py >= 0; }
};

PatchSpec make_patch_spec(int px, int py, int size_px, int img_w, int img_h, int image_index);
PatchSpec make_patch_spec_normalized(double x, double y, int size_px, int img_w, int img_h, int image_index);

// True iff the two s x s pixel rectangles share at least one pixel:
// |ax-bx|*W < s AND |ay-by|*H < s. Exact integer arithmetic for
// grid-aligned specs; touching edges do not overlap.
bool overlaps(const PatchSpec& a, const PatchSpec& b);

// Signed relative distance (a.x - b.x, a.y - b.y); antisymmetric.
struct Delta {
  double dx = 0;
  double dy = 0;
};
Delta relative_distance(const PatchSpec& a, const PatchSpec& b);

// Largest patch size for which two non-overlapping placements exist.
int max_nonoverlap_size(int img_w, int img_h);

// Sample N patch positions; the first two are guaranteed non-overlapping.
// Rejection sampling with a deterministic fallback; never errors once the
// geometry admits a placement.
std::vector<PatchSpec> sample_patch_positions(int img_w, int img_h, int n, int size_px, Rng& rng,
                                              int max_attempts = 100, int image_index = 0);

enum class PatchMode { kRescaled, kAdditive };

struct JitterParams {
  double brightness = 0.8;
  double contrast = 0.8;
  double saturation = 0.8;
  double hue = 0.2;
  double jitter_prob = 0.8;
  double grayscale_prob = 0.2;

  static JitterParams disabled() { return {0, 0, 0, 0, 0, 0}; }
};

struct PatchView {
  Image pixels;
  PatchSpec spec;
  PatchMode mode = PatchMode::kRescaled;
};

// Extract the patch and produce an encoder-sized view. RESCALED: bilinear
// resize to target_size. ADDITIVE: the unmodified-resolution patch placed at
// its original pixel location on a zero canvas of the source image size.
// Only color jitter and random grayscale are applied, never crop or flip.
PatchView extract_patch_view(const Image& image, const PatchSpec& spec, PatchMode mode, Rng& rng,
                             const JitterParams& jitter, int target_size);

}  // namespace spatial::patching

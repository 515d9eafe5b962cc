#include "spatial/patch/patch.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "spatial/aug/augment.hpp"

namespace spatial::patching {

PatchSpec make_patch_spec(int px, int py, int size_px, int img_w, int img_h, int image_index) {
  SPATIAL_CHECK(px >= 0 && py >= 0 && px + size_px <= img_w && py + size_px <= img_h,
                "patch position out of bounds");
  PatchSpec s;
  s.px = px;
  s.py = py;
  s.x = static_cast<double>(px) / img_w;
  s.y = static_cast<double>(py) / img_h;
  s.size_px = size_px;
  s.img_w = img_w;
  s.img_h = img_h;
  s.image_index = image_index;
  return s;
}

PatchSpec make_patch_spec_normalized(double x, double y, int size_px, int img_w, int img_h, int image_index) {
  PatchSpec s;
  s.x = x;
  s.y = y;
  s.size_px = size_px;
  s.img_w = img_w;
  s.img_h = img_h;
  s.image_index = image_index;
  return s;
}

bool overlaps(const PatchSpec& a, const PatchSpec& b) {
  SPATIAL_CHECK(a.img_w == b.img_w && a.img_h == b.img_h, "overlaps: mismatched image geometry");
  SPATIAL_CHECK(a.size_px == b.size_px, "overlaps: mismatched patch sizes");
  const int s = a.size_px;
  if (a.grid_aligned() && b.grid_aligned()) return std::abs(a.px - b.px) < s && std::abs(a.py - b.py) < s;
  return std::abs(a.x - b.x) * a.img_w < s && std::abs(a.y - b.y) * a.img_h < s;
}

Delta relative_distance(const PatchSpec& a, const PatchSpec& b) {
  SPATIAL_CHECK(a.image_index == b.image_index, "relative_distance: patches from different images");
  return {a.x - b.x, a.y - b.y};
}

int max_nonoverlap_size(int img_w, int img_h) { return std::max(img_w, img_h) / 2; }

namespace {

// Whether some in-bounds second position is non-overlapping with (px, py).
bool admits_partner(int px, int py, int s, int w, int h) {
  return std::max(px, w - s - px) >= s || std::max(py, h - s - py) >= s;
}

}  // namespace

std::vector<PatchSpec> sample_patch_positions(int img_w, int img_h, int n, int size_px, Rng& rng,
                                              int max_attempts, int image_index) {
  SPATIAL_CHECK_CONFIG(n >= 1, "sample_patch_positions: need at least one patch");
  SPATIAL_CHECK_CONFIG(size_px >= 1, "sample_patch_positions: patch size must be positive");
  SPATIAL_CHECK_CONFIG(size_px < img_w && size_px < img_h,
                       "patch size " + std::to_string(size_px) + " must be smaller than the image (" +
                           std::to_string(img_w) + "x" + std::to_string(img_h) + ")");
  if (n >= 2) {
    SPATIAL_CHECK_CONFIG(2 * size_px <= std::max(img_w, img_h),
                         "no non-overlapping placement exists for patch size " + std::to_string(size_px) +
                             "; maximum feasible size is " + std::to_string(max_nonoverlap_size(img_w, img_h)));
  }
  const int xmax = img_w - size_px;
  const int ymax = img_h - size_px;
  std::vector<PatchSpec> out;
  out.reserve(n);

  auto sample_pos = [&](int& px, int& py) {
    px = static_cast<int>(rng.uniform_int(0, xmax));
    py = static_cast<int>(rng.uniform_int(0, ymax));
  };

  int p1x = 0, p1y = 0;
  sample_pos(p1x, p1y);
  if (n >= 2) {
    // The first position must admit a non-overlapping partner; fall back to
    // the origin, which admits one whenever the geometry does.
    for (int a = 0; a < max_attempts && !admits_partner(p1x, p1y, size_px, img_w, img_h); ++a) sample_pos(p1x, p1y);
    if (!admits_partner(p1x, p1y, size_px, img_w, img_h)) {
      p1x = 0;
      p1y = 0;
    }
  }
  out.push_back(make_patch_spec(p1x, p1y, size_px, img_w, img_h, image_index));

  if (n >= 2) {
    int p2x = 0, p2y = 0;
    bool ok = false;
    for (int a = 0; a < max_attempts && !ok; ++a) {
      sample_pos(p2x, p2y);
      ok = !overlaps(out[0], make_patch_spec(p2x, p2y, size_px, img_w, img_h, image_index));
    }
    if (!ok) {
      // Deterministic fallback: the in-bounds corner farthest from the first
      // patch in Chebyshev distance. Non-overlapping whenever the first
      // position admits any partner.
      const std::array<std::pair<int, int>, 4> corners{{{0, 0}, {xmax, 0}, {0, ymax}, {xmax, ymax}}};
      int best = -1;
      for (const auto& [cx, cy] : corners) {
        const int d = std::max(std::abs(cx - p1x), std::abs(cy - p1y));
        if (d > best) {
          best = d;
          p2x = cx;
          p2y = cy;
        }
      }
    }
    PatchSpec second = make_patch_spec(p2x, p2y, size_px, img_w, img_h, image_index);
    SPATIAL_CHECK(!overlaps(out[0], second), "non-overlap fallback failed");
    out.push_back(second);
  }

  for (int i = static_cast<int>(out.size()); i < n; ++i) {
    int px = 0, py = 0;
    sample_pos(px, py);
    out.push_back(make_patch_spec(px, py, size_px, img_w, img_h, image_index));
  }
  return out;
}

PatchView extract_patch_view(const Image& image, const PatchSpec& spec, PatchMode mode, Rng& rng,
                             const JitterParams& jitter, int target_size) {
  SPATIAL_CHECK(spec.grid_aligned(), "extract_patch_view: spec must be grid-aligned");
  SPATIAL_CHECK(spec.img_w == image.w && spec.img_h == image.h, "extract_patch_view: geometry mismatch");
  PatchView view;
  view.spec = spec;
  view.mode = mode;
  const Image raw = crop(image, spec.py, spec.px, spec.size_px, spec.size_px);
  if (mode == PatchMode::kRescaled) {
    view.pixels = aug::color_jitter_grayscale(resize_bilinear(raw, target_size, target_size), jitter, rng);
  } else {
    const Image jittered = aug::color_jitter_grayscale(raw, jitter, rng);
    Image canvas(image.h, image.w);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < spec.size_px; ++y)
        for (int x = 0; x < spec.size_px; ++x) canvas.at(c, spec.py + y, spec.px + x) = jittered.at(c, y, x);
    view.pixels = std::move(canvas);
  }
  return view;
}

}  // namespace spatial::patching

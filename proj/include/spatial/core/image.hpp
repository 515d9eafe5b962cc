#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "spatial/common.hpp"

namespace spatial {

// Dense float image, channel-major planes, values nominally in [0,1].
struct Image {
  int h = 0;
  int w = 0;
  std::vector<float> data;  // size 3*h*w, plane c at [c*h*w, (c+1)*h*w)

  Image() = default;
  Image(int height, int width) : h(height), w(width), data(static_cast<std::size_t>(3) * height * width, 0.f) {}

  float& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * h + y) * w + x]; }
  float at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * h + y) * w + x]; }

  const float* plane(int c) const { return data.data() + static_cast<std::size_t>(c) * h * w; }
  float* plane(int c) { return data.data() + static_cast<std::size_t>(c) * h * w; }
};

inline Image crop(const Image& src, int y0, int x0, int ch, int cw) {
  SPATIAL_CHECK(y0 >= 0 && x0 >= 0 && y0 + ch <= src.h && x0 + cw <= src.w, "crop out of bounds");
  Image out(ch, cw);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) out.at(c, y, x) = src.at(c, y0 + y, x0 + x);
  return out;
}

// Bilinear resize with half-pixel centers; clamped at borders.
inline Image resize_bilinear(const Image& src, int oh, int ow) {
  if (src.h == oh && src.w == ow) return src;
  Image out(oh, ow);
  const double sy = static_cast<double>(src.h) / oh;
  const double sx = static_cast<double>(src.w) / ow;
  for (int y = 0; y < oh; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const int y0 = std::min(static_cast<int>(fy), src.h - 1);
    const int y1 = std::min(y0 + 1, src.h - 1);
    const float wy = static_cast<float>(fy - y0);
    for (int x = 0; x < ow; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const int x0 = std::min(static_cast<int>(fx), src.w - 1);
      const int x1 = std::min(x0 + 1, src.w - 1);
      const float wx = static_cast<float>(fx - x0);
      for (int c = 0; c < 3; ++c) {
        const float top = src.at(c, y0, x0) * (1.f - wx) + src.at(c, y0, x1) * wx;
        const float bot = src.at(c, y1, x0) * (1.f - wx) + src.at(c, y1, x1) * wx;
        out.at(c, y, x) = top * (1.f - wy) + bot * wy;
      }
    }
  }
  return out;
}

inline Image hflip(const Image& src) {
  Image out(src.h, src.w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < src.h; ++y)
      for (int x = 0; x < src.w; ++x) out.at(c, y, x) = src.at(c, y, src.w - 1 - x);
  return out;
}

// Inverse-mapped affine warp about the image center, bilinear sampling,
// zero fill outside the source. coeffs maps output px -> source px:
//   xs = a*xo + b*yo + tx,  ys = c*xo + d*yo + ty   (centered coordinates)
struct AffineCoeffs {
  double a = 1, b = 0, c = 0, d = 1, tx = 0, ty = 0;
};

inline Image affine_warp(const Image& src, const AffineCoeffs& m) {
  Image out(src.h, src.w);
  const double cx = (src.w - 1) / 2.0;
  const double cy = (src.h - 1) / 2.0;
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      const double xo = x - cx;
      const double yo = y - cy;
      const double xs = m.a * xo + m.b * yo + m.tx + cx;
      const double ys = m.c * xo + m.d * yo + m.ty + cy;
      const int x0 = static_cast<int>(std::floor(xs));
      const int y0 = static_cast<int>(std::floor(ys));
      const float wx = static_cast<float>(xs - x0);
      const float wy = static_cast<float>(ys - y0);
      for (int c = 0; c < 3; ++c) {
        auto sample = [&](int yy, int xx) -> float {
          if (yy < 0 || yy >= src.h || xx < 0 || xx >= src.w) return 0.f;
          return src.at(c, yy, xx);
        };
        const float top = sample(y0, x0) * (1.f - wx) + sample(y0, x0 + 1) * wx;
        const float bot = sample(y0 + 1, x0) * (1.f - wx) + sample(y0 + 1, x0 + 1) * wx;
        out.at(c, y, x) = top * (1.f - wy) + bot * wy;
      }
    }
  }
  return out;
}

}  // namespace spatial

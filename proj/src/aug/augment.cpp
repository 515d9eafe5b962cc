#include "spatial/aug/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace spatial::aug {

namespace {

inline float clamp01(float v) { return std::min(1.f, std::max(0.f, v)); }

inline float luma(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

}  // namespace

Image adjust_brightness(const Image& im, float factor) {
  Image out = im;
  for (auto& v : out.data) v = clamp01(v * factor);
  return out;
}

Image adjust_contrast(const Image& im, float factor) {
  double mean = 0;
  const int n = im.h * im.w;
  for (int i = 0; i < n; ++i) mean += luma(im.data[i], im.data[n + i], im.data[2 * n + i]);
  const float m = static_cast<float>(mean / n);
  Image out = im;
  for (auto& v : out.data) v = clamp01((v - m) * factor + m);
  return out;
}

Image adjust_saturation(const Image& im, float factor) {
  Image out(im.h, im.w);
  const int n = im.h * im.w;
  for (int i = 0; i < n; ++i) {
    const float g = luma(im.data[i], im.data[n + i], im.data[2 * n + i]);
    out.data[i] = clamp01((im.data[i] - g) * factor + g);
    out.data[n + i] = clamp01((im.data[n + i] - g) * factor + g);
    out.data[2 * n + i] = clamp01((im.data[2 * n + i] - g) * factor + g);
  }
  return out;
}

Image adjust_hue(const Image& im, float delta) {
  Image out(im.h, im.w);
  const int n = im.h * im.w;
  for (int i = 0; i < n; ++i) {
    float r = im.data[i], g = im.data[n + i], b = im.data[2 * n + i];
    const float mx = std::max({r, g, b});
    const float mn = std::min({r, g, b});
    const float v = mx;
    const float c = mx - mn;
    float h = 0;
    if (c > 0) {
      if (mx == r)
        h = std::fmod((g - b) / c, 6.f);
      else if (mx == g)
        h = (b - r) / c + 2.f;
      else
        h = (r - g) / c + 4.f;
      h /= 6.f;
      if (h < 0) h += 1.f;
    }
    const float s = mx > 0 ? c / mx : 0.f;
    h = h + delta;
    h -= std::floor(h);
    // HSV -> RGB
    const float hh = h * 6.f;
    const int sect = std::min(5, static_cast<int>(hh));
    const float f = hh - sect;
    const float p = v * (1 - s);
    const float q = v * (1 - s * f);
    const float t = v * (1 - s * (1 - f));
    float rr = v, gg = t, bb = p;
    switch (sect) {
      case 0: rr = v; gg = t; bb = p; break;
      case 1: rr = q; gg = v; bb = p; break;
      case 2: rr = p; gg = v; bb = t; break;
      case 3: rr = p; gg = q; bb = v; break;
      case 4: rr = t; gg = p; bb = v; break;
      case 5: rr = v; gg = p; bb = q; break;
    }
    out.data[i] = clamp01(rr);
    out.data[n + i] = clamp01(gg);
    out.data[2 * n + i] = clamp01(bb);
  }
  return out;
}

Image to_grayscale(const Image& im) {
  Image out(im.h, im.w);
  const int n = im.h * im.w;
  for (int i = 0; i < n; ++i) {
    const float g = luma(im.data[i], im.data[n + i], im.data[2 * n + i]);
    out.data[i] = g;
    out.data[n + i] = g;
    out.data[2 * n + i] = g;
  }
  return out;
}

Image color_jitter_grayscale(const Image& im, const patching::JitterParams& p, Rng& rng) {
  Image out = im;
  if (p.jitter_prob > 0 && rng.bernoulli(p.jitter_prob)) {
    std::array<int, 4> order{0, 1, 2, 3};
    rng.shuffle(order);
    for (int op : order) {
      switch (op) {
        case 0:
          if (p.brightness > 0)
            out = adjust_brightness(out, static_cast<float>(rng.uniform(std::max(0.0, 1 - p.brightness), 1 + p.brightness)));
          break;
        case 1:
          if (p.contrast > 0)
            out = adjust_contrast(out, static_cast<float>(rng.uniform(std::max(0.0, 1 - p.contrast), 1 + p.contrast)));
          break;
        case 2:
          if (p.saturation > 0)
            out = adjust_saturation(out, static_cast<float>(rng.uniform(std::max(0.0, 1 - p.saturation), 1 + p.saturation)));
          break;
        case 3:
          if (p.hue > 0) out = adjust_hue(out, static_cast<float>(rng.uniform(-p.hue, p.hue)));
          break;
      }
    }
  }
  if (p.grayscale_prob > 0 && rng.bernoulli(p.grayscale_prob)) out = to_grayscale(out);
  return out;
}

Image random_resized_crop(const Image& im, int out_size, const CropParams& p, Rng& rng) {
  const int h = im.h;
  const int w = im.w;
  const double area = static_cast<double>(h) * w;
  int cy = 0, cx = 0, ch = h, cw = w;
  bool found = false;
  for (int attempt = 0; attempt < 10 && !found; ++attempt) {
    const double target_area = area * rng.uniform(p.min_scale, p.max_scale);
    const double log_ratio = rng.uniform(std::log(p.min_ratio), std::log(p.max_ratio));
    const double ratio = std::exp(log_ratio);
    const int tw = static_cast<int>(std::lround(std::sqrt(target_area * ratio)));
    const int th = static_cast<int>(std::lround(std::sqrt(target_area / ratio)));
    if (tw > 0 && th > 0 && tw <= w && th <= h) {
      cy = static_cast<int>(rng.uniform_int(0, h - th));
      cx = static_cast<int>(rng.uniform_int(0, w - tw));
      ch = th;
      cw = tw;
      found = true;
    }
  }
  if (!found) {
    // center crop at the clamped in-range ratio
    const double in_ratio = static_cast<double>(w) / h;
    if (in_ratio < p.min_ratio) {
      cw = w;
      ch = static_cast<int>(std::lround(w / p.min_ratio));
    } else if (in_ratio > p.max_ratio) {
      ch = h;
      cw = static_cast<int>(std::lround(h * p.max_ratio));
    } else {
      ch = h;
      cw = w;
    }
    cy = (h - ch) / 2;
    cx = (w - cw) / 2;
  }
  return resize_bilinear(crop(im, cy, cx, ch, cw), out_size, out_size);
}

Image full_image_augment(const Image& im, int out_size, const FullAugmentParams& p, Rng& rng) {
  Image out = random_resized_crop(im, out_size, p.crop, rng);
  if (p.hflip_prob > 0 && rng.bernoulli(p.hflip_prob)) out = hflip(out);
  out = color_jitter_grayscale(out, p.jitter, rng);
  return out;
}

Image random_affine(const Image& im, const AffineParams& p, Rng& rng) {
  const double deg2rad = 3.14159265358979323846 / 180.0;
  const double angle = rng.uniform(-p.max_degrees, p.max_degrees) * deg2rad;
  const double tx = rng.uniform(-p.max_translate, p.max_translate) * im.w;
  const double ty = rng.uniform(-p.max_translate, p.max_translate) * im.h;
  const double scale = rng.uniform(p.min_scale, p.max_scale);
  const double shx = rng.uniform(-p.max_shear_degrees, p.max_shear_degrees) * deg2rad;
  const double shy = rng.uniform(-p.max_shear_degrees, p.max_shear_degrees) * deg2rad;

  // forward map: scale * rot(angle) * shear; invert for the warp
  const double ca = std::cos(angle), sa = std::sin(angle);
  const double a = scale * (ca - sa * std::tan(shy));
  const double b = scale * (ca * std::tan(shx) - sa);
  const double c = scale * (sa + ca * std::tan(shy));
  const double d = scale * (sa * std::tan(shx) + ca);
  const double det = a * d - b * c;
  SPATIAL_CHECK(std::abs(det) > 1e-9, "random_affine: singular transform");
  AffineCoeffs inv;
  inv.a = d / det;
  inv.b = -b / det;
  inv.c = -c / det;
  inv.d = a / det;
  // output pixel o maps to source A^-1 * (o - t)
  inv.tx = -(inv.a * tx + inv.b * ty);
  inv.ty = -(inv.c * tx + inv.d * ty);
  return affine_warp(im, inv);
}

}  // namespace spatial::aug

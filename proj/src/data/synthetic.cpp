#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "spatial/data/dataset.hpp"

namespace spatial::data {

namespace {

// Ten procedural classes on a 32x32 canvas. Six of them differ only in the
// spatial arrangement or orientation of identical parts; color, position,
// scale and background are nuisance variables drawn per image, so neither
// color histograms nor single local textures separate the classes.
//
//   0 filled disk          5 two disks, horizontal
//   1 ring                 6 disk above bar
//   2 filled square        7 bar above disk
//   3 cross                8 diagonal bar at +45 deg
//   4 two disks, vertical  9 diagonal bar at -45 deg

struct Vec3 {
  float r, g, b;
};

float soft(float signed_dist) { return std::clamp(0.5f - signed_dist, 0.f, 1.f); }

float disk(float x, float y, float cx, float cy, float r) {
  return soft(std::hypot(x - cx, y - cy) - r);
}

float ring(float x, float y, float cx, float cy, float r, float t) {
  return soft(std::abs(std::hypot(x - cx, y - cy) - r) - t);
}

float square(float x, float y, float cx, float cy, float r) {
  return soft(std::max(std::abs(x - cx), std::abs(y - cy)) - r);
}

float bar(float x, float y, float cx, float cy, float half_len, float half_w, float angle) {
  const float ca = std::cos(angle), sa = std::sin(angle);
  const float dx = ca * (x - cx) + sa * (y - cy);
  const float dy = -sa * (x - cx) + ca * (y - cy);
  return soft(std::max(std::abs(dx) - half_len, std::abs(dy) - half_w));
}

float cross_shape(float x, float y, float cx, float cy, float r, float w) {
  return std::max(bar(x, y, cx, cy, r, w, 0.f), bar(x, y, cx, cy, r, w, 1.57079632679f));
}

float shape_mask(int cls, float x, float y, float cx, float cy, float s, float part_gap) {
  switch (cls) {
    case 0: return disk(x, y, cx, cy, s);
    case 1: return ring(x, y, cx, cy, s, s * 0.28f);
    case 2: return square(x, y, cx, cy, s * 0.85f);
    case 3: return cross_shape(x, y, cx, cy, s, s * 0.3f);
    case 4:
      return std::max(disk(x, y, cx, cy - part_gap, s * 0.5f), disk(x, y, cx, cy + part_gap, s * 0.5f));
    case 5:
      return std::max(disk(x, y, cx - part_gap, cy, s * 0.5f), disk(x, y, cx + part_gap, cy, s * 0.5f));
    case 6:
      return std::max(disk(x, y, cx, cy - part_gap, s * 0.45f),
                      bar(x, y, cx, cy + part_gap, s * 0.9f, s * 0.22f, 0.f));
    case 7:
      return std::max(bar(x, y, cx, cy - part_gap, s * 0.9f, s * 0.22f, 0.f),
                      disk(x, y, cx, cy + part_gap, s * 0.45f));
    case 8: return bar(x, y, cx, cy, s * 1.1f, s * 0.26f, 0.785398163f);
    case 9: return bar(x, y, cx, cy, s * 1.1f, s * 0.26f, -0.785398163f);
  }
  return 0.f;
}

Vec3 random_color(Rng& rng) {
  return {static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
          static_cast<float>(rng.uniform())};
}

float color_dist(const Vec3& a, const Vec3& b) {
  return std::abs(a.r - b.r) + std::abs(a.g - b.g) + std::abs(a.b - b.b);
}

void render(int cls, Rng& rng, std::uint8_t* out /* 3072 bytes, plane-major */) {
  const int side = 32;
  const Vec3 bg1 = random_color(rng);
  const Vec3 bg2 = random_color(rng);
  Vec3 fg = random_color(rng);
  const Vec3 bg_mid{(bg1.r + bg2.r) / 2, (bg1.g + bg2.g) / 2, (bg1.b + bg2.b) / 2};
  for (int tries = 0; tries < 64 && color_dist(fg, bg_mid) < 0.8f; ++tries) fg = random_color(rng);

  const float gx = static_cast<float>(rng.uniform(-1, 1));
  const float gy = static_cast<float>(rng.uniform(-1, 1));
  const float gnorm = std::max(1e-3f, std::abs(gx) * side + std::abs(gy) * side);
  const float tex_amp = static_cast<float>(rng.uniform(0.0, 0.06));
  const float tex_fx = static_cast<float>(rng.uniform(0.05, 0.35));
  const float tex_fy = static_cast<float>(rng.uniform(0.05, 0.35));
  const float tex_ph = static_cast<float>(rng.uniform(0.0, 6.28318));

  const float cx = 15.5f + static_cast<float>(rng.uniform(-5, 5));
  const float cy = 15.5f + static_cast<float>(rng.uniform(-5, 5));
  const float scale = static_cast<float>(rng.uniform(4.5, 7.5));
  const float part_gap = scale * static_cast<float>(rng.uniform(0.85, 1.15));

  // distractor dots
  const int n_dots = static_cast<int>(rng.uniform_int(1, 2));
  float dot_x[2], dot_y[2], dot_r[2];
  Vec3 dot_c[2];
  for (int d = 0; d < n_dots; ++d) {
    dot_x[d] = static_cast<float>(rng.uniform(2, side - 2));
    dot_y[d] = static_cast<float>(rng.uniform(2, side - 2));
    dot_r[d] = static_cast<float>(rng.uniform(1.0, 1.8));
    dot_c[d] = random_color(rng);
  }

  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const float t = 0.5f + (gx * x + gy * y) / (2 * gnorm);
      Vec3 px{bg1.r + (bg2.r - bg1.r) * t, bg1.g + (bg2.g - bg1.g) * t, bg1.b + (bg2.b - bg1.b) * t};
      const float tex = tex_amp * std::sin(6.28318f * (tex_fx * x + tex_fy * y) + tex_ph);
      px.r += tex;
      px.g += tex;
      px.b += tex;
      for (int d = 0; d < n_dots; ++d) {
        const float m = disk(static_cast<float>(x), static_cast<float>(y), dot_x[d], dot_y[d], dot_r[d]);
        px.r = px.r * (1 - m) + dot_c[d].r * m;
        px.g = px.g * (1 - m) + dot_c[d].g * m;
        px.b = px.b * (1 - m) + dot_c[d].b * m;
      }
      const float m = shape_mask(cls, static_cast<float>(x), static_cast<float>(y), cx, cy, scale, part_gap);
      px.r = px.r * (1 - m) + fg.r * m;
      px.g = px.g * (1 - m) + fg.g * m;
      px.b = px.b * (1 - m) + fg.b * m;
      const float noise = static_cast<float>(rng.normal(0.0, 0.03));
      auto to_u8 = [&](float v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v + noise, 0.f, 1.f) * 255.f));
      };
      out[0 * 1024 + y * side + x] = to_u8(px.r);
      out[1 * 1024 + y * side + x] = to_u8(px.g);
      out[2 * 1024 + y * side + x] = to_u8(px.b);
    }
  }
}

void write_batch(const std::string& path, std::size_t count, std::uint64_t seed, std::uint64_t stream_id) {
  std::ofstream out(path, std::ios::binary);
  if (!out) data_fail("cannot write synthetic batch: " + path);
  std::vector<std::uint8_t> rec(1 + 3072);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, {stream_id, i});
    const int cls = static_cast<int>(rng.uniform_int(0, 9));
    rec[0] = static_cast<std::uint8_t>(cls);
    render(cls, rng, rec.data() + 1);
    out.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
  }
  if (!out) data_fail("short write on synthetic batch: " + path);
}

}  // namespace

void write_synthetic_cifar10(const std::string& root, std::size_t train_count, std::size_t test_count,
                             std::uint64_t seed) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(root) / "cifar-10-batches-bin";
  fs::create_directories(dir);
  const std::size_t per = (train_count + 4) / 5;
  std::size_t left = train_count;
  for (int b = 1; b <= 5; ++b) {
    const std::size_t n = std::min(per, left);
    left -= n;
    write_batch((dir / ("data_batch_" + std::to_string(b) + ".bin")).string(), n, seed,
                0x545241494eull + static_cast<std::uint64_t>(b));
  }
  write_batch((dir / "test_batch.bin").string(), test_count, seed, 0x54455354ull);
  std::ofstream meta(dir / "batches.meta.txt");
  meta << "synthetic surrogate dataset (procedural shapes), not CIFAR-10\n";
}

}  // namespace spatial::data

#include "spatial/rep/representation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace spatial::rep {

GridSpec make_grid(int image_side, int patch_size_px, int n_patches, std::uint64_t seed) {
  SPATIAL_CHECK_CONFIG(patch_size_px <= image_side, "grid patch larger than the image");
  const bool valid_n = n_patches == 0 || n_patches == 1 || n_patches == 3 || n_patches == 5 ||
                       n_patches == 7 || n_patches == 9;
  SPATIAL_CHECK_CONFIG(valid_n, "n_patches must be one of {0,1,3,5,7,9}");
  GridSpec g;
  g.n_patches = n_patches;
  g.patch_size_px = patch_size_px;
  if (n_patches == 0) return g;

  const int w = image_side;
  const int s = patch_size_px;
  auto off = [&](int i) { return static_cast<int>(std::lround(i * (w - s) / 2.0)); };
  const int o0 = off(0), o1 = off(1), o2 = off(2);
  auto at = [&](int px, int py) { return patching::make_patch_spec(px, py, s, w, w, 0); };

  // slots: 1 center; 2,3 horizontally adjacent; 4,5 mid-top and mid-bottom;
  // 6..9 corners (TL, TR, BL, BR)
  std::vector<patching::PatchSpec> slots{
      at(o1, o1),            // center
      at(o0, o1), at(o2, o1),  // left, right
      at(o1, o0), at(o1, o2),  // mid-top, mid-bottom
      at(o0, o0), at(o2, o0), at(o0, o2), at(o2, o2),
  };
  if (n_patches <= 5) {
    g.patches.assign(slots.begin(), slots.begin() + n_patches);
  } else if (n_patches == 9) {
    g.patches = slots;
  } else {  // n = 7: slots 1..5 plus two random corners, seeded
    g.patches.assign(slots.begin(), slots.begin() + 5);
    std::vector<int> corner_idx{5, 6, 7, 8};
    Rng rng = Rng::stream(seed, {0x47524944ull});
    rng.shuffle(corner_idx);
    std::sort(corner_idx.begin(), corner_idx.begin() + 2);
    g.patches.push_back(slots[static_cast<std::size_t>(corner_idx[0])]);
    g.patches.push_back(slots[static_cast<std::size_t>(corner_idx[1])]);
  }
  return g;
}

namespace {

// Encode a flat list of views through the checkpoint encoder in eval mode,
// in fixed-size chunks.
void encode_views(model::Checkpoint& ck, const std::vector<Image>& views, nn::Mat<float>& out) {
  const int dim = ck.encoder->feature_dim();
  out.resize(dim, static_cast<Eigen::Index>(views.size()));
  constexpr std::size_t kChunk = 512;
  model::FPlane plane;
  std::vector<Image> chunk;
  std::size_t done = 0;
  while (done < views.size()) {
    const std::size_t n = std::min(kChunk, views.size() - done);
    chunk.assign(views.begin() + static_cast<std::ptrdiff_t>(done),
                 views.begin() + static_cast<std::ptrdiff_t>(done + n));
    model::fill_input_planes(chunk, ck.norm, plane);
    const auto& f = ck.encoder->forward(plane, /*training=*/false);
    out.middleCols(static_cast<Eigen::Index>(done), static_cast<Eigen::Index>(n)) = f;
    done += n;
  }
}

}  // namespace

std::vector<CompositeRepresentation> compose_representations(const std::vector<Image>& images,
                                                             model::Checkpoint& ck, const GridSpec& grid) {
  if (grid.n_patches > 0 && ck.patch_mode != patching::PatchMode::kRescaled)
    config_fail(
        "composite representations require a rescaled-mode checkpoint; additive checkpoints use "
        "single_pass_representation");
  const int dim = ck.encoder->feature_dim();
  const int n = grid.n_patches;
  std::vector<Image> views;
  views.reserve(images.size() * static_cast<std::size_t>(1 + n));
  for (const auto& im : images) {
    views.push_back(im);
    for (const auto& spec : grid.patches) {
      SPATIAL_CHECK(spec.img_w == im.w && spec.img_h == im.h, "grid geometry does not match the image");
      views.push_back(resize_bilinear(crop(im, spec.py, spec.px, spec.size_px, spec.size_px), im.h, im.w));
    }
  }
  nn::Mat<float> feats;
  encode_views(ck, views, feats);
  std::vector<CompositeRepresentation> out(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    CompositeRepresentation& v = out[i];
    v.resize(static_cast<std::size_t>(1 + n) * dim);
    for (int j = 0; j <= n; ++j) {
      const auto col = feats.col(static_cast<Eigen::Index>(i * (1 + n) + j));
      std::copy_n(col.data(), dim, v.data() + static_cast<std::size_t>(j) * dim);
    }
  }
  return out;
}

CompositeRepresentation compose_representation(const Image& image, model::Checkpoint& ck, const GridSpec& grid) {
  return compose_representations({image}, ck, grid).front();
}

std::vector<CompositeRepresentation> single_pass_representations(const std::vector<Image>& images,
                                                                 model::Checkpoint& ck) {
  nn::Mat<float> feats;
  encode_views(ck, images, feats);
  const int dim = ck.encoder->feature_dim();
  std::vector<CompositeRepresentation> out(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    out[i].resize(static_cast<std::size_t>(dim));
    std::copy_n(feats.col(static_cast<Eigen::Index>(i)).data(), dim, out[i].data());
  }
  return out;
}

CompositeRepresentation single_pass_representation(const Image& image, model::Checkpoint& ck) {
  return single_pass_representations({image}, ck).front();
}

namespace {
constexpr std::uint32_t kEmbedMagic = 0x53505250u;  // "SPRP"
}

void write_embeddings(const std::string& path, int feature_dim, int n_patches,
                      const std::vector<CompositeRepresentation>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) data_fail("cannot write embeddings: " + path);
  BinWriter w(out);
  w.u32(kEmbedMagic);
  w.u32(kLayoutVersion);
  w.u32(static_cast<std::uint32_t>(feature_dim));
  w.u32(static_cast<std::uint32_t>(n_patches));
  w.u64(rows.size());
  for (const auto& r : rows) {
    SPATIAL_CHECK(r.size() == static_cast<std::size_t>(1 + n_patches) * feature_dim ||
                      (n_patches == 0 && r.size() == static_cast<std::size_t>(feature_dim)),
                  "embedding row width does not match the header");
    w.raw(r.data(), sizeof(float) * r.size());
  }
}

EmbeddingFile read_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) data_fail("cannot open embeddings: " + path);
  BinReader r(in);
  if (r.u32() != kEmbedMagic) data_fail("not an embedding file: " + path);
  const auto layout = r.u32();
  if (layout != kLayoutVersion) data_fail("embedding layout version mismatch in " + path);
  EmbeddingFile f;
  f.feature_dim = static_cast<int>(r.u32());
  f.n_patches = static_cast<int>(r.u32());
  const auto count = r.u64();
  const std::size_t width = f.n_patches == 0 ? static_cast<std::size_t>(f.feature_dim)
                                             : static_cast<std::size_t>(1 + f.n_patches) * f.feature_dim;
  f.rows.resize(count);
  for (auto& row : f.rows) {
    row.resize(width);
    r.raw(row.data(), sizeof(float) * width);
  }
  return f;
}

}  // namespace spatial::rep

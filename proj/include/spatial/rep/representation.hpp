#pragma once

#include <string>
#include <vector>

#include "spatial/model/checkpoint.hpp"

namespace spatial::rep {

// Inference-time patch grid. Anchor offsets are round(i*(W-s)/2) per axis;
// the nine positions cover every pixel with small overlap. Slot order is
// frozen (layout version 1): center, left, right, mid-top, mid-bottom, then
// the four corners. n=7 draws its two extra corners at random, seeded.
struct GridSpec {
  int n_patches = 9;  // in {0,1,3,5,7,9}; 0 disables the grid
  int patch_size_px = 0;
  std::vector<patching::PatchSpec> patches;
};

constexpr std::uint32_t kLayoutVersion = 1;

GridSpec make_grid(int image_side, int patch_size_px, int n_patches, std::uint64_t seed = 0);

// Full-image vector first, then patch vectors in grid order; width (1+n)*D.
using CompositeRepresentation = std::vector<float>;

// Batched composite extraction: 1 + n encoder passes per image, eval mode.
// Requires a RESCALED-mode checkpoint when the grid is non-empty.
std::vector<CompositeRepresentation> compose_representations(const std::vector<Image>& images,
                                                             model::Checkpoint& ck, const GridSpec& grid);

CompositeRepresentation compose_representation(const Image& image, model::Checkpoint& ck, const GridSpec& grid);

// Additive-variant inference: exactly one encoder pass on the unmodified
// image, D-wide output.
std::vector<CompositeRepresentation> single_pass_representations(const std::vector<Image>& images,
                                                                 model::Checkpoint& ck);

CompositeRepresentation single_pass_representation(const Image& image, model::Checkpoint& ck);

// Binary embedding container: header (magic, layout version, D, n, count)
// followed by row-major float vectors.
void write_embeddings(const std::string& path, int feature_dim, int n_patches,
                      const std::vector<CompositeRepresentation>& rows);

struct EmbeddingFile {
  int feature_dim = 0;
  int n_patches = 0;
  std::vector<CompositeRepresentation> rows;
};

EmbeddingFile read_embeddings(const std::string& path);

}  // namespace spatial::rep

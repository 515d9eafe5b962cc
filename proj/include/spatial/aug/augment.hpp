#pragma once

#include "spatial/core/image.hpp"
#include "spatial/core/rng.hpp"
#include "spatial/patch/patch.hpp"

namespace spatial::aug {

// Pixel-space color transforms on [0,1] images.
Image adjust_brightness(const Image& im, float factor);
Image adjust_contrast(const Image& im, float factor);
Image adjust_saturation(const Image& im, float factor);
Image adjust_hue(const Image& im, float delta);  // delta in [-0.5, 0.5] turns
Image to_grayscale(const Image& im);

// Color jitter + random grayscale, the per-patch subset of the pipeline.
// Factor ranges follow the usual [max(0, 1-b), 1+b] convention, hue in
// [-hue, hue]; the four adjustments are applied in a random order.
Image color_jitter_grayscale(const Image& im, const patching::JitterParams& p, Rng& rng);

struct CropParams {
  double min_scale = 0.08;  // area fraction
  double max_scale = 1.0;
  double min_ratio = 3.0 / 4.0;
  double max_ratio = 4.0 / 3.0;
};

// Random resized crop with torchvision semantics: 10 area/ratio proposals,
// then a center-crop fallback.
Image random_resized_crop(const Image& im, int out_size, const CropParams& p, Rng& rng);

struct FullAugmentParams {
  CropParams crop;
  double hflip_prob = 0.5;
  patching::JitterParams jitter;
};

// The full four-transform pipeline for whole images:
// random resized crop, random horizontal flip, color jitter, grayscale.
Image full_image_augment(const Image& im, int out_size, const FullAugmentParams& p, Rng& rng);

struct AffineParams {
  double max_degrees = 10.0;
  double max_translate = 0.1;  // fraction of side
  double min_scale = 0.9;
  double max_scale = 1.1;
  double max_shear_degrees = 10.0;
};

// Random affine (rotation/translate/scale/shear), used by the augmented
// linear-probe variant. No flipping, no cropping.
Image random_affine(const Image& im, const AffineParams& p, Rng& rng);

}  // namespace spatial::aug

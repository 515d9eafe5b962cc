#pragma once

#include <vector>

#include "spatial/agg/aggregation.hpp"
#include "spatial/data/dataset.hpp"
#include "spatial/train/config.hpp"

namespace spatial::train {

// One assembled training mini-batch: K*M augmented full-image views followed
// by M*N patch views (image-major within each section), with provenance tags
// aligned to the view order.
struct ViewBatch {
  std::vector<Image> views;
  std::vector<agg::Provenance> tags;
  int m = 0;
  int k = 0;
  int n = 0;
};

// Pure function of (records, config, epoch, step): every random draw comes
// from streams keyed on those ids, so workers can build views in any order
// and interrupted runs replay identically.
ViewBatch build_training_batch(const std::vector<data::ImageRecord>& records, const RunConfig& cfg,
                               std::uint64_t epoch, std::uint64_t step, int workers = 0);

}  // namespace spatial::train

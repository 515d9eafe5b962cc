#pragma once

#include <memory>
#include <string>

#include "spatial/model/encoder.hpp"
#include "spatial/model/relation_head.hpp"
#include "spatial/nn/adam.hpp"
#include "spatial/train/config.hpp"

namespace spatial::model {

// Versioned checkpoint container. Carries everything needed both to resume
// training step-for-step (optimizer state included) and to evaluate
// (normalization statistics, patch mode, run-config hash).
struct Checkpoint {
  static constexpr std::uint32_t kMagic = 0x5350434bu;  // "SPCK"
  static constexpr std::uint32_t kVersion = 1;

  train::RunConfig config;
  std::uint64_t config_hash = 0;
  Arch arch = Arch::kResNet32Cifar;
  patching::PatchMode patch_mode = patching::PatchMode::kRescaled;
  NormStats norm;
  int image_side = 32;
  int epoch = 0;            // completed epochs
  std::int64_t step = 0;    // completed optimizer steps
  std::unique_ptr<Encoder> encoder;
  std::unique_ptr<RelationHead<float>> head;
  std::string adam_blob;  // serialized optimizer state, empty for eval-only use

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace spatial::model

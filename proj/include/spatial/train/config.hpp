#pragma once

#include <string>

#include "spatial/common.hpp"
#include "spatial/patch/patch.hpp"

namespace spatial::train {

enum class Schedule { kNone, kCosine };

// Full declarative experiment description. Parsed from a flat JSON document;
// unknown keys are hard errors so sweep typos cannot pass silently.
struct RunConfig {
  std::string dataset = "cifar10";
  std::string data_root;         // empty -> $SPATIAL_DATA_ROOT
  std::string arch;              // empty -> dataset default
  int images_per_batch = 64;     // M (inferred default, see schema notes)
  int augmentations = 4;         // K
  int patches_per_image = 2;     // N
  int patch_size_px = 13;
  patching::PatchMode patch_mode = patching::PatchMode::kRescaled;
  int epochs = 200;
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  Schedule schedule = Schedule::kNone;
  std::uint64_t seed = 1;
  std::string output_dir = "runs/out";
  int checkpoint_every_epochs = 1;
  int pretrain_count = 0;  // 0 = whole pretrain split
  int log_every_steps = 1;
  int rejection_max_attempts = 100;
  int loader_workers = 0;  // 0 = inline
  bool checksum_continue = false;
  patching::JitterParams jitter;
  double crop_min_scale = 0.08;
  double hflip_prob = 0.5;

  void validate() const;
  std::string canonical_json() const;
  std::uint64_t hash() const;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
};

std::string schedule_name(Schedule s);
Schedule schedule_from_name(const std::string& s);
std::string patch_mode_name(patching::PatchMode m);
patching::PatchMode patch_mode_from_name(const std::string& s);

// Documented key-by-key schema text (printed by the CLI).
const char* run_config_schema();

}  // namespace spatial::train

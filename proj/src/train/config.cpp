#include "spatial/train/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace spatial::train {

using nlohmann::json;

std::string schedule_name(Schedule s) { return s == Schedule::kNone ? "none" : "cosine"; }

Schedule schedule_from_name(const std::string& s) {
  if (s == "none") return Schedule::kNone;
  if (s == "cosine") return Schedule::kCosine;
  config_fail("unknown schedule: " + s);
}

std::string patch_mode_name(patching::PatchMode m) {
  return m == patching::PatchMode::kRescaled ? "rescaled" : "additive";
}

patching::PatchMode patch_mode_from_name(const std::string& s) {
  if (s == "rescaled") return patching::PatchMode::kRescaled;
  if (s == "additive") return patching::PatchMode::kAdditive;
  config_fail("unknown patch_mode: " + s);
}

void RunConfig::validate() const {
  SPATIAL_CHECK_CONFIG(images_per_batch >= 2,
                       "images_per_batch (M) must be >= 2; M=1 makes every shifted negative pair "
                       "degenerate to the same image");
  SPATIAL_CHECK_CONFIG(augmentations >= 2, "augmentations (K) must be >= 2");
  SPATIAL_CHECK_CONFIG(patches_per_image >= 0, "patches_per_image (N) must be >= 0");
  SPATIAL_CHECK_CONFIG(epochs >= 1, "epochs must be >= 1");
  SPATIAL_CHECK_CONFIG(patch_size_px >= 1, "patch_size_px must be >= 1");
  SPATIAL_CHECK_CONFIG(optimizer == "adam", "only the adam optimizer is supported");
  SPATIAL_CHECK_CONFIG(learning_rate > 0, "learning_rate must be positive");
  SPATIAL_CHECK_CONFIG(checkpoint_every_epochs >= 1, "checkpoint_every_epochs must be >= 1");
  SPATIAL_CHECK_CONFIG(log_every_steps >= 1, "log_every_steps must be >= 1");
  SPATIAL_CHECK_CONFIG(rejection_max_attempts >= 1, "rejection_max_attempts must be >= 1");
  SPATIAL_CHECK_CONFIG(loader_workers >= 0, "loader_workers must be >= 0");
}

namespace {

json to_json(const RunConfig& c) {
  json j;
  j["dataset"] = c.dataset;
  j["data_root"] = c.data_root;
  j["arch"] = c.arch;
  j["images_per_batch"] = c.images_per_batch;
  j["augmentations"] = c.augmentations;
  j["patches_per_image"] = c.patches_per_image;
  j["patch_size_px"] = c.patch_size_px;
  j["patch_mode"] = patch_mode_name(c.patch_mode);
  j["epochs"] = c.epochs;
  j["optimizer"] = c.optimizer;
  j["learning_rate"] = c.learning_rate;
  j["schedule"] = schedule_name(c.schedule);
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["checkpoint_every_epochs"] = c.checkpoint_every_epochs;
  j["pretrain_count"] = c.pretrain_count;
  j["log_every_steps"] = c.log_every_steps;
  j["rejection_max_attempts"] = c.rejection_max_attempts;
  j["loader_workers"] = c.loader_workers;
  j["checksum_continue"] = c.checksum_continue;
  j["jitter_brightness"] = c.jitter.brightness;
  j["jitter_contrast"] = c.jitter.contrast;
  j["jitter_saturation"] = c.jitter.saturation;
  j["jitter_hue"] = c.jitter.hue;
  j["jitter_prob"] = c.jitter.jitter_prob;
  j["grayscale_prob"] = c.jitter.grayscale_prob;
  j["crop_min_scale"] = c.crop_min_scale;
  j["hflip_prob"] = c.hflip_prob;
  return j;
}

}  // namespace

std::string RunConfig::canonical_json() const { return to_json(*this).dump(2); }

std::uint64_t RunConfig::hash() const {
  // output_dir is placement, not experiment identity
  json j = to_json(*this);
  j.erase("output_dir");
  j.erase("data_root");
  return fnv1a(j.dump());
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    config_fail(std::string("config parse error: ") + e.what());
  }
  SPATIAL_CHECK_CONFIG(j.is_object(), "config must be a JSON object");
  RunConfig c;
  const json defaults = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) config_fail("unknown config key: " + key);
    (void)value;
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("dataset", c.dataset);
  get("data_root", c.data_root);
  get("arch", c.arch);
  get("images_per_batch", c.images_per_batch);
  get("augmentations", c.augmentations);
  get("patches_per_image", c.patches_per_image);
  get("patch_size_px", c.patch_size_px);
  if (j.contains("patch_mode")) c.patch_mode = patch_mode_from_name(j.at("patch_mode").get<std::string>());
  get("epochs", c.epochs);
  get("optimizer", c.optimizer);
  get("learning_rate", c.learning_rate);
  if (j.contains("schedule")) c.schedule = schedule_from_name(j.at("schedule").get<std::string>());
  get("seed", c.seed);
  get("output_dir", c.output_dir);
  get("checkpoint_every_epochs", c.checkpoint_every_epochs);
  get("pretrain_count", c.pretrain_count);
  get("log_every_steps", c.log_every_steps);
  get("rejection_max_attempts", c.rejection_max_attempts);
  get("loader_workers", c.loader_workers);
  get("checksum_continue", c.checksum_continue);
  get("jitter_brightness", c.jitter.brightness);
  get("jitter_contrast", c.jitter.contrast);
  get("jitter_saturation", c.jitter.saturation);
  get("jitter_hue", c.jitter.hue);
  get("jitter_prob", c.jitter.jitter_prob);
  get("grayscale_prob", c.jitter.grayscale_prob);
  get("crop_min_scale", c.crop_min_scale);
  get("hflip_prob", c.hflip_prob);
  c.validate();
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) data_fail("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

const char* run_config_schema() {
  return R"(pretraining config keys (flat JSON object; unknown keys are errors):
  dataset                  cifar10 | cifar100 | cifar100_20 | tiny_imagenet | stl10
  data_root                dataset root directory (default: $SPATIAL_DATA_ROOT)
  arch                     resnet32_cifar | resnet34 (default: resnet34 for stl10, else resnet32_cifar)
  images_per_batch         M, images per mini-batch (default 64; the paper never states M,
                           64 is inferred from its 960-pair arithmetic)
  augmentations            K, augmented views per image (default 4), >= 2
  patches_per_image        N, patches sampled per image (default 2), >= 0 disables at 0
  patch_size_px            square patch side in pixels (default 13 at CIFAR scale, 24 for tiny-imagenet)
  patch_mode               rescaled | additive (default rescaled)
  epochs                   pretraining epochs (default 200)
  optimizer                adam
  learning_rate            default 1e-3
  schedule                 none | cosine (default none)
  seed                     master seed; fixes splits, order, init, augmentation
  output_dir               checkpoints + logs destination
  checkpoint_every_epochs  checkpoint cadence (default 1)
  pretrain_count           cap on pretraining images, 0 = full split
  log_every_steps          JSONL log cadence (default 1)
  rejection_max_attempts   non-overlap rejection budget (default 100)
  loader_workers           parallel batch-assembly workers, 0 = inline
  checksum_continue        continue after checksum mismatch (default false)
  jitter_brightness/contrast/saturation (default 0.8), jitter_hue (default 0.2)
  jitter_prob (default 0.8), grayscale_prob (default 0.2)
  crop_min_scale           random-resized-crop minimum area fraction (default 0.08)
  hflip_prob               horizontal flip probability (default 0.5)
)";
}

}  // namespace spatial::train

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spatial/eval/probe.hpp"
#include "spatial/train/config.hpp"

namespace spatial::cli {

// Declarative experiment sweep: a base RunConfig, a probe configuration, a
// seed list, and one sweep axis expanded into (RunConfig, ProbeConfig)
// points. Reference blocks carry documented full-scale numbers and are
// never executed.
struct ExperimentManifest {
  std::string name;
  std::string task;  // dataset name or "a->b" cross-domain task
  train::RunConfig base;
  eval::ProbeConfig probe;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string axis;                  // "", patch_size_px, patches_per_image, n_patches, patch_mode
  std::vector<std::string> values;   // string-encoded axis values
  std::string output_dir;
  std::string reference_json;  // verbatim "reference" block, if present

  std::uint64_t hash() const;

  static ExperimentManifest from_file(const std::string& path);
  static ExperimentManifest from_json_text(const std::string& text);
};

struct SweepPoint {
  std::string label;
  std::string axis;
  std::string value;
  train::RunConfig run;
  eval::ProbeConfig probe;
};

std::vector<SweepPoint> expand_manifest(const ExperimentManifest& m);

struct ManifestRunResult {
  int points_total = 0;
  int points_failed = 0;
  std::string csv_path;
  std::vector<std::string> plot_paths;
};

// Execute every point (pretrain + probe), writing a tidy CSV (one row per
// seed per point), per-point JSON results, and min/max-whisker plots.
// Individual point failures are recorded and the sweep continues.
ManifestRunResult run_manifest(const ExperimentManifest& m, std::ostream& log);

// Reassemble the CSV and plots from completed per-point outputs.
ManifestRunResult report_manifest(const ExperimentManifest& m, std::ostream& log);

}  // namespace spatial::cli

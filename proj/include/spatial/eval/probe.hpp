#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spatial/aug/augment.hpp"
#include "spatial/data/dataset.hpp"
#include "spatial/model/checkpoint.hpp"
#include "spatial/rep/representation.hpp"

namespace spatial::eval {

struct ProbeConfig {
  int n_patches = 9;          // composite width (1+n)*D; ignored for additive checkpoints
  int epochs = 100;
  bool affine_augment = false;  // affine transforms on probe training inputs only
  double learning_rate = 1e-3;
  int batch_size = 128;
  int train_count = 0;  // caps, 0 = full split
  int test_count = 0;
  aug::AffineParams affine;
};

struct SeedResult {
  std::uint64_t seed = 0;
  double train_accuracy = 0;  // percent
  double test_accuracy = 0;   // percent
  bool ok = true;
  std::string error;
};

struct EvalResult {
  std::vector<SeedResult> per_seed;
  double mean_test = 0;
  double std_test = 0;  // sample standard deviation
  double mean_train = 0;
  bool complete = true;

  std::string to_json() const;
  std::string csv_header() const;
  std::string csv_row(const std::string& label) const;
};

// Mean and sample standard deviation over per-seed probe runs. Failures are
// captured and flagged rather than aborting the sweep.
EvalResult seed_sweep(const std::function<SeedResult(std::uint64_t)>& run_fn,
                      const std::vector<std::uint64_t>& seeds);

// Train only a linear classifier on frozen features; report train and test
// accuracy (percent).
SeedResult train_probe_on_features(const nn::Mat<float>& train_x, const std::vector<int>& train_y,
                                   const nn::Mat<float>& test_x, const std::vector<int>& test_y, int classes,
                                   const ProbeConfig& cfg, std::uint64_t seed);

// Frozen-backbone linear evaluation of a checkpoint on a task. The backbone
// is never updated; composite features follow the checkpoint's patch size.
EvalResult linear_probe(model::Checkpoint& ck, const data::EvalTaskSpec& task, const ProbeConfig& cfg,
                        const std::string& data_root, const std::vector<std::uint64_t>& seeds);

}  // namespace spatial::eval

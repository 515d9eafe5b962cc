#pragma once

#include <functional>
#include <string>

#include "spatial/data/dataset.hpp"
#include "spatial/model/checkpoint.hpp"
#include "spatial/model/loss.hpp"
#include "spatial/train/batch.hpp"

namespace spatial::train {

struct TrainStats {
  std::int64_t steps = 0;
  std::int64_t patch_views_built = 0;  // 0 under N=0: patch machinery bypassed
  model::LossBreakdown last_loss;
  std::string final_checkpoint;
};

// Self-supervised pretraining orchestrator: batch assembly, pair
// aggregation, optimization, checkpointing and JSONL metric logging.
// Resumes from the newest checkpoint in output_dir when the stored
// RunConfig hash matches bit-for-bit.
class Trainer {
public:
  explicit Trainer(RunConfig cfg);

  // Train to cfg.epochs. The optional probe is invoked after every
  // checkpoint write (used by sweeps).
  TrainStats run();

  const model::Checkpoint& checkpoint() const { return ck_; }
  const data::LoadedDataset& dataset() const { return data_; }
  const data::SplitSpec& pretrain_split() const { return split_; }

  static std::string checkpoint_path(const std::string& output_dir, int epoch);
  static std::string log_path(const std::string& output_dir);

private:
  void log_step(int epoch, std::int64_t step, const model::LossBreakdown& loss, const agg::PairCounts& counts,
                double wall_ms);

  RunConfig cfg_;
  data::LoadedDataset data_;
  data::SplitSpec split_;
  model::Checkpoint ck_;
  nn::Adam<float> opt_;
  TrainStats stats_;
  std::string log_file_;
};

}  // namespace spatial::train

#include "spatial/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace spatial::train {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::uint64_t kEpochPermStream = 0x5045524dull;

std::string resolve_data_root(const RunConfig& cfg) {
  if (!cfg.data_root.empty()) return cfg.data_root;
  if (const char* env = std::getenv("SPATIAL_DATA_ROOT")) return env;
  config_fail("no data_root in the config and SPATIAL_DATA_ROOT is unset");
}

model::Arch default_arch(const RunConfig& cfg) {
  if (!cfg.arch.empty()) return model::arch_from_name(cfg.arch);
  return cfg.dataset == "stl10" ? model::Arch::kResNet34 : model::Arch::kResNet32Cifar;
}

int find_latest_checkpoint_epoch(const std::string& dir) {
  int best = -1;
  if (!fs::exists(dir)) return best;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("ckpt_", 0) == 0 && name.size() >= 14 && name.substr(name.size() - 4) == ".bin") {
      const int epoch = std::atoi(name.substr(5, name.size() - 9).c_str());
      best = std::max(best, epoch);
    }
  }
  return best;
}

}  // namespace

std::string Trainer::checkpoint_path(const std::string& output_dir, int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt_%05d.bin", epoch);
  return (fs::path(output_dir) / "checkpoints" / buf).string();
}

std::string Trainer::log_path(const std::string& output_dir) {
  return (fs::path(output_dir) / "logs" / "train.jsonl").string();
}

Trainer::Trainer(RunConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const std::string root = resolve_data_root(cfg_);
  data_ = data::load_dataset(data::dataset_from_name(cfg_.dataset), root, cfg_.checksum_continue);

  const auto& pool = data_.pretrain_pool();
  split_ = data::make_pretrain_split(pool->size(), static_cast<std::size_t>(cfg_.pretrain_count), cfg_.seed);

  fs::create_directories(fs::path(cfg_.output_dir) / "checkpoints");
  fs::create_directories(fs::path(cfg_.output_dir) / "logs");
  log_file_ = log_path(cfg_.output_dir);

  const int latest = find_latest_checkpoint_epoch((fs::path(cfg_.output_dir) / "checkpoints").string());
  if (latest >= 0) {
    ck_ = model::Checkpoint::load(checkpoint_path(cfg_.output_dir, latest));
    SPATIAL_CHECK_CONFIG(ck_.config_hash == cfg_.hash(),
                         "refusing to resume: checkpoint was produced by a different RunConfig");
  } else {
    ck_.config = cfg_;
    ck_.config_hash = cfg_.hash();
    ck_.arch = default_arch(cfg_);
    ck_.patch_mode = cfg_.patch_mode;
    ck_.encoder = std::make_unique<model::Encoder>(ck_.arch, cfg_.seed);
    ck_.head = std::make_unique<model::RelationHead<float>>(ck_.encoder->feature_dim(), 256, cfg_.seed);
    const auto stats = data::compute_norm_stats(*pool, split_.indices);
    ck_.norm.mean = stats.mean;
    ck_.norm.stddev = stats.stddev;
    ck_.image_side = data::traits(data_.id).side;
    ck_.epoch = 0;
    ck_.step = 0;
  }

  nn::ParamList<float> params = ck_.encoder->params();
  ck_.head->params(params);
  opt_ = nn::Adam<float>(params, cfg_.learning_rate);
  if (!ck_.adam_blob.empty()) {
    std::istringstream in(ck_.adam_blob);
    BinReader r(in);
    opt_.load(r);
  }
}

void Trainer::log_step(int epoch, std::int64_t step, const model::LossBreakdown& loss,
                       const agg::PairCounts& counts, double wall_ms) {
  nlohmann::json j;
  j["epoch"] = epoch;
  j["step"] = step;
  j["l_bce"] = loss.bce;
  j["l_mse_x"] = loss.mse_x;
  j["l_mse_y"] = loss.mse_y;
  j["l_total"] = loss.total;
  j["pairs_image_pos"] = counts.image_pos;
  j["pairs_image_neg"] = counts.image_neg;
  j["pairs_patch"] = counts.patch;
  j["wall_ms"] = wall_ms;
  std::ofstream out(log_file_, std::ios::app);
  out << j.dump() << "\n";
}

TrainStats Trainer::run() {
  const auto& pool = data_.pretrain_pool();
  const int m = cfg_.images_per_batch;
  const int steps_per_epoch = static_cast<int>(split_.indices.size()) / m;  // last partial batch dropped
  SPATIAL_CHECK_CONFIG(steps_per_epoch >= 1, "pretrain split smaller than one mini-batch");
  const std::int64_t total_steps = static_cast<std::int64_t>(steps_per_epoch) * cfg_.epochs;

  model::Encoder& enc = *ck_.encoder;
  model::RelationHead<float>& head = *ck_.head;
  model::RelationLoss<float> loss_fn;
  const int dim = enc.feature_dim();

  model::FPlane input;
  nn::Mat<float> pair_input, dfeat;
  std::vector<data::ImageRecord> records(static_cast<std::size_t>(m));

  auto save_checkpoint = [&](int completed_epoch) {
    ck_.epoch = completed_epoch;
    ck_.step = static_cast<std::int64_t>(completed_epoch) * steps_per_epoch;
    std::ostringstream blob;
    BinWriter bw(blob);
    opt_.save(bw);
    ck_.adam_blob = blob.str();
    ck_.save(checkpoint_path(cfg_.output_dir, completed_epoch));
  };

  for (int epoch = ck_.epoch; epoch < cfg_.epochs; ++epoch) {
    auto order = split_.indices;
    Rng perm_rng = Rng::stream(cfg_.seed, {kEpochPermStream, static_cast<std::uint64_t>(epoch)});
    perm_rng.shuffle(order);

    for (int step = 0; step < steps_per_epoch; ++step) {
      const auto t0 = Clock::now();
      for (int i = 0; i < m; ++i)
        records[static_cast<std::size_t>(i)] = pool->fetch(order[static_cast<std::size_t>(step) * m + i]);

      const ViewBatch batch = build_training_batch(records, cfg_, static_cast<std::uint64_t>(epoch),
                                                   static_cast<std::uint64_t>(step), cfg_.loader_workers);
      stats_.patch_views_built += static_cast<std::int64_t>(batch.n) * batch.m;
      model::fill_input_planes(batch.views, ck_.norm, input);

      const nn::Mat<float>& features = enc.forward(input, /*training=*/true);
      const auto pairs = agg::build_pairs(batch.tags, batch.m, batch.k, batch.n);
      const auto counts = agg::count_by_kind(pairs);
      SPATIAL_CHECK(counts.total() == agg::total_pair_count(batch.m, batch.k, batch.n),
                    "per-step pair count diverged from the closed form");

      const auto r = static_cast<Eigen::Index>(pairs.size());
      pair_input.resize(2 * dim, r);
      for (Eigen::Index i = 0; i < r; ++i) {
        pair_input.col(i).head(dim) = features.col(pairs[static_cast<std::size_t>(i)].left);
        pair_input.col(i).tail(dim) = features.col(pairs[static_cast<std::size_t>(i)].right);
      }

      const nn::Mat<float>& outputs = head.forward(pair_input, /*training=*/true);
      const model::LossBreakdown loss = loss_fn.forward(outputs, pairs);
      if (!loss.finite()) {
        std::ostringstream diag;
        diag << "non-finite loss at epoch " << epoch << " step " << step << ": bce=" << loss.bce
             << " mse_x=" << loss.mse_x << " mse_y=" << loss.mse_y;
        throw std::runtime_error(diag.str());
      }

      opt_.zero_grad();
      const nn::Mat<float>& dout = loss_fn.backward(outputs, pairs);
      const nn::Mat<float>& dpair = head.backward(dout);
      dfeat.setZero(dim, features.cols());
      for (Eigen::Index i = 0; i < r; ++i) {
        dfeat.col(pairs[static_cast<std::size_t>(i)].left) += dpair.col(i).head(dim);
        dfeat.col(pairs[static_cast<std::size_t>(i)].right) += dpair.col(i).tail(dim);
      }
      enc.backward(dfeat);

      double lr_scale = 1.0;
      if (cfg_.schedule == Schedule::kCosine) {
        const auto done = static_cast<double>(static_cast<std::int64_t>(epoch) * steps_per_epoch + step);
        lr_scale = 0.5 * (1.0 + std::cos(3.14159265358979323846 * done / static_cast<double>(total_steps)));
      }
      opt_.step(lr_scale);
      ++stats_.steps;
      stats_.last_loss = loss;

      const double wall_ms =
          std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      const std::int64_t global_step = static_cast<std::int64_t>(epoch) * steps_per_epoch + step;
      if (global_step % cfg_.log_every_steps == 0) log_step(epoch, global_step, loss, counts, wall_ms);
    }

    if ((epoch + 1) % cfg_.checkpoint_every_epochs == 0 || epoch + 1 == cfg_.epochs) save_checkpoint(epoch + 1);
  }

  stats_.final_checkpoint = checkpoint_path(cfg_.output_dir, cfg_.epochs);
  if (!fs::exists(stats_.final_checkpoint)) save_checkpoint(cfg_.epochs);
  return stats_;
}

}  // namespace spatial::train

#include "spatial/eval/probe.hpp"

#include <cmath>
#include <numeric>

#include "json.hpp"
#include "spatial/nn/adam.hpp"

namespace spatial::eval {

EvalResult seed_sweep(const std::function<SeedResult(std::uint64_t)>& run_fn,
                      const std::vector<std::uint64_t>& seeds) {
  SPATIAL_CHECK_CONFIG(seeds.size() >= 2, "seed_sweep needs at least two seeds");
  EvalResult r;
  for (const auto s : seeds) {
    SeedResult sr;
    try {
      sr = run_fn(s);
      sr.seed = s;
    } catch (const std::exception& e) {
      sr.seed = s;
      sr.ok = false;
      sr.error = e.what();
      r.complete = false;
    }
    r.per_seed.push_back(std::move(sr));
  }
  double sum = 0, sum_train = 0;
  int n = 0;
  for (const auto& sr : r.per_seed) {
    if (!sr.ok) continue;
    sum += sr.test_accuracy;
    sum_train += sr.train_accuracy;
    ++n;
  }
  if (n > 0) {
    r.mean_test = sum / n;
    r.mean_train = sum_train / n;
    double ss = 0;
    for (const auto& sr : r.per_seed)
      if (sr.ok) ss += (sr.test_accuracy - r.mean_test) * (sr.test_accuracy - r.mean_test);
    r.std_test = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  }
  return r;
}

std::string EvalResult::to_json() const {
  nlohmann::json j;
  j["mean_test_accuracy"] = mean_test;
  j["std_test_accuracy"] = std_test;
  j["mean_train_accuracy"] = mean_train;
  j["complete"] = complete;
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : per_seed) {
    nlohmann::json e;
    e["seed"] = s.seed;
    e["train_accuracy"] = s.train_accuracy;
    e["test_accuracy"] = s.test_accuracy;
    e["ok"] = s.ok;
    if (!s.ok) e["error"] = s.error;
    seeds.push_back(e);
  }
  j["per_seed"] = seeds;
  return j.dump(2);
}

std::string EvalResult::csv_header() const { return "label,seed,train_accuracy,test_accuracy,ok"; }

std::string EvalResult::csv_row(const std::string& label) const {
  std::string out;
  for (const auto& s : per_seed) {
    out += label + "," + std::to_string(s.seed) + "," + std::to_string(s.train_accuracy) + "," +
           std::to_string(s.test_accuracy) + "," + (s.ok ? "1" : "0") + "\n";
  }
  return out;
}

namespace {

double accuracy_percent(const nn::Mat<float>& logits, const std::vector<int>& labels) {
  std::int64_t hits = 0;
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    Eigen::Index arg = 0;
    logits.col(i).maxCoeff(&arg);
    if (static_cast<int>(arg) == labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(logits.cols());
}

}  // namespace

SeedResult train_probe_on_features(const nn::Mat<float>& train_x, const std::vector<int>& train_y,
                                   const nn::Mat<float>& test_x, const std::vector<int>& test_y, int classes,
                                   const ProbeConfig& cfg, std::uint64_t seed) {
  const auto f = train_x.rows();
  const auto ntr = train_x.cols();
  SPATIAL_CHECK(static_cast<std::size_t>(ntr) == train_y.size(), "probe: train feature/label mismatch");

  Rng init_rng = Rng::stream(seed, {0x50524f42ull});
  nn::Linear<float> fc(static_cast<int>(f), classes, init_rng, "probe.fc");
  nn::ParamList<float> params;
  fc.params(params);
  nn::Adam<float> opt(params, cfg.learning_rate);

  std::vector<std::uint32_t> order(static_cast<std::size_t>(ntr));
  std::iota(order.begin(), order.end(), 0u);

  nn::Mat<float> xb, logits, dlogits;
  const int bs = cfg.batch_size;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng perm = Rng::stream(seed, {0x5053484full, static_cast<std::uint64_t>(epoch)});
    perm.shuffle(order);
    for (Eigen::Index start = 0; start + bs <= ntr || (start < ntr && start == 0); start += bs) {
      const auto len = std::min<Eigen::Index>(bs, ntr - start);
      xb.resize(f, len);
      for (Eigen::Index i = 0; i < len; ++i)
        xb.col(i) = train_x.col(order[static_cast<std::size_t>(start + i)]);
      fc.forward(xb, logits);
      // softmax cross-entropy gradient
      dlogits.resize(classes, len);
      for (Eigen::Index i = 0; i < len; ++i) {
        const auto col = logits.col(i);
        const float mx = col.maxCoeff();
        Eigen::ArrayXf e = (col.array() - mx).exp();
        e /= e.sum();
        dlogits.col(i) = e.matrix() / static_cast<float>(len);
        dlogits(train_y[order[static_cast<std::size_t>(start + i)]], i) -= 1.f / static_cast<float>(len);
      }
      opt.zero_grad();
      fc.backward(xb, dlogits, nullptr);
      opt.step();
    }
  }

  SeedResult r;
  r.seed = seed;
  fc.forward(train_x, logits);
  r.train_accuracy = accuracy_percent(logits, train_y);
  fc.forward(test_x, logits);
  r.test_accuracy = accuracy_percent(logits, test_y);
  return r;
}

namespace {

struct FeatureSet {
  nn::Mat<float> x;
  std::vector<int> y;
};

FeatureSet extract_features(model::Checkpoint& ck, const data::RecordSource& src,
                            const std::vector<std::uint32_t>& indices, const rep::GridSpec& grid,
                            bool single_pass, const aug::AffineParams* affine, std::uint64_t affine_seed) {
  std::vector<Image> images;
  images.reserve(indices.size());
  FeatureSet out;
  out.y.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto rec = src.fetch(indices[i]);
    if (affine != nullptr) {
      Rng rng = Rng::stream(affine_seed, {0x41464631ull, static_cast<std::uint64_t>(i)});
      rec.pixels = aug::random_affine(rec.pixels, *affine, rng);
    }
    images.push_back(std::move(rec.pixels));
    out.y.push_back(rec.label);
  }
  const auto rows = single_pass ? rep::single_pass_representations(images, ck)
                                : rep::compose_representations(images, ck, grid);
  const auto width = rows.front().size();
  out.x.resize(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) out.x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
        rows[i][j];
  return out;
}

std::vector<std::uint32_t> head_indices(std::size_t n, int cap) {
  const std::size_t count = cap > 0 ? std::min<std::size_t>(n, static_cast<std::size_t>(cap)) : n;
  std::vector<std::uint32_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0u);
  return idx;
}

}  // namespace

EvalResult linear_probe(model::Checkpoint& ck, const data::EvalTaskSpec& task, const ProbeConfig& cfg,
                        const std::string& data_root, const std::vector<std::uint64_t>& seeds) {
  const auto probe_traits = data::traits(task.probe_dataset);
  SPATIAL_CHECK_CONFIG(probe_traits.side == ck.image_side,
                       "probe dataset geometry does not match the checkpoint");
  const bool single_pass = ck.patch_mode == patching::PatchMode::kAdditive;
  if (single_pass && cfg.n_patches > 0)
    config_fail("additive-mode checkpoints evaluate single-pass; set n_patches to 0");

  const auto ds = data::load_dataset(task.probe_dataset, data_root);
  const auto train_idx = head_indices(ds.train->size(), cfg.train_count);
  const auto test_idx = head_indices(ds.test->size(), cfg.test_count);

  const rep::GridSpec grid =
      single_pass ? rep::GridSpec{0, ck.config.patch_size_px, {}}
                  : rep::make_grid(ck.image_side, ck.config.patch_size_px, cfg.n_patches, ck.config.seed);

  const std::uint64_t backbone_before = ck.encoder->parameter_hash();
  const auto test_set = extract_features(ck, *ds.test, test_idx, grid, single_pass, nullptr, 0);

  EvalResult result;
  if (!cfg.affine_augment) {
    const auto train_set = extract_features(ck, *ds.train, train_idx, grid, single_pass, nullptr, 0);
    result = seed_sweep(
        [&](std::uint64_t seed) {
          return train_probe_on_features(train_set.x, train_set.y, test_set.x, test_set.y,
                                         probe_traits.classes, cfg, seed);
        },
        seeds);
  } else {
    // Affine-augmented probe: training inputs are re-augmented and re-encoded
    // every epoch; the backbone stays frozen throughout.
    result = seed_sweep(
        [&](std::uint64_t seed) {
          Rng init_rng = Rng::stream(seed, {0x50524f42ull});
          nn::Linear<float> fc(static_cast<int>(test_set.x.rows()), probe_traits.classes, init_rng, "probe.fc");
          nn::ParamList<float> params;
          fc.params(params);
          nn::Adam<float> opt(params, cfg.learning_rate);
          nn::Mat<float> logits, dlogits, xb;
          ProbeConfig one = cfg;
          one.epochs = 1;
          for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            const auto train_set = extract_features(ck, *ds.train, train_idx, grid, single_pass, &cfg.affine,
                                                    seed * 1000003ull + static_cast<std::uint64_t>(epoch));
            std::vector<std::uint32_t> order(train_idx.size());
            std::iota(order.begin(), order.end(), 0u);
            Rng perm = Rng::stream(seed, {0x5053484full, static_cast<std::uint64_t>(epoch)});
            perm.shuffle(order);
            const int bs = cfg.batch_size;
            const auto ntr = train_set.x.cols();
            for (Eigen::Index start = 0; start + bs <= ntr || (start < ntr && start == 0); start += bs) {
              const auto len = std::min<Eigen::Index>(bs, ntr - start);
              xb.resize(train_set.x.rows(), len);
              for (Eigen::Index i = 0; i < len; ++i)
                xb.col(i) = train_set.x.col(order[static_cast<std::size_t>(start + i)]);
              fc.forward(xb, logits);
              dlogits.resize(probe_traits.classes, len);
              for (Eigen::Index i = 0; i < len; ++i) {
                const auto col = logits.col(i);
                const float mx = col.maxCoeff();
                Eigen::ArrayXf e = (col.array() - mx).exp();
                e /= e.sum();
                dlogits.col(i) = e.matrix() / static_cast<float>(len);
                dlogits(train_set.y[order[static_cast<std::size_t>(start + i)]], i) -=
                    1.f / static_cast<float>(len);
              }
              opt.zero_grad();
              fc.backward(xb, dlogits, nullptr);
              opt.step();
            }
          }
          const auto train_clean = extract_features(ck, *ds.train, train_idx, grid, single_pass, nullptr, 0);
          SeedResult r;
          r.seed = seed;
          fc.forward(train_clean.x, logits);
          r.train_accuracy = accuracy_percent(logits, train_clean.y);
          fc.forward(test_set.x, logits);
          r.test_accuracy = accuracy_percent(logits, test_set.y);
          return r;
        },
        seeds);
  }
  SPATIAL_CHECK(ck.encoder->parameter_hash() == backbone_before,
                "backbone parameters changed during linear evaluation");
  return result;
}

}  // namespace spatial::eval

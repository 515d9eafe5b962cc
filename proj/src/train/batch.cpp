#include "spatial/train/batch.hpp"

#include <thread>

#include "spatial/aug/augment.hpp"

namespace spatial::train {

namespace {

constexpr std::uint64_t kAugStream = 0x41554731ull;
constexpr std::uint64_t kPatchPosStream = 0x50504f53ull;
constexpr std::uint64_t kPatchJitStream = 0x504a4954ull;

}  // namespace

ViewBatch build_training_batch(const std::vector<data::ImageRecord>& records, const RunConfig& cfg,
                               std::uint64_t epoch, std::uint64_t step, int workers) {
  const int m = static_cast<int>(records.size());
  const int k = cfg.augmentations;
  const int n = cfg.patches_per_image;
  SPATIAL_CHECK(m >= 1, "build_training_batch: empty record batch");

  ViewBatch out;
  out.m = m;
  out.k = k;
  out.n = n;
  out.views.resize(static_cast<std::size_t>(k) * m + static_cast<std::size_t>(m) * n);
  out.tags.resize(out.views.size());

  aug::FullAugmentParams fa;
  fa.crop.min_scale = cfg.crop_min_scale;
  fa.hflip_prob = cfg.hflip_prob;
  fa.jitter = cfg.jitter;

  auto build_image = [&](int im) {
    const Image& src = records[static_cast<std::size_t>(im)].pixels;
    const int side = src.h;
    for (int a = 0; a < k; ++a) {
      Rng rng = Rng::stream(cfg.seed, {kAugStream, epoch, step, static_cast<std::uint64_t>(im),
                                       static_cast<std::uint64_t>(a)});
      const std::size_t row = static_cast<std::size_t>(im) * k + a;
      out.views[row] = aug::full_image_augment(src, side, fa, rng);
      out.tags[row].kind = agg::Provenance::Kind::kImageView;
      out.tags[row].image_index = im;
      out.tags[row].view_index = a;
    }
    if (n > 0) {
      Rng pos_rng = Rng::stream(cfg.seed, {kPatchPosStream, epoch, step, static_cast<std::uint64_t>(im)});
      const auto specs =
          patching::sample_patch_positions(side, side, n, cfg.patch_size_px, pos_rng,
                                           cfg.rejection_max_attempts, im);
      for (int p = 0; p < n; ++p) {
        Rng jit_rng = Rng::stream(cfg.seed, {kPatchJitStream, epoch, step, static_cast<std::uint64_t>(im),
                                             static_cast<std::uint64_t>(p)});
        auto view = patching::extract_patch_view(src, specs[static_cast<std::size_t>(p)], cfg.patch_mode,
                                                 jit_rng, cfg.jitter, side);
        const std::size_t row = static_cast<std::size_t>(k) * m + static_cast<std::size_t>(im) * n + p;
        out.views[row] = std::move(view.pixels);
        out.tags[row].kind = agg::Provenance::Kind::kPatch;
        out.tags[row].image_index = im;
        out.tags[row].view_index = p;
        out.tags[row].spec = view.spec;
      }
    }
  };

  if (workers <= 1) {
    for (int im = 0; im < m; ++im) build_image(im);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int im = w; im < m; im += workers) build_image(im);
      });
    for (auto& t : pool) t.join();
  }
  return out;
}

}  // namespace spatial::train

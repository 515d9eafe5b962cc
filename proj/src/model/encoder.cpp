#include "spatial/model/encoder.hpp"

#include <cstring>

namespace spatial::model {

std::string arch_name(Arch a) {
  switch (a) {
    case Arch::kResNet32Cifar:
      return "resnet32_cifar";
    case Arch::kResNet34:
      return "resnet34";
  }
  contract_fail("unknown arch");
}

Arch arch_from_name(const std::string& s) {
  if (s == "resnet32_cifar") return Arch::kResNet32Cifar;
  if (s == "resnet34") return Arch::kResNet34;
  config_fail("unknown encoder architecture: " + s);
}

BasicBlock::BasicBlock(int cin, int cout, bool stride2, Shortcut shortcut, Rng& rng, const std::string& name)
    : shortcut_kind(shortcut),
      bn1(cout, name + ".bn1"),
      conv2(cout, cout, rng, name + ".conv2"),
      bn2(cout, name + ".bn2") {
  if (stride2) {
    conv1_s2.emplace(cin, cout, 3, 2, 1, rng, name + ".conv1");
    if (shortcut == Shortcut::kSubsampleA) {
      short_sub.emplace(cin, cout);
    } else {
      short_proj.emplace(cin, cout, 1, 2, 0, rng, name + ".short");
      short_bn.emplace(cout, name + ".short_bn");
    }
  } else {
    conv1_s1.emplace(cin, cout, rng, name + ".conv1");
  }
}

const FPlane& BasicBlock::forward(const FPlane& x, bool training) {
  if (conv1_s1)
    conv1_s1->forward(x, a);
  else
    conv1_s2->forward(x, a);
  bn1.forward(a, b, training);
  nn::relu_inplace(b);
  conv2.forward(b, c);
  bn2.forward(c, o, training);
  switch (shortcut_kind) {
    case Shortcut::kIdentity:
      o.m += x.m;
      break;
    case Shortcut::kSubsampleA:
      short_sub->forward(x, sc);
      o.m += sc.m;
      break;
    case Shortcut::kProjection:
      short_proj->forward(x, proj_pre);
      short_bn->forward(proj_pre, sc, training);
      o.m += sc.m;
      break;
  }
  nn::relu_inplace(o);
  return o;
}

void BasicBlock::backward(const FPlane& x, FPlane& dy, FPlane& dx) {
  nn::relu_backward_inplace(o, dy);  // dy: gradient at the residual sum
  bn2.backward(c, dy, dc);
  conv2.backward(b, dc, &db);
  nn::relu_backward_inplace(b, db);
  bn1.backward(a, db, dc);  // dc reused as conv1 output grad
  if (conv1_s1)
    conv1_s1->backward(x, dc, &dx);
  else
    conv1_s2->backward(x, dc, &dx);
  switch (shortcut_kind) {
    case Shortcut::kIdentity:
      dx.m += dy.m;
      break;
    case Shortcut::kSubsampleA:
      short_sub->backward(x, dy, dx, /*accumulate=*/true);
      break;
    case Shortcut::kProjection:
      short_bn->backward(proj_pre, dy, dsc);
      short_proj->backward(x, dsc, &db);  // db reused as projection input grad
      dx.m += db.m;
      break;
  }
}

void BasicBlock::params(nn::ParamList<float>& out) {
  if (conv1_s1) conv1_s1->params(out);
  if (conv1_s2) conv1_s2->params(out);
  bn1.params(out);
  conv2.params(out);
  bn2.params(out);
  if (short_proj) short_proj->params(out);
  if (short_bn) short_bn->params(out);
}

void BasicBlock::batchnorms(std::vector<nn::BatchNorm2d<float>*>& out) {
  out.push_back(&bn1);
  out.push_back(&bn2);
  if (short_bn) out.push_back(&*short_bn);
}

Encoder::Encoder(Arch arch, std::uint64_t init_seed) : arch_(arch), stem_bn_(0, "") { build(init_seed); }

void Encoder::build(std::uint64_t init_seed) {
  Rng rng = Rng::stream(init_seed, {0x494e4954ull});  // parameter init stream
  blocks_.clear();
  if (arch_ == Arch::kResNet32Cifar) {
    dim_ = 64;
    input_size_ = 32;
    stem3_.emplace(3, 16, rng, "stem");
    stem_bn_ = nn::BatchNorm2d<float>(16, "stem_bn");
    const int widths[3] = {16, 32, 64};
    int cin = 16;
    for (int s = 0; s < 3; ++s) {
      for (int i = 0; i < 5; ++i) {
        const bool stride2 = s > 0 && i == 0;
        blocks_.push_back(std::make_unique<BasicBlock>(
            cin, widths[s], stride2, stride2 ? BasicBlock::Shortcut::kSubsampleA : BasicBlock::Shortcut::kIdentity,
            rng, "s" + std::to_string(s) + ".b" + std::to_string(i)));
        cin = widths[s];
      }
    }
  } else {
    dim_ = 512;
    input_size_ = 96;
    stem7_.emplace(3, 64, 7, 2, 3, rng, "stem");
    stem_bn_ = nn::BatchNorm2d<float>(64, "stem_bn");
    stem_pool_.emplace(3, 2, 1);
    const int widths[4] = {64, 128, 256, 512};
    const int counts[4] = {3, 4, 6, 3};
    int cin = 64;
    for (int s = 0; s < 4; ++s) {
      for (int i = 0; i < counts[s]; ++i) {
        const bool stride2 = s > 0 && i == 0;
        blocks_.push_back(std::make_unique<BasicBlock>(
            cin, widths[s], stride2, stride2 ? BasicBlock::Shortcut::kProjection : BasicBlock::Shortcut::kIdentity,
            rng, "s" + std::to_string(s) + ".b" + std::to_string(i)));
        cin = widths[s];
      }
    }
  }
  params_.clear();
  if (stem3_) stem3_->params(params_);
  if (stem7_) stem7_->params(params_);
  stem_bn_.params(params_);
  for (auto& blk : blocks_) blk->params(params_);
  bns_.clear();
  bns_.push_back(&stem_bn_);
  for (auto& blk : blocks_) blk->batchnorms(bns_);
  block_dx_.resize(blocks_.size());
  block_inputs_.resize(blocks_.size());
}

const FMat& Encoder::forward(const FPlane& input, bool training) {
  SPATIAL_CHECK(input.channels == 3, "Encoder: expected 3 input channels");
  images_seen_ += input.batch;
  input_ = &input;
  const FPlane* cur = nullptr;
  if (arch_ == Arch::kResNet32Cifar) {
    stem3_->forward(input, s0_);
    stem_bn_.forward(s0_, s1_, training);
    nn::relu_inplace(s1_);
    cur = &s1_;
  } else {
    stem7_->forward(input, s0_);
    stem_bn_.forward(s0_, s1_, training);
    nn::relu_inplace(s1_);
    stem_pool_->forward(s1_, s1p_);
    cur = &s1p_;
  }
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    block_inputs_[i] = cur;
    cur = &blocks_[i]->forward(*cur, training);
  }
  last_plane_ = cur;
  gap_.forward(*cur, features_);
  return features_;
}

void Encoder::backward(const FMat& dfeatures) {
  SPATIAL_CHECK(last_plane_ != nullptr, "Encoder::backward before forward");
  gap_.backward(*last_plane_, dfeatures, dpool_);
  FPlane* dcur = &dpool_;
  for (std::size_t i = blocks_.size(); i-- > 0;) {
    blocks_[i]->backward(*block_inputs_[i], *dcur, block_dx_[i]);
    dcur = &block_dx_[i];
  }
  if (arch_ == Arch::kResNet32Cifar) {
    nn::relu_backward_inplace(s1_, *dcur);
    stem_bn_.backward(s0_, *dcur, dstem_);
    stem3_->backward(*input_, dstem_, nullptr);
  } else {
    stem_pool_->backward(s1_, *dcur, dstem2_);
    nn::relu_backward_inplace(s1_, dstem2_);
    stem_bn_.backward(s0_, dstem2_, dstem_);
    stem7_->backward(*input_, dstem_, nullptr);
  }
}

std::size_t Encoder::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value->size());
  return n;
}

std::uint64_t Encoder::parameter_hash() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& p : params_) h = fnv1a(p.value->data(), sizeof(float) * p.value->size(), h);
  return h;
}

void Encoder::save(BinWriter& w) const {
  w.str(arch_name(arch_));
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u64(params_.size());
  for (const auto& p : params_) {
    w.u64(static_cast<std::uint64_t>(p.value->rows()));
    w.u64(static_cast<std::uint64_t>(p.value->cols()));
    w.raw(p.value->data(), sizeof(float) * p.value->size());
  }
  w.u64(bns_.size());
  for (const auto* bn : bns_) {
    auto* mut = const_cast<nn::BatchNorm2d<float>*>(bn);
    w.u64(static_cast<std::uint64_t>(mut->running_mean().size()));
    w.raw(mut->running_mean().data(), sizeof(double) * mut->running_mean().size());
    w.raw(mut->running_var().data(), sizeof(double) * mut->running_var().size());
  }
}

void Encoder::load(BinReader& r) {
  const std::string name = r.str();
  SPATIAL_CHECK(name == arch_name(arch_), "Encoder::load: architecture mismatch (" + name + ")");
  const auto dim = r.u32();
  SPATIAL_CHECK(static_cast<int>(dim) == dim_, "Encoder::load: feature dim mismatch");
  const auto np = r.u64();
  SPATIAL_CHECK(np == params_.size(), "Encoder::load: parameter count mismatch");
  for (auto& p : params_) {
    const auto rows = r.u64();
    const auto cols = r.u64();
    SPATIAL_CHECK(rows == static_cast<std::uint64_t>(p.value->rows()) &&
                      cols == static_cast<std::uint64_t>(p.value->cols()),
                  "Encoder::load: parameter shape mismatch at " + p.name);
    r.raw(p.value->data(), sizeof(float) * p.value->size());
  }
  const auto nb = r.u64();
  SPATIAL_CHECK(nb == bns_.size(), "Encoder::load: batchnorm count mismatch");
  for (auto* bn : bns_) {
    const auto sz = r.u64();
    SPATIAL_CHECK(sz == static_cast<std::uint64_t>(bn->running_mean().size()), "Encoder::load: bn size mismatch");
    r.raw(bn->running_mean().data(), sizeof(double) * bn->running_mean().size());
    r.raw(bn->running_var().data(), sizeof(double) * bn->running_var().size());
  }
}

void fill_input_planes(const std::vector<Image>& views, const NormStats& norm, FPlane& out) {
  SPATIAL_CHECK(!views.empty(), "fill_input_planes: empty batch");
  const int h = views.front().h;
  const int w = views.front().w;
  if (!out.same_shape(3, static_cast<int>(views.size()), h, w))
    out.resize(3, static_cast<int>(views.size()), h, w);
  else
    out.m.setZero();
  for (std::size_t b = 0; b < views.size(); ++b) {
    const Image& im = views[b];
    SPATIAL_CHECK(im.h == h && im.w == w, "fill_input_planes: mixed view sizes");
    for (int c = 0; c < 3; ++c) {
      const float mu = static_cast<float>(norm.mean[c]);
      const float inv = static_cast<float>(1.0 / norm.stddev[c]);
      const float* src = im.plane(c);
      for (int y = 0; y < h; ++y) {
        const Eigen::Index base = out.col(static_cast<int>(b), y, 0);
        for (int x = 0; x < w; ++x) out.m(c, base + x) = (src[y * w + x] - mu) * inv;
      }
    }
  }
}

}  // namespace spatial::model

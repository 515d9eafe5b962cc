#pragma once

#include <string>

#include "spatial/nn/layers.hpp"

namespace spatial::model {

// Two-layer relation module: concat(left, right) -> hidden(2D->H, batchnorm,
// leaky rectifier) -> 3 outputs. Output 0 is the pair-class logit (sigmoid
// applied by the loss), outputs 1 and 2 are the predicted relative x/y
// distances, linear.
template <typename S>
class RelationHead {
public:
  RelationHead() = default;
  RelationHead(int feature_dim, int hidden, std::uint64_t init_seed)
      : feature_dim_(feature_dim), hidden_(hidden) {
    Rng rng = Rng::stream(init_seed, {0x48454144ull});
    fc1_ = nn::Linear<S>(2 * feature_dim, hidden, rng, "head.fc1");
    bn_ = nn::BatchNorm1d<S>(hidden, "head.bn");
    fc2_ = nn::Linear<S>(hidden, 3, rng, "head.fc2");
  }

  int feature_dim() const { return feature_dim_; }
  int hidden_dim() const { return hidden_; }

  // pair_input: [2D x R] concatenated pairs. Returns [3 x R].
  const nn::Mat<S>& forward(const nn::Mat<S>& pair_input, bool training) {
    x_ = &pair_input;
    fc1_.forward(pair_input, h1_);
    bn_.forward(h1_, h2_, training);
    nn::leaky_relu_forward(h2_, h3_, slope_);
    fc2_.forward(h3_, out_);
    return out_;
  }

  // Returns gradient w.r.t. the pair input, [2D x R].
  const nn::Mat<S>& backward(const nn::Mat<S>& dout) {
    fc2_.backward(h3_, dout, &dh3_);
    nn::leaky_relu_backward(h2_, dh3_, dh2_, slope_);
    bn_.backward(h1_, dh2_, dh1_);
    fc1_.backward(*x_, dh1_, &dx_);
    return dx_;
  }

  void params(nn::ParamList<S>& out) {
    fc1_.params(out);
    bn_.params(out);
    fc2_.params(out);
  }

  nn::BatchNorm1d<S>& batchnorm() { return bn_; }

  void save(BinWriter& w) {
    nn::ParamList<S> ps;
    params(ps);
    w.u64(ps.size());
    for (const auto& p : ps) {
      w.u64(static_cast<std::uint64_t>(p.value->rows()));
      w.u64(static_cast<std::uint64_t>(p.value->cols()));
      w.raw(p.value->data(), sizeof(S) * p.value->size());
    }
    w.u64(static_cast<std::uint64_t>(bn_.running_mean().size()));
    w.raw(bn_.running_mean().data(), sizeof(double) * bn_.running_mean().size());
    w.raw(bn_.running_var().data(), sizeof(double) * bn_.running_var().size());
  }

  void load(BinReader& r) {
    nn::ParamList<S> ps;
    params(ps);
    const auto n = r.u64();
    SPATIAL_CHECK(n == ps.size(), "RelationHead::load: parameter count mismatch");
    for (auto& p : ps) {
      const auto rows = r.u64();
      const auto cols = r.u64();
      SPATIAL_CHECK(rows == static_cast<std::uint64_t>(p.value->rows()) &&
                        cols == static_cast<std::uint64_t>(p.value->cols()),
                    "RelationHead::load: shape mismatch at " + p.name);
      r.raw(p.value->data(), sizeof(S) * p.value->size());
    }
    const auto sz = r.u64();
    SPATIAL_CHECK(sz == static_cast<std::uint64_t>(bn_.running_mean().size()), "RelationHead::load: bn mismatch");
    r.raw(bn_.running_mean().data(), sizeof(double) * bn_.running_mean().size());
    r.raw(bn_.running_var().data(), sizeof(double) * bn_.running_var().size());
  }

private:
  int feature_dim_ = 0;
  int hidden_ = 0;
  S slope_ = static_cast<S>(0.01);
  nn::Linear<S> fc1_, fc2_;
  nn::BatchNorm1d<S> bn_;
  const nn::Mat<S>* x_ = nullptr;
  nn::Mat<S> h1_, h2_, h3_, out_;
  nn::Mat<S> dh1_, dh2_, dh3_, dx_;
};

}  // namespace spatial::model

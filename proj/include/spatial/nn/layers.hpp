#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "spatial/core/rng.hpp"
#include "spatial/nn/plane.hpp"

namespace spatial::nn {

template <typename S>
struct ParamRef {
  Mat<S>* value;
  Mat<S>* grad;
  std::string name;
};

template <typename S>
using ParamList = std::vector<ParamRef<S>>;

template <typename S>
void he_normal_init(Mat<S>& w, int fan_in, Rng& rng) {
  const double std = std::sqrt(2.0 / fan_in);
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<S>(rng.normal(0.0, std));
}

// ---------------------------------------------------------------------------
// 3x3 stride-1 convolution, padding 1, no bias. Stored as nine [Cout x Cin]
// tap matrices; forward/backward run one whole-batch GEMM per tap against
// shifted column views of the padded plane. Valid outputs never read across
// image boundaries because a shift of at most wp+1 stays inside the halo.
// ---------------------------------------------------------------------------
template <typename S>
class Conv3x3 {
public:
  Conv3x3() = default;
  Conv3x3(int cin, int cout, Rng& rng, std::string name) : cin_(cin), cout_(cout), name_(std::move(name)) {
    for (int t = 0; t < 9; ++t) {
      w_[t].resize(cout, cin);
      he_normal_init(w_[t], 9 * cin, rng);
      g_[t].setZero(cout, cin);
    }
  }

  int in_channels() const { return cin_; }
  int out_channels() const { return cout_; }

  void forward(const PlaneBatch<S>& x, PlaneBatch<S>& y) const {
    SPATIAL_CHECK(x.channels == cin_, "Conv3x3: channel mismatch");
    if (!y.same_shape(cout_, x.batch, x.h, x.w)) y.resize(cout_, x.batch, x.h, x.w);
    y.m.setZero();
    const Eigen::Index cols = x.cols();
    for (int t = 0; t < 9; ++t) {
      const Eigen::Index s = shift(t, x.wp());
      const Eigen::Index a = std::max<Eigen::Index>(0, -s);
      const Eigen::Index len = cols - std::abs(s);
      y.m.middleCols(a, len).noalias() += w_[t] * x.m.middleCols(a + s, len);
    }
    y.zero_halo();
  }

  // dy halo columns must be zero on entry. Accumulates weight gradients;
  // writes (not accumulates) dx unless accumulate_dx.
  void backward(const PlaneBatch<S>& x, const PlaneBatch<S>& dy, PlaneBatch<S>* dx, bool accumulate_dx = false) {
    const Eigen::Index cols = x.cols();
    if (dx != nullptr && !accumulate_dx) {
      if (!dx->same_shape(cin_, x.batch, x.h, x.w)) dx->resize(cin_, x.batch, x.h, x.w);
      dx->m.setZero();
    }
    for (int t = 0; t < 9; ++t) {
      const Eigen::Index s = shift(t, x.wp());
      const Eigen::Index a = std::max<Eigen::Index>(0, -s);
      const Eigen::Index len = cols - std::abs(s);
      g_[t].noalias() += dy.m.middleCols(a, len) * x.m.middleCols(a + s, len).transpose();
      if (dx != nullptr) dx->m.middleCols(a + s, len).noalias() += w_[t].transpose() * dy.m.middleCols(a, len);
    }
    if (dx != nullptr) dx->zero_halo();
  }

  void params(ParamList<S>& out) {
    for (int t = 0; t < 9; ++t) out.push_back({&w_[t], &g_[t], name_ + ".w" + std::to_string(t)});
  }

private:
  static Eigen::Index shift(int tap, int wp) {
    const int dy = tap / 3;
    const int dx = tap % 3;
    return static_cast<Eigen::Index>(dy - 1) * wp + (dx - 1);
  }

  int cin_ = 0, cout_ = 0;
  std::array<Mat<S>, 9> w_;
  std::array<Mat<S>, 9> g_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// General k x k convolution via im2col, used for the strided layers (3x3/2,
// 1x1/2 projection, 7x7/2 stem). Weight layout [Cout x k*k*Cin], tap-major
// rows. The gathered column matrix is kept for the backward pass.
// ---------------------------------------------------------------------------
template <typename S>
class ConvIm2col {
public:
  ConvIm2col() = default;
  ConvIm2col(int cin, int cout, int k, int stride, int pad, Rng& rng, std::string name)
      : cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad), name_(std::move(name)) {
    w_.resize(cout, k * k * cin);
    he_normal_init(w_, k * k * cin, rng);
    g_.setZero(cout, k * k * cin);
  }

  int out_extent(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

  void forward(const PlaneBatch<S>& x, PlaneBatch<S>& y) {
    SPATIAL_CHECK(x.channels == cin_, "ConvIm2col: channel mismatch");
    const int ho = out_extent(x.h);
    const int wo = out_extent(x.w);
    if (!y.same_shape(cout_, x.batch, ho, wo)) y.resize(cout_, x.batch, ho, wo);
    gather(x, ho, wo);
    yv_.noalias() = w_ * col_;
    for (int b = 0; b < x.batch; ++b)
      for (int oy = 0; oy < ho; ++oy)
        y.m.middleCols(y.col(b, oy, 0), wo) = yv_.middleCols((static_cast<Eigen::Index>(b) * ho + oy) * wo, wo);
    y.zero_halo();
  }

  void backward(const PlaneBatch<S>& x, const PlaneBatch<S>& dy, PlaneBatch<S>* dx) {
    const int ho = dy.h;
    const int wo = dy.w;
    dyv_.resize(cout_, static_cast<Eigen::Index>(x.batch) * ho * wo);
    for (int b = 0; b < x.batch; ++b)
      for (int oy = 0; oy < ho; ++oy)
        dyv_.middleCols((static_cast<Eigen::Index>(b) * ho + oy) * wo, wo) = dy.m.middleCols(dy.col(b, oy, 0), wo);
    g_.noalias() += dyv_ * col_.transpose();
    if (dx == nullptr) return;
    if (!dx->same_shape(cin_, x.batch, x.h, x.w)) dx->resize(cin_, x.batch, x.h, x.w);
    dx->m.setZero();
    dcol_.noalias() = w_.transpose() * dyv_;
    // col2im scatter-add; halo writes are wiped afterwards, out-of-plane
    // taps (pad > 1) are skipped.
    Eigen::Index j = 0;
    for (int b = 0; b < x.batch; ++b) {
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox, ++j) {
          for (int ky = 0; ky < k_; ++ky) {
            const int sy = oy * stride_ + ky - pad_;  // source pixel y
            if (sy < -1 || sy > x.h) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int sx = ox * stride_ + kx - pad_;
              if (sx < -1 || sx > x.w) continue;
              dx->m.col(dx->col(b, sy, sx)).noalias() += dcol_.col(j).segment((ky * k_ + kx) * cin_, cin_);
            }
          }
        }
      }
    }
    dx->zero_halo();
  }

  void params(ParamList<S>& out) { out.push_back({&w_, &g_, name_ + ".w"}); }

private:
  void gather(const PlaneBatch<S>& x, int ho, int wo) {
    col_.resize(k_ * k_ * cin_, static_cast<Eigen::Index>(x.batch) * ho * wo);
    Eigen::Index j = 0;
    for (int b = 0; b < x.batch; ++b) {
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox, ++j) {
          for (int ky = 0; ky < k_; ++ky) {
            const int sy = oy * stride_ + ky - pad_;
            for (int kx = 0; kx < k_; ++kx) {
              const int sx = ox * stride_ + kx - pad_;
              auto dst = col_.col(j).segment((ky * k_ + kx) * cin_, cin_);
              if (sy < -1 || sy > x.h || sx < -1 || sx > x.w)
                dst.setZero();
              else
                dst = x.m.col(x.col(b, sy, sx));
            }
          }
        }
      }
    }
  }

  int cin_ = 0, cout_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
  Mat<S> w_, g_;
  Mat<S> col_, yv_, dyv_, dcol_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Batch normalization over valid plane columns. Halo columns are zero, so
// whole-matrix row sums equal valid-column sums; only the divisor changes.
// ---------------------------------------------------------------------------
template <typename S>
class BatchNorm2d {
public:
  BatchNorm2d() = default;
  BatchNorm2d(int channels, std::string name, double momentum = 0.1, double eps = 1e-5)
      : c_(channels), momentum_(momentum), eps_(eps), name_(std::move(name)) {
    gamma_.setOnes(channels, 1);
    beta_.setZero(channels, 1);
    ggamma_.setZero(channels, 1);
    gbeta_.setZero(channels, 1);
    running_mean_.setZero(channels, 1);
    running_var_.setOnes(channels, 1);
  }

  void forward(const PlaneBatch<S>& x, PlaneBatch<S>& y, bool training) {
    if (!y.same_shape(c_, x.batch, x.h, x.w)) y.resize(c_, x.batch, x.h, x.w);
    const double n = static_cast<double>(x.batch) * x.h * x.w;
    if (training) {
      const Vec<S> sum = x.m.rowwise().sum();
      const Vec<S> sumsq = x.m.cwiseProduct(x.m).rowwise().sum();
      mean_ = sum / static_cast<S>(n);
      Vec<S> var = (sumsq / static_cast<S>(n)) - mean_.cwiseProduct(mean_);
      var = var.cwiseMax(S(0));
      inv_std_ = (var.array() + static_cast<S>(eps_)).rsqrt().matrix();
      running_mean_ = (1 - momentum_) * running_mean_ + momentum_ * mean_.template cast<double>();
      const double unbias = n > 1 ? n / (n - 1) : 1.0;
      running_var_ = (1 - momentum_) * running_var_ + momentum_ * unbias * var.template cast<double>();
    } else {
      mean_ = running_mean_.template cast<S>();
      inv_std_ = (running_var_.array() + eps_).rsqrt().template cast<S>().matrix();
    }
    const Vec<S> a = gamma_.cwiseProduct(inv_std_);
    const Vec<S> b = beta_ - a.cwiseProduct(mean_);
    y.m.array() = (x.m.array().colwise() * a.array()).colwise() + b.array();
    y.zero_halo();
  }

  void backward(const PlaneBatch<S>& x, const PlaneBatch<S>& dy, PlaneBatch<S>& dx) {
    if (!dx.same_shape(c_, x.batch, x.h, x.w)) dx.resize(c_, x.batch, x.h, x.w);
    const S n = static_cast<S>(static_cast<double>(x.batch) * x.h * x.w);
    const Vec<S> s1 = dy.m.rowwise().sum();
    const Vec<S> s2 = dy.m.cwiseProduct(x.m).rowwise().sum();
    const Vec<S> q = (s2 - mean_.cwiseProduct(s1)).cwiseProduct(inv_std_);  // sum dy * xhat
    ggamma_ += q;
    gbeta_ += s1;
    const Vec<S> a = gamma_.cwiseProduct(inv_std_);
    const Vec<S> b = -a.cwiseProduct(inv_std_).cwiseProduct(q) / n;
    const Vec<S> c = -a.cwiseProduct(s1) / n - b.cwiseProduct(mean_);
    dx.m.array() = ((dy.m.array().colwise() * a.array()) + (x.m.array().colwise() * b.array())).colwise() + c.array();
    dx.zero_halo();
  }

  void params(ParamList<S>& out) {
    out.push_back({&gamma_, &ggamma_, name_ + ".gamma"});
    out.push_back({&beta_, &gbeta_, name_ + ".beta"});
  }

  Mat<double>& running_mean() { return running_mean_; }
  Mat<double>& running_var() { return running_var_; }

private:
  int c_ = 0;
  double momentum_ = 0.1, eps_ = 1e-5;
  Mat<S> gamma_, beta_, ggamma_, gbeta_;
  Mat<double> running_mean_, running_var_;
  Vec<S> mean_, inv_std_;
  std::string name_;
};

// ReLU applied in place; the stored output doubles as the backward mask.
template <typename S>
inline void relu_inplace(PlaneBatch<S>& x) {
  x.m = x.m.cwiseMax(S(0));
}

template <typename S>
inline void relu_backward_inplace(const PlaneBatch<S>& y_post, PlaneBatch<S>& dy) {
  S* d = dy.m.data();
  const S* s = y_post.m.data();
  const Eigen::Index n = dy.m.size();
  for (Eigen::Index i = 0; i < n; ++i) d[i] = s[i] > S(0) ? d[i] : S(0);
}

// ---------------------------------------------------------------------------
// Global average pool over valid pixels: [C x cols] plane -> [C x B].
// ---------------------------------------------------------------------------
template <typename S>
class GlobalAvgPool {
public:
  void forward(const PlaneBatch<S>& x, Mat<S>& y) const {
    y.resize(x.channels, x.batch);
    const S inv = S(1) / static_cast<S>(x.h * x.w);
    const int L = x.plane_cols();
    for (int b = 0; b < x.batch; ++b) y.col(b) = x.m.middleCols(static_cast<Eigen::Index>(b) * L, L).rowwise().sum() * inv;
  }

  void backward(const PlaneBatch<S>& x, const Mat<S>& dy, PlaneBatch<S>& dx) const {
    if (!dx.same_shape(x.channels, x.batch, x.h, x.w)) dx.resize(x.channels, x.batch, x.h, x.w);
    dx.m.setZero();
    const S inv = S(1) / static_cast<S>(x.h * x.w);
    for (int b = 0; b < x.batch; ++b) {
      const Vec<S> v = dy.col(b) * inv;
      for (int y = 0; y < x.h; ++y) dx.m.middleCols(dx.col(b, y, 0), x.w).colwise() = v;
    }
  }
};

// ---------------------------------------------------------------------------
// Max pool (used by the ResNet-34 stem). Stores argmax columns.
// ---------------------------------------------------------------------------
template <typename S>
class MaxPool2d {
public:
  MaxPool2d(int k, int stride, int pad) : k_(k), stride_(stride), pad_(pad) {}

  int out_extent(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

  void forward(const PlaneBatch<S>& x, PlaneBatch<S>& y) {
    const int ho = out_extent(x.h);
    const int wo = out_extent(x.w);
    if (!y.same_shape(x.channels, x.batch, ho, wo)) y.resize(x.channels, x.batch, ho, wo);
    arg_.resize(x.channels, static_cast<Eigen::Index>(x.batch) * ho * wo);
    Eigen::Index j = 0;
    for (int b = 0; b < x.batch; ++b) {
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox, ++j) {
          for (int c = 0; c < x.channels; ++c) {
            S best = std::numeric_limits<S>::lowest();
            Eigen::Index best_col = -1;
            for (int ky = 0; ky < k_; ++ky) {
              const int sy = oy * stride_ + ky - pad_;
              if (sy < 0 || sy >= x.h) continue;
              for (int kx = 0; kx < k_; ++kx) {
                const int sx = ox * stride_ + kx - pad_;
                if (sx < 0 || sx >= x.w) continue;
                const Eigen::Index cc = x.col(b, sy, sx);
                if (x.m(c, cc) > best) {
                  best = x.m(c, cc);
                  best_col = cc;
                }
              }
            }
            y.m(c, y.col(b, oy, ox)) = best;
            arg_(c, j) = best_col;
          }
        }
      }
    }
    y.zero_halo();
  }

  void backward(const PlaneBatch<S>& x, const PlaneBatch<S>& dy, PlaneBatch<S>& dx) {
    if (!dx.same_shape(x.channels, x.batch, x.h, x.w)) dx.resize(x.channels, x.batch, x.h, x.w);
    dx.m.setZero();
    const int ho = dy.h;
    const int wo = dy.w;
    Eigen::Index j = 0;
    for (int b = 0; b < x.batch; ++b)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox, ++j)
          for (int c = 0; c < x.channels; ++c) dx.m(c, arg_(c, j)) += dy.m(c, dy.col(b, oy, ox));
  }

private:
  int k_, stride_, pad_;
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> arg_;
};

// Option-A residual shortcut: spatial 2x subsampling, identity on the first
// cin channels, zeros on the rest. Parameter-free.
template <typename S>
class IdentityDownsample {
public:
  IdentityDownsample() = default;
  IdentityDownsample(int cin, int cout) : cin_(cin), cout_(cout) {}

  void forward(const PlaneBatch<S>& x, PlaneBatch<S>& y) const {
    const int ho = x.h / 2;
    const int wo = x.w / 2;
    if (!y.same_shape(cout_, x.batch, ho, wo)) y.resize(cout_, x.batch, ho, wo);
    y.m.setZero();
    for (int b = 0; b < x.batch; ++b)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) y.m.col(y.col(b, oy, ox)).head(cin_) = x.m.col(x.col(b, 2 * oy, 2 * ox)).head(cin_);
  }

  void backward(const PlaneBatch<S>& x, const PlaneBatch<S>& dy, PlaneBatch<S>& dx, bool accumulate) const {
    if (!accumulate) {
      if (!dx.same_shape(cin_, x.batch, x.h, x.w)) dx.resize(cin_, x.batch, x.h, x.w);
      dx.m.setZero();
    }
    const int ho = dy.h;
    const int wo = dy.w;
    for (int b = 0; b < x.batch; ++b)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) dx.m.col(dx.col(b, 2 * oy, 2 * ox)).head(cin_) += dy.m.col(dy.col(b, oy, ox)).head(cin_);
  }

private:
  int cin_ = 0, cout_ = 0;
};

// ---------------------------------------------------------------------------
// Dense layer on [in x R] column batches.
// ---------------------------------------------------------------------------
template <typename S>
class Linear {
public:
  Linear() = default;
  Linear(int in, int out, Rng& rng, std::string name) : in_(in), out_(out), name_(std::move(name)) {
    w_.resize(out, in);
    he_normal_init(w_, in, rng);
    b_.setZero(out, 1);
    gw_.setZero(out, in);
    gb_.setZero(out, 1);
  }

  void forward(const Mat<S>& x, Mat<S>& y) const {
    y.noalias() = w_ * x;
    y.colwise() += Vec<S>(b_.col(0));
  }

  void backward(const Mat<S>& x, const Mat<S>& dy, Mat<S>* dx) {
    gw_.noalias() += dy * x.transpose();
    gb_.col(0) += dy.rowwise().sum();
    if (dx != nullptr) dx->noalias() = w_.transpose() * dy;
  }

  void params(ParamList<S>& out) {
    out.push_back({&w_, &gw_, name_ + ".w"});
    out.push_back({&b_, &gb_, name_ + ".b"});
  }

  const Mat<S>& weight() const { return w_; }

private:
  int in_ = 0, out_ = 0;
  Mat<S> w_, b_, gw_, gb_;
  std::string name_;
};

// Batch norm over a plain [F x R] matrix (relation-head hidden layer).
template <typename S>
class BatchNorm1d {
public:
  BatchNorm1d() = default;
  BatchNorm1d(int features, std::string name, double momentum = 0.1, double eps = 1e-5)
      : f_(features), momentum_(momentum), eps_(eps), name_(std::move(name)) {
    gamma_.setOnes(features, 1);
    beta_.setZero(features, 1);
    ggamma_.setZero(features, 1);
    gbeta_.setZero(features, 1);
    running_mean_.setZero(features, 1);
    running_var_.setOnes(features, 1);
  }

  void forward(const Mat<S>& x, Mat<S>& y, bool training) {
    const double n = static_cast<double>(x.cols());
    if (training) {
      mean_ = x.rowwise().mean();
      Vec<S> var = (x.colwise() - Vec<S>(mean_)).cwiseAbs2().rowwise().sum() / static_cast<S>(n);
      var = var.cwiseMax(S(0));
      inv_std_ = (var.array() + static_cast<S>(eps_)).rsqrt().matrix();
      running_mean_ = (1 - momentum_) * running_mean_ + momentum_ * mean_.template cast<double>();
      const double unbias = n > 1 ? n / (n - 1) : 1.0;
      running_var_ = (1 - momentum_) * running_var_ + momentum_ * unbias * var.template cast<double>();
    } else {
      mean_ = running_mean_.template cast<S>();
      inv_std_ = (running_var_.array() + eps_).rsqrt().template cast<S>().matrix();
    }
    const Vec<S> a = gamma_.cwiseProduct(inv_std_);
    const Vec<S> b = beta_ - a.cwiseProduct(mean_);
    y = ((x.array().colwise() * a.array()).colwise() + b.array()).matrix();
  }

  void backward(const Mat<S>& x, const Mat<S>& dy, Mat<S>& dx) {
    const S n = static_cast<S>(x.cols());
    const Vec<S> s1 = dy.rowwise().sum();
    const Vec<S> s2 = dy.cwiseProduct(x).rowwise().sum();
    const Vec<S> q = (s2 - mean_.cwiseProduct(s1)).cwiseProduct(inv_std_);
    ggamma_ += q;
    gbeta_ += s1;
    const Vec<S> a = gamma_.cwiseProduct(inv_std_);
    const Vec<S> b = -a.cwiseProduct(inv_std_).cwiseProduct(q) / n;
    const Vec<S> c = -a.cwiseProduct(s1) / n - b.cwiseProduct(mean_);
    dx = (((dy.array().colwise() * a.array()) + (x.array().colwise() * b.array())).colwise() + c.array()).matrix();
  }

  void params(ParamList<S>& out) {
    out.push_back({&gamma_, &ggamma_, name_ + ".gamma"});
    out.push_back({&beta_, &gbeta_, name_ + ".beta"});
  }

  Mat<double>& running_mean() { return running_mean_; }
  Mat<double>& running_var() { return running_var_; }

private:
  int f_ = 0;
  double momentum_ = 0.1, eps_ = 1e-5;
  Mat<S> gamma_, beta_, ggamma_, gbeta_;
  Mat<double> running_mean_, running_var_;
  Vec<S> mean_, inv_std_;
  std::string name_;
};

template <typename S>
inline void leaky_relu_forward(const Mat<S>& x, Mat<S>& y, S slope) {
  y = x.array().max(x.array() * slope).matrix();
}

template <typename S>
inline void leaky_relu_backward(const Mat<S>& x, const Mat<S>& dy, Mat<S>& dx, S slope) {
  dx = (x.array() > S(0)).select(dy, dy * slope);
}

}  // namespace spatial::nn

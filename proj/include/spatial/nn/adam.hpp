#pragma once

#include <cmath>
#include <vector>

#include "spatial/core/serialize.hpp"
#include "spatial/nn/layers.hpp"

namespace spatial::nn {

// Adam with bias correction. State is serializable so interrupted training
// resumes step-for-step.
template <typename S>
class Adam {
public:
  Adam() = default;
  explicit Adam(const ParamList<S>& params, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params_) {
      m_.emplace_back(Mat<S>::Zero(p.value->rows(), p.value->cols()));
      v_.emplace_back(Mat<S>::Zero(p.value->rows(), p.value->cols()));
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.grad->setZero();
  }

  void step(double lr_scale = 1.0) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    const S alpha = static_cast<S>(lr_ * lr_scale * std::sqrt(bc2) / bc1);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Mat<S>& g = *params_[i].grad;
      m_[i] = static_cast<S>(beta1_) * m_[i] + static_cast<S>(1 - beta1_) * g;
      v_[i] = static_cast<S>(beta2_) * v_[i] + static_cast<S>(1 - beta2_) * g.cwiseProduct(g);
      params_[i].value->array() -=
          alpha * m_[i].array() / (v_[i].array().sqrt() + static_cast<S>(eps_ * std::sqrt(bc2)));
    }
  }

  std::int64_t step_count() const { return t_; }

  void save(BinWriter& w) const {
    w.i64(t_);
    w.u64(m_.size());
    for (std::size_t i = 0; i < m_.size(); ++i) {
      w.u64(static_cast<std::uint64_t>(m_[i].size()));
      w.raw(m_[i].data(), sizeof(S) * m_[i].size());
      w.raw(v_[i].data(), sizeof(S) * v_[i].size());
    }
  }

  void load(BinReader& r) {
    t_ = r.i64();
    const auto n = r.u64();
    SPATIAL_CHECK(n == m_.size(), "Adam state: parameter count mismatch");
    for (std::size_t i = 0; i < m_.size(); ++i) {
      const auto sz = r.u64();
      SPATIAL_CHECK(sz == static_cast<std::uint64_t>(m_[i].size()), "Adam state: parameter shape mismatch");
      r.raw(m_[i].data(), sizeof(S) * m_[i].size());
      r.raw(v_[i].data(), sizeof(S) * v_[i].size());
    }
  }

private:
  ParamList<S> params_;
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::int64_t t_ = 0;
  std::vector<Mat<S>> m_, v_;
};

}  // namespace spatial::nn

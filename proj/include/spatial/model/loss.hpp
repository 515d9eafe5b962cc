#pragma once

#include <cmath>
#include <vector>

#include "spatial/agg/aggregation.hpp"
#include "spatial/nn/plane.hpp"

namespace spatial::model {

struct LossBreakdown {
  double bce = 0;
  double mse_x = 0;
  double mse_y = 0;
  double total = 0;

  bool finite() const {
    return std::isfinite(bce) && std::isfinite(mse_x) && std::isfinite(mse_y) && std::isfinite(total);
  }
};

// Composite relation loss: mean binary cross-entropy of the sigmoid of
// output row 0 against the pair class target, plus mean squared error of
// rows 1 and 2 against the distance targets (pseudo targets included for
// image pairs), summed with unit weights.
template <typename S>
class RelationLoss {
public:
  // outputs: [3 x R] raw head outputs (row 0 is the class logit).
  LossBreakdown forward(const nn::Mat<S>& outputs, const std::vector<agg::PairRow>& targets) {
    const auto r = static_cast<Eigen::Index>(targets.size());
    SPATIAL_CHECK(outputs.rows() == 3 && outputs.cols() == r, "RelationLoss: outputs/targets misaligned");
    SPATIAL_CHECK(r > 0, "RelationLoss: empty pair batch");
    probs_.resize(r);
    double bce = 0, mx = 0, my = 0;
    for (Eigen::Index i = 0; i < r; ++i) {
      const double z = static_cast<double>(outputs(0, i));
      const double p = 1.0 / (1.0 + std::exp(-z));
      probs_[static_cast<std::size_t>(i)] = p;
      const double pc = std::min(1.0 - kEps, std::max(kEps, p));
      const double t = targets[static_cast<std::size_t>(i)].class_target;
      bce -= t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc);
      const double ex = static_cast<double>(outputs(1, i)) - targets[static_cast<std::size_t>(i)].tx;
      const double ey = static_cast<double>(outputs(2, i)) - targets[static_cast<std::size_t>(i)].ty;
      mx += ex * ex;
      my += ey * ey;
    }
    breakdown_.bce = bce / r;
    breakdown_.mse_x = mx / r;
    breakdown_.mse_y = my / r;
    breakdown_.total = breakdown_.bce + breakdown_.mse_x + breakdown_.mse_y;
    return breakdown_;
  }

  // d(total)/d(outputs), same shape as outputs.
  const nn::Mat<S>& backward(const nn::Mat<S>& outputs, const std::vector<agg::PairRow>& targets) {
    const auto r = static_cast<Eigen::Index>(targets.size());
    grad_.resize(3, r);
    const double inv = 1.0 / static_cast<double>(r);
    for (Eigen::Index i = 0; i < r; ++i) {
      const auto& t = targets[static_cast<std::size_t>(i)];
      grad_(0, i) = static_cast<S>((probs_[static_cast<std::size_t>(i)] - t.class_target) * inv);
      grad_(1, i) = static_cast<S>(2.0 * (static_cast<double>(outputs(1, i)) - t.tx) * inv);
      grad_(2, i) = static_cast<S>(2.0 * (static_cast<double>(outputs(2, i)) - t.ty) * inv);
    }
    return grad_;
  }

  const LossBreakdown& last() const { return breakdown_; }

  static constexpr double kEps = 1e-7;

private:
  std::vector<double> probs_;
  LossBreakdown breakdown_;
  nn::Mat<S> grad_;
};

}  // namespace spatial::model

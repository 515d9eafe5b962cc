#pragma once

#include <Eigen/Dense>

#include "spatial/common.hpp"

namespace spatial::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Batch of channel-major activation planes with a one-pixel zero halo:
// column index runs over (image, padded_y, padded_x). The halo keeps 3x3
// stride-1 convolutions expressible as nine shifted GEMMs over the whole
// batch, and keeps reductions exact because halo columns are held at zero.
template <typename S>
struct PlaneBatch {
  int channels = 0;
  int batch = 0;
  int h = 0;
  int w = 0;
  Mat<S> m;

  int hp() const { return h + 2; }
  int wp() const { return w + 2; }
  int plane_cols() const { return hp() * wp(); }
  Eigen::Index cols() const { return static_cast<Eigen::Index>(batch) * plane_cols(); }

  void resize(int c, int b, int height, int width) {
    channels = c;
    batch = b;
    h = height;
    w = width;
    m.setZero(c, static_cast<Eigen::Index>(b) * (height + 2) * (width + 2));
  }

  bool same_shape(int c, int b, int height, int width) const {
    return channels == c && batch == b && h == height && w == width;
  }

  // Column of valid pixel (y, x) of image b.
  Eigen::Index col(int b, int y, int x) const {
    return static_cast<Eigen::Index>(b) * plane_cols() + static_cast<Eigen::Index>(y + 1) * wp() + (x + 1);
  }

  // Reset every non-valid column to zero. Called after any operation that
  // may have written into halo columns.
  void zero_halo() {
    const int L = plane_cols();
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index base = static_cast<Eigen::Index>(b) * L;
      m.middleCols(base, wp() + 1).setZero();
      for (int y = 1; y < h; ++y) m.middleCols(base + y * wp() + w + 1, 2).setZero();
      m.middleCols(base + static_cast<Eigen::Index>(h) * wp() + w + 1, wp() + 1).setZero();
    }
  }

  S value(int c, int b, int y, int x) const { return m(c, col(b, y, x)); }
  S& value(int c, int b, int y, int x) { return m(c, col(b, y, x)); }
};

}  // namespace spatial::nn

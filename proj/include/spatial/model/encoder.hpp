#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spatial/core/image.hpp"
#include "spatial/nn/adam.hpp"
#include "spatial/nn/layers.hpp"

namespace spatial::model {

enum class Arch { kResNet32Cifar, kResNet34 };

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& s);

// Per-channel normalization applied to encoder inputs, computed on the
// pretraining split and carried inside checkpoints.
struct NormStats {
  std::array<double, 3> mean{0.5, 0.5, 0.5};
  std::array<double, 3> stddev{0.25, 0.25, 0.25};
};

using FMat = nn::Mat<float>;
using FPlane = nn::PlaneBatch<float>;

// Residual basic block; identity or downsampling (stride-2 entry conv with
// either a parameter-free option-A shortcut or a 1x1 projection).
struct BasicBlock {
  enum class Shortcut { kIdentity, kSubsampleA, kProjection };

  BasicBlock(int cin, int cout, bool stride2, Shortcut shortcut, Rng& rng, const std::string& name);

  const FPlane& forward(const FPlane& x, bool training);
  // dy is consumed (modified in place); dx receives the input gradient.
  void backward(const FPlane& x, FPlane& dy, FPlane& dx);
  void params(nn::ParamList<float>& out);
  void batchnorms(std::vector<nn::BatchNorm2d<float>*>& out);

  Shortcut shortcut_kind;
  std::optional<nn::Conv3x3<float>> conv1_s1;
  std::optional<nn::ConvIm2col<float>> conv1_s2;
  nn::BatchNorm2d<float> bn1;
  nn::Conv3x3<float> conv2;
  nn::BatchNorm2d<float> bn2;
  std::optional<nn::IdentityDownsample<float>> short_sub;
  std::optional<nn::ConvIm2col<float>> short_proj;
  std::optional<nn::BatchNorm2d<float>> short_bn;

  FPlane a, b, c, o;       // conv1 out; bn1+relu out; conv2 out; block out
  FPlane proj_pre, sc;     // shortcut intermediates (downsampling blocks)
  FPlane dc, db, dsc;      // backward scratch
};

// Convolutional backbone producing one D-dimensional vector per view.
// Patches and full images pass through the same parameter set.
class Encoder {
public:
  Encoder(Arch arch, std::uint64_t init_seed);

  Arch arch() const { return arch_; }
  int feature_dim() const { return dim_; }
  int input_size() const { return input_size_; }

  // views laid out as [3 x B*Lpad] padded planes; returns [D x B].
  const FMat& forward(const FPlane& input, bool training);
  // Backward through the cached forward state; accumulates parameter grads.
  void backward(const FMat& dfeatures);

  nn::ParamList<float>& params() { return params_; }
  std::size_t parameter_count() const;
  std::uint64_t parameter_hash() const;

  // Instrumented compute counter: encoder invocations, in images.
  std::int64_t images_seen() const { return images_seen_; }
  void reset_images_seen() { images_seen_ = 0; }

  void save(BinWriter& w) const;
  void load(BinReader& r);

private:
  void build(std::uint64_t init_seed);

  Arch arch_;
  int dim_ = 0;
  int input_size_ = 0;

  std::optional<nn::Conv3x3<float>> stem3_;      // CIFAR stem
  std::optional<nn::ConvIm2col<float>> stem7_;   // ImageNet-style stem
  std::optional<nn::MaxPool2d<float>> stem_pool_;
  nn::BatchNorm2d<float> stem_bn_;
  std::vector<std::unique_ptr<BasicBlock>> blocks_;
  nn::GlobalAvgPool<float> gap_;

  nn::ParamList<float> params_;
  std::vector<nn::BatchNorm2d<float>*> bns_;

  // forward caches
  const FPlane* input_ = nullptr;
  FPlane s0_, s1_, s1p_;
  std::vector<const FPlane*> block_inputs_;
  std::vector<FPlane> block_dx_;
  FPlane dpool_, dstem_, dstem2_;
  FMat features_;
  const FPlane* last_plane_ = nullptr;
  std::int64_t images_seen_ = 0;
};

// Assemble encoder input planes from [0,1]-space images, applying the
// per-channel normalization as the last step.
void fill_input_planes(const std::vector<Image>& views, const NormStats& norm, FPlane& out);

}  // namespace spatial::model

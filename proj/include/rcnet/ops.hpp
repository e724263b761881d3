#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rcnet/tensor.hpp"

namespace rcnet {

/// Sampling geometry of a 3D convolution. Kernel extents come from the
/// weight tensor (D x C x lk x kh x kw); this carries everything else.
struct ConvGeometry {
  std::size_t pad_l = 0;
  std::size_t pad_h = 0, pad_w = 0;
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t dilation = 1;

  /// Zero padding that keeps H x W for a k x k kernel at the given dilation.
  static ConvGeometry same(std::size_t k, std::size_t dilation = 1) {
    const std::size_t p = dilation * (k - 1) / 2;
    return ConvGeometry{0, p, p, 1, 1, dilation};
  }
};

/// Plain 3D convolution: valid (or pad_l-padded) in time, zero-padded and
/// optionally strided in space, bias per output channel, no activation.
template <typename T> struct Conv3Kernel {
  Tensor5<T> weight; // D x C x lk x kh x kw
  Tensor5<T> bias;   // D x 1 x 1 x 1 x 1
  ConvGeometry geom;
};

/// Retrospective kernel. weight(d, c, 0, ., .) is applied to each historical
/// frame, weight(d, c, 1, ., .) to the current frame.
template <typename T> struct RetroKernel {
  Tensor5<T> weight; // D x C x 2 x kh x kw
  Tensor5<T> bias;   // D x 1 x 1 x 1 x 1
  std::size_t dilation = 1;
};

/// Change-feature module: retro conv -> ReLU -> two 3x3 spatial convs (each
/// followed by ReLU) -> full-length temporal average pooling.
template <typename T> struct RetroModule {
  RetroKernel<T> retro;
  Conv3Kernel<T> spatial_a;
  Conv3Kernel<T> spatial_b;
};

struct ArppConfig {
  std::vector<std::size_t> dilations; // one per branch
  std::size_t total_filters = 0;      // N, split evenly over branches

  /// Throws ConfigError when N is not divisible by the branch count,
  /// dilations repeat, or anything is zero.
  void validate() const;
  std::size_t branch_filters() const { return total_filters / dilations.size(); }
};

template <typename T> struct DeconvKernel {
  Tensor5<T> weight; // D x C x 1 x 2 x 2  (D outputs, C inputs)
  Tensor5<T> bias;   // D x 1 x 1 x 1 x 1
};

/// Effective spatial extent of a dilated k-tap kernel.
constexpr std::size_t dilated_extent(std::size_t k, std::size_t dilation) {
  return k + (k - 1) * (dilation - 1);
}

template <typename T>
Tensor5<T> conv3d(const Tensor5<T> &x, const Tensor5<T> &weight,
                  const Tensor5<T> &bias, const ConvGeometry &geom);
template <typename T>
Tensor5<T> conv3d(const Tensor5<T> &x, const Conv3Kernel<T> &k) {
  return conv3d(x, k.weight, k.bias, k.geom);
}

/// Output has L-1 slices: slice l pairs historical frame l with the current
/// frame L-1. Spatial padding keeps H x W at any dilation.
template <typename T>
Tensor5<T> retro_conv(const Tensor5<T> &x, const Tensor5<T> &weight,
                      const Tensor5<T> &bias, std::size_t dilation);
template <typename T>
Tensor5<T> retro_conv(const Tensor5<T> &x, const RetroKernel<T> &k) {
  return retro_conv(x, k.weight, k.bias, k.dilation);
}
template <typename T>
Tensor5<T> atrous_retro_conv(const Tensor5<T> &x, const RetroKernel<T> &k) {
  return retro_conv(x, k.weight, k.bias, k.dilation);
}

template <typename T> Tensor5<T> temporal_avg_pool(const Tensor5<T> &x);

template <typename T>
Tensor5<T> retro_module(const Tensor5<T> &x, const RetroModule<T> &m);

/// Parallel retro modules, one per dilation, concatenated on channels.
template <typename T>
Tensor5<T> arpp(const Tensor5<T> &x, const ArppConfig &cfg,
                std::span<const RetroModule<T>> branches);

template <typename T>
Tensor5<T> deconv2x2(const Tensor5<T> &x, const Tensor5<T> &weight,
                     const Tensor5<T> &bias);
template <typename T>
Tensor5<T> deconv2x2(const Tensor5<T> &x, const DeconvKernel<T> &k) {
  return deconv2x2(x, k.weight, k.bias);
}

template <typename T> Tensor5<T> relu(const Tensor5<T> &x);
template <typename T> Tensor5<T> sigmoid(const Tensor5<T> &x);
template <typename T> Tensor5<T> maxpool2(const Tensor5<T> &x);

// ---------------------------------------------------------------------------
// Reverse-mode kernels. Each returns gradients w.r.t. its inputs given the
// gradient w.r.t. its output.

template <typename T> struct ConvGrads {
  Tensor5<T> dx, dweight, dbias;
};

template <typename T>
ConvGrads<T> conv3d_backward(const Tensor5<T> &x, const Tensor5<T> &weight,
                             const ConvGeometry &geom, const Tensor5<T> &dy);
template <typename T>
ConvGrads<T> retro_conv_backward(const Tensor5<T> &x, const Tensor5<T> &weight,
                                 std::size_t dilation, const Tensor5<T> &dy);
template <typename T>
ConvGrads<T> deconv2x2_backward(const Tensor5<T> &x, const Tensor5<T> &weight,
                                const Tensor5<T> &dy);
template <typename T>
Tensor5<T> temporal_avg_pool_backward(const Dims5 &in_dims,
                                      const Tensor5<T> &dy);
/// Subgradient 0 at x == 0.
template <typename T>
Tensor5<T> relu_backward(const Tensor5<T> &x, const Tensor5<T> &dy);
template <typename T>
Tensor5<T> sigmoid_backward(const Tensor5<T> &y, const Tensor5<T> &dy);
/// Routes each window's gradient to its first maximum in row-major order.
template <typename T>
Tensor5<T> maxpool2_backward(const Tensor5<T> &x, const Tensor5<T> &dy);

} // namespace rcnet

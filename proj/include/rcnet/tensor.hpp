#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rcnet/errors.hpp"

namespace rcnet {

/// Extents of a rank-5 array in N x C x L x H x W order.
struct Dims5 {
  std::size_t n = 0, c = 0, l = 0, h = 0, w = 0;

  /// Element count; throws DimensionError on a zero extent or overflow.
  std::size_t count() const;
  std::size_t plane() const { return h * w; }
  bool operator==(const Dims5 &) const = default;
  std::string str() const;
};

/// Dense rank-5 array, row-major N,C,L,H,W. The last temporal slice
/// (l = L-1) is the current frame by convention.
template <typename T> class Tensor5 {
public:
  using value_type = T;

  Tensor5() = default;
  explicit Tensor5(const Dims5 &dims, T fill = T(0))
      : dims_(dims), data_(dims.count(), fill) {}

  const Dims5 &dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t offset(std::size_t n, std::size_t c, std::size_t l,
                     std::size_t i, std::size_t j) const {
    assert(n < dims_.n && c < dims_.c && l < dims_.l && i < dims_.h &&
           j < dims_.w);
    return (((n * dims_.c + c) * dims_.l + l) * dims_.h + i) * dims_.w + j;
  }
  T &operator()(std::size_t n, std::size_t c, std::size_t l, std::size_t i,
                std::size_t j) {
    return data_[offset(n, c, l, i, j)];
  }
  T operator()(std::size_t n, std::size_t c, std::size_t l, std::size_t i,
               std::size_t j) const {
    return data_[offset(n, c, l, i, j)];
  }

  /// Pointer to the H x W plane at (n, c, l).
  T *plane(std::size_t n, std::size_t c, std::size_t l) {
    return data_.data() + offset(n, c, l, 0, 0);
  }
  const T *plane(std::size_t n, std::size_t c, std::size_t l) const {
    return data_.data() + offset(n, c, l, 0, 0);
  }
  /// Pointer to the C x L x H x W block of batch item n.
  T *item(std::size_t n) { return data_.data() + n * item_size(); }
  const T *item(std::size_t n) const { return data_.data() + n * item_size(); }
  std::size_t item_size() const { return dims_.c * dims_.l * dims_.plane(); }

  T *data() { return data_.data(); }
  const T *data() const { return data_.data(); }
  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Same data reinterpreted under new dims with equal element count.
  Tensor5 reshaped(const Dims5 &dims) const {
    if (dims.count() != data_.size())
      throw ShapeError("reshape " + dims_.str() + " -> " + dims.str() +
                       " changes element count");
    Tensor5 out;
    out.dims_ = dims;
    out.data_ = data_;
    return out;
  }

  template <typename U> Tensor5<U> cast() const {
    Tensor5<U> out(dims_);
    for (std::size_t k = 0; k < data_.size(); ++k)
      out.data()[k] = static_cast<U>(data_[k]);
    return out;
  }

  bool operator==(const Tensor5 &) const = default;

private:
  Dims5 dims_;
  std::vector<T> data_;
};

using Tensor5f = Tensor5<float>;
using Tensor5d = Tensor5<double>;

/// Binary per-pixel mask (1 = changing foreground), dims N x H x W.
struct Mask2 {
  std::size_t n = 0, h = 0, w = 0;
  std::vector<std::uint8_t> data;

  Mask2() = default;
  Mask2(std::size_t n_, std::size_t h_, std::size_t w_)
      : n(n_), h(h_), w(w_), data(n_ * h_ * w_, 0) {}

  std::uint8_t &operator()(std::size_t k, std::size_t i, std::size_t j) {
    assert(k < n && i < h && j < w);
    return data[(k * h + i) * w + j];
  }
  std::uint8_t operator()(std::size_t k, std::size_t i, std::size_t j) const {
    assert(k < n && i < h && j < w);
    return data[(k * h + i) * w + j];
  }
  std::size_t count_ones() const;
  bool operator==(const Mask2 &) const = default;
};

template <typename T> Tensor5<T> tensor_create(const Dims5 &dims, T fill) {
  return Tensor5<T>(dims, fill);
}

/// Per-(n,c,l) bilinear resampling, half-pixel centres (align_corners=false).
template <typename T>
Tensor5<T> bilinear_resize(const Tensor5<T> &x, std::size_t new_h,
                           std::size_t new_w);

/// Channel concatenation: a occupies [0, a.c), b the rest.
template <typename T>
Tensor5<T> concat_channels(const Tensor5<T> &a, const Tensor5<T> &b);

/// Channels [first, first + count) of x.
template <typename T>
Tensor5<T> slice_channels(const Tensor5<T> &x, std::size_t first,
                          std::size_t count);

/// Temporal slices [first, first + count) of x.
template <typename T>
Tensor5<T> slice_frames(const Tensor5<T> &x, std::size_t first,
                        std::size_t count);

} // namespace rcnet

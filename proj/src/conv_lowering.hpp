#pragma once

// im2col / col2im lowering shared by the forward and backward kernels.

#include <Eigen/Core>
#include <algorithm>
#include <cstddef>
#include <cstring>

#include "rcnet/ops.hpp"

namespace rcnet::detail {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T> using MapR = Eigen::Map<MatR<T>>;
template <typename T> using CMapR = Eigen::Map<const MatR<T>>;

/// Frames [l_first, l_first + l_count) of one C x L x H x W batch item.
struct FrameWindow {
  std::size_t c, l, h, w;
  std::size_t l_first, l_count;
};

struct Lowering {
  std::size_t lk, kh, kw;
  ConvGeometry g;
  std::size_t lo, ho, wo;

  std::size_t rows(std::size_t channels) const { return channels * lk * kh * kw; }
  std::size_t cols() const { return lo * ho * wo; }
};

inline Lowering make_lowering(const FrameWindow &fw, std::size_t lk,
                              std::size_t kh, std::size_t kw,
                              const ConvGeometry &g) {
  Lowering lw{lk, kh, kw, g, 0, 0, 0};
  const std::size_t eh = dilated_extent(kh, g.dilation);
  const std::size_t ew = dilated_extent(kw, g.dilation);
  const std::size_t lin = fw.l_count + 2 * g.pad_l;
  const std::size_t hin = fw.h + 2 * g.pad_h;
  const std::size_t win = fw.w + 2 * g.pad_w;
  if (lin < lk || hin < eh || win < ew)
    return lw; // zero-sized output, caller rejects
  lw.lo = lin - lk + 1;
  lw.ho = (hin - eh) / g.stride_h + 1;
  lw.wo = (win - ew) / g.stride_w + 1;
  return lw;
}

// Valid output column range [j0, j1) for a row whose first tap lands at
// column offset x0 (stride 1).
inline void valid_span(long x0, std::size_t wo, std::size_t w, std::size_t &j0,
                       std::size_t &j1) {
  const long lo = std::max(0L, -x0);
  const long hi = std::min(static_cast<long>(wo), static_cast<long>(w) - x0);
  j0 = static_cast<std::size_t>(std::min(lo, static_cast<long>(wo)));
  j1 = static_cast<std::size_t>(std::max(hi, static_cast<long>(j0)));
}

template <typename T>
void im2col(const T *x, const FrameWindow &fw, const Lowering &lw, T *cols) {
  const std::size_t P = lw.cols();
  const std::size_t plane_out = lw.ho * lw.wo;
  const ConvGeometry &g = lw.g;
  for (std::size_t c = 0; c < fw.c; ++c)
    for (std::size_t t = 0; t < lw.lk; ++t)
      for (std::size_t a = 0; a < lw.kh; ++a)
        for (std::size_t b = 0; b < lw.kw; ++b) {
          const std::size_t row = ((c * lw.lk + t) * lw.kh + a) * lw.kw + b;
          T *dst_row = cols + row * P;
          const long x0 = static_cast<long>(b * g.dilation) -
                          static_cast<long>(g.pad_w);
          for (std::size_t lo = 0; lo < lw.lo; ++lo) {
            T *dst_plane = dst_row + lo * plane_out;
            const long sl = static_cast<long>(lo + t) - static_cast<long>(g.pad_l);
            if (sl < 0 || sl >= static_cast<long>(fw.l_count)) {
              std::fill(dst_plane, dst_plane + plane_out, T(0));
              continue;
            }
            const T *src_plane =
                x + (c * fw.l + fw.l_first + static_cast<std::size_t>(sl)) *
                        fw.h * fw.w;
            for (std::size_t i = 0; i < lw.ho; ++i) {
              T *d = dst_plane + i * lw.wo;
              const long y = static_cast<long>(i * g.stride_h + a * g.dilation) -
                             static_cast<long>(g.pad_h);
              if (y < 0 || y >= static_cast<long>(fw.h)) {
                std::fill(d, d + lw.wo, T(0));
                continue;
              }
              const T *src = src_plane + static_cast<std::size_t>(y) * fw.w;
              if (g.stride_w == 1) {
                std::size_t j0, j1;
                valid_span(x0, lw.wo, fw.w, j0, j1);
                std::fill(d, d + j0, T(0));
                if (j1 > j0)
                  std::memcpy(d + j0, src + (static_cast<long>(j0) + x0),
                              (j1 - j0) * sizeof(T));
                std::fill(d + j1, d + lw.wo, T(0));
              } else {
                for (std::size_t j = 0; j < lw.wo; ++j) {
                  const long xx = static_cast<long>(j * g.stride_w) + x0;
                  d[j] = (xx >= 0 && xx < static_cast<long>(fw.w))
                             ? src[static_cast<std::size_t>(xx)]
                             : T(0);
                }
              }
            }
          }
        }
}

/// Adjoint of im2col: scatters (accumulates) cols back onto dx.
template <typename T>
void col2im(const T *cols, const FrameWindow &fw, const Lowering &lw, T *dx) {
  const std::size_t P = lw.cols();
  const std::size_t plane_out = lw.ho * lw.wo;
  const ConvGeometry &g = lw.g;
  for (std::size_t c = 0; c < fw.c; ++c)
    for (std::size_t t = 0; t < lw.lk; ++t)
      for (std::size_t a = 0; a < lw.kh; ++a)
        for (std::size_t b = 0; b < lw.kw; ++b) {
          const std::size_t row = ((c * lw.lk + t) * lw.kh + a) * lw.kw + b;
          const T *src_row = cols + row * P;
          const long x0 = static_cast<long>(b * g.dilation) -
                          static_cast<long>(g.pad_w);
          for (std::size_t lo = 0; lo < lw.lo; ++lo) {
            const long sl = static_cast<long>(lo + t) - static_cast<long>(g.pad_l);
            if (sl < 0 || sl >= static_cast<long>(fw.l_count))
              continue;
            const T *src_plane = src_row + lo * plane_out;
            T *dst_plane =
                dx + (c * fw.l + fw.l_first + static_cast<std::size_t>(sl)) *
                         fw.h * fw.w;
            for (std::size_t i = 0; i < lw.ho; ++i) {
              const long y = static_cast<long>(i * g.stride_h + a * g.dilation) -
                             static_cast<long>(g.pad_h);
              if (y < 0 || y >= static_cast<long>(fw.h))
                continue;
              const T *s = src_plane + i * lw.wo;
              T *dst = dst_plane + static_cast<std::size_t>(y) * fw.w;
              if (g.stride_w == 1) {
                std::size_t j0, j1;
                valid_span(x0, lw.wo, fw.w, j0, j1);
                T *dd = dst + x0;
                for (std::size_t j = j0; j < j1; ++j)
                  dd[j] += s[j];
              } else {
                for (std::size_t j = 0; j < lw.wo; ++j) {
                  const long xx = static_cast<long>(j * g.stride_w) + x0;
                  if (xx >= 0 && xx < static_cast<long>(fw.w))
                    dst[static_cast<std::size_t>(xx)] += s[j];
                }
              }
            }
          }
        }
}

/// Splits a D x C x 2 x kh x kw retro weight into its historical (t = 0) and
/// current (t = 1) halves, each D x (C*kh*kw) row-major.
template <typename T>
void split_retro_weight(const Tensor5<T> &w, MatR<T> &hist, MatR<T> &cur) {
  const Dims5 &d = w.dims();
  const std::size_t k2 = d.h * d.w;
  hist.resize(static_cast<Eigen::Index>(d.n), static_cast<Eigen::Index>(d.c * k2));
  cur.resize(static_cast<Eigen::Index>(d.n), static_cast<Eigen::Index>(d.c * k2));
  for (std::size_t o = 0; o < d.n; ++o)
    for (std::size_t c = 0; c < d.c; ++c) {
      std::memcpy(hist.data() + (o * d.c + c) * k2, w.plane(o, c, 0),
                  k2 * sizeof(T));
      std::memcpy(cur.data() + (o * d.c + c) * k2, w.plane(o, c, 1),
                  k2 * sizeof(T));
    }
}

} // namespace rcnet::detail

#include "rcnet/ops.hpp"

#include <cmath>
#include <set>

#include "conv_lowering.hpp"

namespace rcnet {

using detail::CMapR;
using detail::FrameWindow;
using detail::Lowering;
using detail::MapR;
using detail::MatR;

void ArppConfig::validate() const {
  if (dilations.empty())
    throw ConfigError("ARPP needs at least one branch");
  if (total_filters == 0)
    throw ConfigError("ARPP total filter count must be positive");
  if (total_filters % dilations.size() != 0)
    throw ConfigError("ARPP filter count " + std::to_string(total_filters) +
                      " is not divisible by " +
                      std::to_string(dilations.size()) + " branches");
  std::set<std::size_t> seen;
  for (std::size_t d : dilations) {
    if (d == 0)
      throw ConfigError("ARPP dilation must be >= 1");
    if (!seen.insert(d).second)
      throw ConfigError("ARPP dilation " + std::to_string(d) + " repeats");
  }
}

namespace {

template <typename T> void check_bias(const Tensor5<T> &bias, std::size_t d) {
  if (bias.size() != d)
    throw ShapeError("bias has " + std::to_string(bias.size()) +
                     " entries, expected " + std::to_string(d));
}

// Adds bias[d] to every element of channel d in a D x P block.
template <typename T>
void add_bias(T *y, const Tensor5<T> &bias, std::size_t d_count, std::size_t p) {
  for (std::size_t d = 0; d < d_count; ++d) {
    const T b = bias.data()[d];
    T *row = y + d * p;
    for (std::size_t k = 0; k < p; ++k)
      row[k] += b;
  }
}

} // namespace

template <typename T>
Tensor5<T> conv3d(const Tensor5<T> &x, const Tensor5<T> &weight,
                  const Tensor5<T> &bias, const ConvGeometry &geom) {
  const Dims5 &xd = x.dims();
  const Dims5 &wd = weight.dims();
  if (xd.c != wd.c)
    throw ShapeError("conv3d: input has " + std::to_string(xd.c) +
                     " channels, kernel expects " + std::to_string(wd.c));
  if (xd.l + 2 * geom.pad_l < wd.l)
    throw TemporalError("conv3d: temporal kernel " + std::to_string(wd.l) +
                        " longer than input length " + std::to_string(xd.l));
  check_bias(bias, wd.n);
  const FrameWindow fw{xd.c, xd.l, xd.h, xd.w, 0, xd.l};
  const Lowering lw = detail::make_lowering(fw, wd.l, wd.h, wd.w, geom);
  if (lw.lo == 0)
    throw ShapeError("conv3d: kernel larger than padded input " + xd.str());
  const std::size_t K = lw.rows(xd.c);
  const std::size_t P = lw.cols();
  Tensor5<T> y(Dims5{xd.n, wd.n, lw.lo, lw.ho, lw.wo});
  std::vector<T> cols(K * P);
  const CMapR<T> W(weight.data(), static_cast<Eigen::Index>(wd.n),
                   static_cast<Eigen::Index>(K));
  for (std::size_t n = 0; n < xd.n; ++n) {
    detail::im2col(x.item(n), fw, lw, cols.data());
    MapR<T> Y(y.item(n), static_cast<Eigen::Index>(wd.n),
              static_cast<Eigen::Index>(P));
    Y.noalias() = W * CMapR<T>(cols.data(), static_cast<Eigen::Index>(K),
                               static_cast<Eigen::Index>(P));
    add_bias(y.item(n), bias, wd.n, P);
  }
  return y;
}

template <typename T>
Tensor5<T> retro_conv(const Tensor5<T> &x, const Tensor5<T> &weight,
                      const Tensor5<T> &bias, std::size_t dilation) {
  const Dims5 &xd = x.dims();
  const Dims5 &wd = weight.dims();
  if (wd.l != 2)
    throw ShapeError("retro_conv: kernel temporal extent must be 2, got " +
                     std::to_string(wd.l));
  if (dilation == 0)
    throw ShapeError("retro_conv: dilation must be >= 1");
  if (xd.l < 2)
    throw TemporalError("retro_conv: clip length " + std::to_string(xd.l) +
                        " < 2");
  if (xd.c != wd.c)
    throw ShapeError("retro_conv: input has " + std::to_string(xd.c) +
                     " channels, kernel expects " + std::to_string(wd.c));
  if (wd.h % 2 == 0 || wd.w % 2 == 0)
    throw ShapeError("retro_conv: spatial kernel extents must be odd");
  check_bias(bias, wd.n);

  ConvGeometry g;
  g.dilation = dilation;
  g.pad_h = dilation * (wd.h - 1) / 2;
  g.pad_w = dilation * (wd.w - 1) / 2;
  const std::size_t hist_len = xd.l - 1;
  const FrameWindow hist{xd.c, xd.l, xd.h, xd.w, 0, hist_len};
  const FrameWindow cur{xd.c, xd.l, xd.h, xd.w, hist_len, 1};
  const Lowering lh = detail::make_lowering(hist, 1, wd.h, wd.w, g);
  const Lowering lc = detail::make_lowering(cur, 1, wd.h, wd.w, g);
  const std::size_t K = lh.rows(xd.c);
  const std::size_t plane = xd.plane();

  MatR<T> w_hist, w_cur;
  detail::split_retro_weight(weight, w_hist, w_cur);

  Tensor5<T> y(Dims5{xd.n, wd.n, hist_len, xd.h, xd.w});
  std::vector<T> cols_h(K * lh.cols());
  std::vector<T> cols_c(K * lc.cols());
  MatR<T> current(static_cast<Eigen::Index>(wd.n),
                  static_cast<Eigen::Index>(plane));
  for (std::size_t n = 0; n < xd.n; ++n) {
    detail::im2col(x.item(n), hist, lh, cols_h.data());
    detail::im2col(x.item(n), cur, lc, cols_c.data());
    MapR<T> Y(y.item(n), static_cast<Eigen::Index>(wd.n),
              static_cast<Eigen::Index>(hist_len * plane));
    Y.noalias() = w_hist * CMapR<T>(cols_h.data(), static_cast<Eigen::Index>(K),
                                    static_cast<Eigen::Index>(lh.cols()));
    current.noalias() =
        w_cur * CMapR<T>(cols_c.data(), static_cast<Eigen::Index>(K),
                         static_cast<Eigen::Index>(plane));
    // The current-frame response is shared by every historical slice.
    for (std::size_t d = 0; d < wd.n; ++d) {
      const T b = bias.data()[d];
      const T *cr = current.data() + d * plane;
      for (std::size_t l = 0; l < hist_len; ++l) {
        T *out = y.plane(n, d, l);
        for (std::size_t k = 0; k < plane; ++k)
          out[k] += cr[k] + b;
      }
    }
  }
  return y;
}

template <typename T> Tensor5<T> temporal_avg_pool(const Tensor5<T> &x) {
  const Dims5 &d = x.dims();
  Tensor5<T> y(Dims5{d.n, d.c, 1, d.h, d.w});
  const T inv = T(1) / static_cast<T>(d.l);
  const std::size_t plane = d.plane();
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t c = 0; c < d.c; ++c) {
      T *out = y.plane(n, c, 0);
      for (std::size_t l = 0; l < d.l; ++l) {
        const T *in = x.plane(n, c, l);
        for (std::size_t k = 0; k < plane; ++k)
          out[k] += in[k];
      }
      for (std::size_t k = 0; k < plane; ++k)
        out[k] *= inv;
    }
  return y;
}

template <typename T>
Tensor5<T> retro_module(const Tensor5<T> &x, const RetroModule<T> &m) {
  Tensor5<T> h = relu(retro_conv(x, m.retro));
  h = relu(conv3d(h, m.spatial_a));
  h = relu(conv3d(h, m.spatial_b));
  return temporal_avg_pool(h);
}

template <typename T>
Tensor5<T> arpp(const Tensor5<T> &x, const ArppConfig &cfg,
                std::span<const RetroModule<T>> branches) {
  cfg.validate();
  if (branches.size() != cfg.dilations.size())
    throw ConfigError("ARPP expects " + std::to_string(cfg.dilations.size()) +
                      " branches, got " + std::to_string(branches.size()));
  Tensor5<T> out;
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const RetroModule<T> &m = branches[b];
    if (m.retro.weight.dims().n != cfg.branch_filters())
      throw ConfigError("ARPP branch " + std::to_string(b) + " has " +
                        std::to_string(m.retro.weight.dims().n) +
                        " filters, expected " +
                        std::to_string(cfg.branch_filters()));
    if (m.retro.dilation != cfg.dilations[b])
      throw ConfigError("ARPP branch " + std::to_string(b) +
                        " dilation does not match config");
    Tensor5<T> part = retro_module(x, m);
    out = out.empty() ? std::move(part) : concat_channels(out, part);
  }
  return out;
}

template <typename T>
Tensor5<T> deconv2x2(const Tensor5<T> &x, const Tensor5<T> &weight,
                     const Tensor5<T> &bias) {
  const Dims5 &xd = x.dims();
  const Dims5 &wd = weight.dims();
  if (xd.l != 1)
    throw ShapeError("deconv2x2: input must have l = 1, got " +
                     std::to_string(xd.l));
  if (wd.l != 1 || wd.h != 2 || wd.w != 2)
    throw ShapeError("deconv2x2: kernel must be D x C x 1 x 2 x 2");
  if (wd.c != xd.c)
    throw ShapeError("deconv2x2: input has " + std::to_string(xd.c) +
                     " channels, kernel expects " + std::to_string(wd.c));
  check_bias(bias, wd.n);
  const std::size_t D = wd.n, C = wd.c, plane = xd.plane();
  // Row (d, a, b) of the gathered kernel holds w(d, :, 0, a, b).
  MatR<T> wg(static_cast<Eigen::Index>(4 * D), static_cast<Eigen::Index>(C));
  for (std::size_t d = 0; d < D; ++d)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t ab = 0; ab < 4; ++ab)
        wg(static_cast<Eigen::Index>(d * 4 + ab), static_cast<Eigen::Index>(c)) =
            weight.plane(d, c, 0)[ab];
  Tensor5<T> y(Dims5{xd.n, D, 1, 2 * xd.h, 2 * xd.w});
  MatR<T> z;
  for (std::size_t n = 0; n < xd.n; ++n) {
    z.noalias() = wg * CMapR<T>(x.item(n), static_cast<Eigen::Index>(C),
                                static_cast<Eigen::Index>(plane));
    for (std::size_t d = 0; d < D; ++d) {
      T *out = y.plane(n, d, 0);
      const T b = bias.data()[d];
      for (std::size_t ab = 0; ab < 4; ++ab) {
        const T *zr = z.data() + (d * 4 + ab) * plane;
        const std::size_t a = ab / 2, bb = ab % 2;
        for (std::size_t i = 0; i < xd.h; ++i)
          for (std::size_t j = 0; j < xd.w; ++j)
            out[(2 * i + a) * (2 * xd.w) + 2 * j + bb] = zr[i * xd.w + j] + b;
      }
    }
  }
  return y;
}

template <typename T> Tensor5<T> relu(const Tensor5<T> &x) {
  Tensor5<T> y(x.dims());
  const T *in = x.data();
  T *out = y.data();
  for (std::size_t k = 0; k < x.size(); ++k)
    out[k] = in[k] > T(0) ? in[k] : T(0);
  return y;
}

template <typename T> Tensor5<T> sigmoid(const Tensor5<T> &x) {
  Tensor5<T> y(x.dims());
  const T *in = x.data();
  T *out = y.data();
  for (std::size_t k = 0; k < x.size(); ++k)
    out[k] = T(1) / (T(1) + std::exp(-in[k]));
  return y;
}

template <typename T> Tensor5<T> maxpool2(const Tensor5<T> &x) {
  const Dims5 &d = x.dims();
  if (d.h % 2 != 0 || d.w % 2 != 0)
    throw ShapeError("maxpool2 needs even spatial dims, got " + d.str());
  const std::size_t ho = d.h / 2, wo = d.w / 2;
  Tensor5<T> y(Dims5{d.n, d.c, d.l, ho, wo});
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t c = 0; c < d.c; ++c)
      for (std::size_t l = 0; l < d.l; ++l) {
        const T *in = x.plane(n, c, l);
        T *out = y.plane(n, c, l);
        for (std::size_t i = 0; i < ho; ++i)
          for (std::size_t j = 0; j < wo; ++j) {
            const T *p = in + 2 * i * d.w + 2 * j;
            out[i * wo + j] = std::max(std::max(p[0], p[1]),
                                       std::max(p[d.w], p[d.w + 1]));
          }
      }
  return y;
}

#define RCNET_INSTANTIATE(T)                                                   \
  template Tensor5<T> conv3d(const Tensor5<T> &, const Tensor5<T> &,           \
                             const Tensor5<T> &, const ConvGeometry &);        \
  template Tensor5<T> retro_conv(const Tensor5<T> &, const Tensor5<T> &,       \
                                 const Tensor5<T> &, std::size_t);             \
  template Tensor5<T> temporal_avg_pool(const Tensor5<T> &);                   \
  template Tensor5<T> retro_module(const Tensor5<T> &, const RetroModule<T> &); \
  template Tensor5<T> arpp(const Tensor5<T> &, const ArppConfig &,             \
                           std::span<const RetroModule<T>>);                   \
  template Tensor5<T> deconv2x2(const Tensor5<T> &, const Tensor5<T> &,        \
                                const Tensor5<T> &);                           \
  template Tensor5<T> relu(const Tensor5<T> &);                                \
  template Tensor5<T> sigmoid(const Tensor5<T> &);                             \
  template Tensor5<T> maxpool2(const Tensor5<T> &);
RCNET_INSTANTIATE(float)
RCNET_INSTANTIATE(double)
RCNET_INSTANTIATE(long double)
#undef RCNET_INSTANTIATE

} // namespace rcnet

#include <cmath>

#include "conv_lowering.hpp"
#include "rcnet/ops.hpp"

namespace rcnet {

using detail::CMapR;
using detail::FrameWindow;
using detail::Lowering;
using detail::MapR;
using detail::MatR;

namespace {

template <typename T>
void require_same(const Dims5 &expect, const Tensor5<T> &dy, const char *op) {
  if (dy.dims() != expect)
    throw ShapeError(std::string(op) + " backward: gradient dims " +
                     dy.dims().str() + " do not match output " + expect.str());
}

// db(d) += sum of channel d over a D x P block.
template <typename T>
void accumulate_bias(const T *dy, std::size_t d_count, std::size_t p, T *db) {
  for (std::size_t d = 0; d < d_count; ++d) {
    T s = 0;
    const T *row = dy + d * p;
    for (std::size_t k = 0; k < p; ++k)
      s += row[k];
    db[d] += s;
  }
}

} // namespace

template <typename T>
ConvGrads<T> conv3d_backward(const Tensor5<T> &x, const Tensor5<T> &weight,
                             const ConvGeometry &geom, const Tensor5<T> &dy) {
  const Dims5 &xd = x.dims();
  const Dims5 &wd = weight.dims();
  const FrameWindow fw{xd.c, xd.l, xd.h, xd.w, 0, xd.l};
  const Lowering lw = detail::make_lowering(fw, wd.l, wd.h, wd.w, geom);
  require_same(Dims5{xd.n, wd.n, lw.lo, lw.ho, lw.wo}, dy, "conv3d");
  const std::size_t K = lw.rows(xd.c);
  const std::size_t P = lw.cols();
  const auto Ki = static_cast<Eigen::Index>(K);
  const auto Pi = static_cast<Eigen::Index>(P);
  const auto Di = static_cast<Eigen::Index>(wd.n);

  ConvGrads<T> g{Tensor5<T>(xd), Tensor5<T>(wd), Tensor5<T>(Dims5{wd.n, 1, 1, 1, 1})};
  std::vector<T> cols(K * P);
  const CMapR<T> W(weight.data(), Di, Ki);
  MapR<T> dW(g.dweight.data(), Di, Ki);
  for (std::size_t n = 0; n < xd.n; ++n) {
    const CMapR<T> dY(dy.item(n), Di, Pi);
    detail::im2col(x.item(n), fw, lw, cols.data());
    dW.noalias() += dY * CMapR<T>(cols.data(), Ki, Pi).transpose();
    MapR<T>(cols.data(), Ki, Pi).noalias() = W.transpose() * dY;
    detail::col2im(cols.data(), fw, lw, g.dx.item(n));
    accumulate_bias(dy.item(n), wd.n, P, g.dbias.data());
  }
  return g;
}

template <typename T>
ConvGrads<T> retro_conv_backward(const Tensor5<T> &x, const Tensor5<T> &weight,
                                 std::size_t dilation, const Tensor5<T> &dy) {
  const Dims5 &xd = x.dims();
  const Dims5 &wd = weight.dims();
  if (xd.l < 2)
    throw TemporalError("retro_conv backward: clip length < 2");
  const std::size_t hist_len = xd.l - 1;
  require_same(Dims5{xd.n, wd.n, hist_len, xd.h, xd.w}, dy, "retro_conv");

  ConvGeometry g;
  g.dilation = dilation;
  g.pad_h = dilation * (wd.h - 1) / 2;
  g.pad_w = dilation * (wd.w - 1) / 2;
  const FrameWindow hist{xd.c, xd.l, xd.h, xd.w, 0, hist_len};
  const FrameWindow cur{xd.c, xd.l, xd.h, xd.w, hist_len, 1};
  const Lowering lh = detail::make_lowering(hist, 1, wd.h, wd.w, g);
  const Lowering lc = detail::make_lowering(cur, 1, wd.h, wd.w, g);
  const std::size_t K = lh.rows(xd.c);
  const std::size_t plane = xd.plane();
  const auto Ki = static_cast<Eigen::Index>(K);
  const auto Di = static_cast<Eigen::Index>(wd.n);
  const auto Phi = static_cast<Eigen::Index>(hist_len * plane);
  const auto Pci = static_cast<Eigen::Index>(plane);

  MatR<T> w_hist, w_cur;
  detail::split_retro_weight(weight, w_hist, w_cur);
  MatR<T> dw_hist = MatR<T>::Zero(Di, Ki);
  MatR<T> dw_cur = MatR<T>::Zero(Di, Ki);

  ConvGrads<T> out{Tensor5<T>(xd), Tensor5<T>(wd),
                   Tensor5<T>(Dims5{wd.n, 1, 1, 1, 1})};
  std::vector<T> cols_h(K * hist_len * plane);
  std::vector<T> cols_c(K * plane);
  MatR<T> dsum(Di, Pci);
  for (std::size_t n = 0; n < xd.n; ++n) {
    const CMapR<T> dY(dy.item(n), Di, Phi);
    // Historical half: ordinary per-slice correlation.
    detail::im2col(x.item(n), hist, lh, cols_h.data());
    dw_hist.noalias() += dY * CMapR<T>(cols_h.data(), Ki, Phi).transpose();
    MapR<T>(cols_h.data(), Ki, Phi).noalias() = w_hist.transpose() * dY;
    detail::col2im(cols_h.data(), hist, lh, out.dx.item(n));
    // Current half: the current frame feeds all L-1 slices, so its
    // gradient is driven by the slice-summed output gradient.
    dsum.setZero();
    for (std::size_t d = 0; d < wd.n; ++d) {
      T *acc = dsum.data() + d * plane;
      for (std::size_t l = 0; l < hist_len; ++l) {
        const T *src = dy.plane(n, d, l);
        for (std::size_t k = 0; k < plane; ++k)
          acc[k] += src[k];
      }
    }
    detail::im2col(x.item(n), cur, lc, cols_c.data());
    dw_cur.noalias() += dsum * CMapR<T>(cols_c.data(), Ki, Pci).transpose();
    MapR<T>(cols_c.data(), Ki, Pci).noalias() = w_cur.transpose() * dsum;
    detail::col2im(cols_c.data(), cur, lc, out.dx.item(n));
    accumulate_bias(dsum.data(), wd.n, plane, out.dbias.data());
  }
  const std::size_t k2 = wd.h * wd.w;
  for (std::size_t o = 0; o < wd.n; ++o)
    for (std::size_t c = 0; c < wd.c; ++c) {
      std::copy_n(dw_hist.data() + (o * wd.c + c) * k2, k2,
                  out.dweight.plane(o, c, 0));
      std::copy_n(dw_cur.data() + (o * wd.c + c) * k2, k2,
                  out.dweight.plane(o, c, 1));
    }
  return out;
}

template <typename T>
ConvGrads<T> deconv2x2_backward(const Tensor5<T> &x, const Tensor5<T> &weight,
                                const Tensor5<T> &dy) {
  const Dims5 &xd = x.dims();
  const Dims5 &wd = weight.dims();
  require_same(Dims5{xd.n, wd.n, 1, 2 * xd.h, 2 * xd.w}, dy, "deconv2x2");
  const std::size_t D = wd.n, C = wd.c, plane = xd.plane();
  const auto Ci = static_cast<Eigen::Index>(C);
  const auto Pi = static_cast<Eigen::Index>(plane);
  MatR<T> wg(static_cast<Eigen::Index>(4 * D), Ci);
  for (std::size_t d = 0; d < D; ++d)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t ab = 0; ab < 4; ++ab)
        wg(static_cast<Eigen::Index>(d * 4 + ab), static_cast<Eigen::Index>(c)) =
            weight.plane(d, c, 0)[ab];
  MatR<T> dwg = MatR<T>::Zero(static_cast<Eigen::Index>(4 * D), Ci);
  ConvGrads<T> g{Tensor5<T>(xd), Tensor5<T>(wd),
                 Tensor5<T>(Dims5{D, 1, 1, 1, 1})};
  MatR<T> dz(static_cast<Eigen::Index>(4 * D), Pi);
  for (std::size_t n = 0; n < xd.n; ++n) {
    // Gather the output gradient into (d, a, b) x (i, j) form.
    for (std::size_t d = 0; d < D; ++d) {
      const T *src = dy.plane(n, d, 0);
      T s = 0;
      for (std::size_t ab = 0; ab < 4; ++ab) {
        T *zr = dz.data() + (d * 4 + ab) * plane;
        const std::size_t a = ab / 2, bb = ab % 2;
        for (std::size_t i = 0; i < xd.h; ++i)
          for (std::size_t j = 0; j < xd.w; ++j) {
            const T v = src[(2 * i + a) * (2 * xd.w) + 2 * j + bb];
            zr[i * xd.w + j] = v;
            s += v;
          }
      }
      g.dbias.data()[d] += s;
    }
    const CMapR<T> X(x.item(n), Ci, Pi);
    dwg.noalias() += dz * X.transpose();
    MapR<T>(g.dx.item(n), Ci, Pi).noalias() = wg.transpose() * dz;
  }
  for (std::size_t d = 0; d < D; ++d)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t ab = 0; ab < 4; ++ab)
        g.dweight.plane(d, c, 0)[ab] =
            dwg(static_cast<Eigen::Index>(d * 4 + ab), static_cast<Eigen::Index>(c));
  return g;
}

template <typename T>
Tensor5<T> temporal_avg_pool_backward(const Dims5 &in_dims,
                                      const Tensor5<T> &dy) {
  require_same(Dims5{in_dims.n, in_dims.c, 1, in_dims.h, in_dims.w}, dy,
               "temporal_avg_pool");
  Tensor5<T> dx(in_dims);
  const T inv = T(1) / static_cast<T>(in_dims.l);
  const std::size_t plane = in_dims.plane();
  for (std::size_t n = 0; n < in_dims.n; ++n)
    for (std::size_t c = 0; c < in_dims.c; ++c) {
      const T *src = dy.plane(n, c, 0);
      for (std::size_t l = 0; l < in_dims.l; ++l) {
        T *dst = dx.plane(n, c, l);
        for (std::size_t k = 0; k < plane; ++k)
          dst[k] = src[k] * inv;
      }
    }
  return dx;
}

template <typename T>
Tensor5<T> relu_backward(const Tensor5<T> &x, const Tensor5<T> &dy) {
  require_same(x.dims(), dy, "relu");
  Tensor5<T> dx(x.dims());
  for (std::size_t k = 0; k < x.size(); ++k)
    dx.data()[k] = x.data()[k] > T(0) ? dy.data()[k] : T(0);
  return dx;
}

template <typename T>
Tensor5<T> sigmoid_backward(const Tensor5<T> &y, const Tensor5<T> &dy) {
  require_same(y.dims(), dy, "sigmoid");
  Tensor5<T> dx(y.dims());
  for (std::size_t k = 0; k < y.size(); ++k) {
    const T s = y.data()[k];
    dx.data()[k] = dy.data()[k] * s * (T(1) - s);
  }
  return dx;
}

template <typename T>
Tensor5<T> maxpool2_backward(const Tensor5<T> &x, const Tensor5<T> &dy) {
  const Dims5 &d = x.dims();
  const std::size_t ho = d.h / 2, wo = d.w / 2;
  require_same(Dims5{d.n, d.c, d.l, ho, wo}, dy, "maxpool2");
  Tensor5<T> dx(d);
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t c = 0; c < d.c; ++c)
      for (std::size_t l = 0; l < d.l; ++l) {
        const T *in = x.plane(n, c, l);
        const T *g = dy.plane(n, c, l);
        T *out = dx.plane(n, c, l);
        for (std::size_t i = 0; i < ho; ++i)
          for (std::size_t j = 0; j < wo; ++j) {
            const std::size_t base = 2 * i * d.w + 2 * j;
            const std::size_t cand[4] = {base, base + 1, base + d.w,
                                         base + d.w + 1};
            std::size_t best = cand[0];
            for (std::size_t k = 1; k < 4; ++k)
              if (in[cand[k]] > in[best])
                best = cand[k];
            out[best] += g[i * wo + j];
          }
      }
  return dx;
}

#define RCNET_INSTANTIATE(T)                                                   \
  template ConvGrads<T> conv3d_backward(const Tensor5<T> &, const Tensor5<T> &, \
                                        const ConvGeometry &,                  \
                                        const Tensor5<T> &);                   \
  template ConvGrads<T> retro_conv_backward(                                   \
      const Tensor5<T> &, const Tensor5<T> &, std::size_t, const Tensor5<T> &); \
  template ConvGrads<T> deconv2x2_backward(                                    \
      const Tensor5<T> &, const Tensor5<T> &, const Tensor5<T> &);             \
  template Tensor5<T> temporal_avg_pool_backward(const Dims5 &,                \
                                                 const Tensor5<T> &);          \
  template Tensor5<T> relu_backward(const Tensor5<T> &, const Tensor5<T> &);   \
  template Tensor5<T> sigmoid_backward(const Tensor5<T> &, const Tensor5<T> &); \
  template Tensor5<T> maxpool2_backward(const Tensor5<T> &, const Tensor5<T> &);
RCNET_INSTANTIATE(float)
RCNET_INSTANTIATE(double)
RCNET_INSTANTIATE(long double)
#undef RCNET_INSTANTIATE

} // namespace rcnet

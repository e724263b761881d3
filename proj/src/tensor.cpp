#include "rcnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace rcnet {

std::size_t Dims5::count() const {
  const std::size_t ext[5] = {n, c, l, h, w};
  std::size_t total = 1;
  for (std::size_t e : ext) {
    if (e == 0)
      throw DimensionError("zero extent in dims " + str());
    if (total > std::numeric_limits<std::size_t>::max() / e)
      throw DimensionError("element count overflows for dims " + str());
    total *= e;
  }
  return total;
}

std::string Dims5::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(l) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

std::size_t Mask2::count_ones() const {
  return static_cast<std::size_t>(
      std::count(data.begin(), data.end(), std::uint8_t{1}));
}

namespace {

struct Taps {
  std::size_t lo, hi;
  double frac;
};

std::vector<Taps> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Taps> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t k = 0; k < out; ++k) {
    double src = (static_cast<double>(k) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[k] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

} // namespace

template <typename T>
Tensor5<T> bilinear_resize(const Tensor5<T> &x, std::size_t new_h,
                           std::size_t new_w) {
  const Dims5 &d = x.dims();
  Tensor5<T> out(Dims5{d.n, d.c, d.l, new_h, new_w});
  if (new_h == d.h && new_w == d.w) {
    std::copy(x.data(), x.data() + x.size(), out.data());
    return out;
  }
  const auto ty = bilinear_taps(d.h, new_h);
  const auto tx = bilinear_taps(d.w, new_w);
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t c = 0; c < d.c; ++c)
      for (std::size_t l = 0; l < d.l; ++l) {
        const T *src = x.plane(n, c, l);
        T *dst = out.plane(n, c, l);
        for (std::size_t i = 0; i < new_h; ++i) {
          const T fy = static_cast<T>(ty[i].frac);
          const T *r0 = src + ty[i].lo * d.w;
          const T *r1 = src + ty[i].hi * d.w;
          for (std::size_t j = 0; j < new_w; ++j) {
            const T fx = static_cast<T>(tx[j].frac);
            const T top = r0[tx[j].lo] + fx * (r0[tx[j].hi] - r0[tx[j].lo]);
            const T bot = r1[tx[j].lo] + fx * (r1[tx[j].hi] - r1[tx[j].lo]);
            dst[i * new_w + j] = top + fy * (bot - top);
          }
        }
      }
  return out;
}

template <typename T>
Tensor5<T> concat_channels(const Tensor5<T> &a, const Tensor5<T> &b) {
  const Dims5 &da = a.dims();
  const Dims5 &db = b.dims();
  if (da.n != db.n || da.l != db.l || da.h != db.h || da.w != db.w)
    throw ShapeError("concat_channels: " + da.str() + " vs " + db.str());
  Tensor5<T> out(Dims5{da.n, da.c + db.c, da.l, da.h, da.w});
  for (std::size_t n = 0; n < da.n; ++n) {
    T *dst = out.item(n);
    dst = std::copy(a.item(n), a.item(n) + a.item_size(), dst);
    std::copy(b.item(n), b.item(n) + b.item_size(), dst);
  }
  return out;
}

template <typename T>
Tensor5<T> slice_channels(const Tensor5<T> &x, std::size_t first,
                          std::size_t count) {
  const Dims5 &d = x.dims();
  if (count == 0 || first + count > d.c)
    throw ShapeError("slice_channels out of range for " + d.str());
  Tensor5<T> out(Dims5{d.n, count, d.l, d.h, d.w});
  const std::size_t chan = d.l * d.plane();
  for (std::size_t n = 0; n < d.n; ++n) {
    const T *src = x.item(n) + first * chan;
    std::copy(src, src + count * chan, out.item(n));
  }
  return out;
}

template <typename T>
Tensor5<T> slice_frames(const Tensor5<T> &x, std::size_t first,
                        std::size_t count) {
  const Dims5 &d = x.dims();
  if (count == 0 || first + count > d.l)
    throw ShapeError("slice_frames out of range for " + d.str());
  Tensor5<T> out(Dims5{d.n, d.c, count, d.h, d.w});
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t c = 0; c < d.c; ++c)
      std::copy(x.plane(n, c, first), x.plane(n, c, first) + count * d.plane(),
                out.plane(n, c, 0));
  return out;
}

#define RCNET_INSTANTIATE(T)                                                   \
  template Tensor5<T> bilinear_resize(const Tensor5<T> &, std::size_t,         \
                                      std::size_t);                            \
  template Tensor5<T> concat_channels(const Tensor5<T> &, const Tensor5<T> &); \
  template Tensor5<T> slice_channels(const Tensor5<T> &, std::size_t,          \
                                     std::size_t);                             \
  template Tensor5<T> slice_frames(const Tensor5<T> &, std::size_t,            \
                                   std::size_t);
RCNET_INSTANTIATE(float)
RCNET_INSTANTIATE(double)
RCNET_INSTANTIATE(long double)
#undef RCNET_INSTANTIATE

} // namespace rcnet

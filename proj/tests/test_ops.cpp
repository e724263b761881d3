#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rcnet/ops.hpp"

using namespace rcnet;

namespace {

Tensor5d zero_bias(std::size_t d) { return Tensor5d(Dims5{d, 1, 1, 1, 1}); }

} // namespace

TEST_CASE("conv3d matches the six-loop oracle over random geometries") {
  oracle::Gen g(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t C = g.index(1, 3), D = g.index(1, 3);
    const std::size_t lk = g.index(1, 3), k = 2 * g.index(0, 2) + 1;
    ConvGeometry geom;
    geom.pad_l = g.index(0, 1);
    geom.dilation = g.index(1, 2);
    geom.pad_h = geom.pad_w = g.index(0, 2);
    geom.stride_h = geom.stride_w = g.index(1, 2);
    const std::size_t ext = dilated_extent(k, geom.dilation);
    const std::size_t H = ext + g.index(0, 5), W = ext + g.index(0, 5);
    const std::size_t L = lk + g.index(0, 2);
    const auto x = g.tensor<double>(Dims5{g.index(1, 2), C, L, H, W});
    const auto w = g.tensor<double>(Dims5{D, C, lk, k, k});
    const auto b = g.tensor<double>(Dims5{D, 1, 1, 1, 1});
    const auto y = conv3d(x, w, b, geom);
    const auto ref = oracle::conv3d(x, w, b, geom.pad_l, geom.pad_h, geom.pad_w,
                                    geom.stride_h, geom.dilation);
    REQUIRE(y.dims() == ref.dims());
    CHECK(oracle::max_abs_diff(y, ref) < 1e-12);
  }
}

TEST_CASE("conv3d rejects channel and temporal mismatches") {
  oracle::Gen g(12);
  const auto x = g.tensor<float>(Dims5{1, 2, 2, 5, 5});
  CHECK_THROWS_AS(conv3d(x, g.tensor<float>(Dims5{1, 3, 1, 3, 3}),
                         Tensor5f(Dims5{1, 1, 1, 1, 1}), ConvGeometry::same(3)),
                  ShapeError);
  CHECK_THROWS_AS(conv3d(x, g.tensor<float>(Dims5{1, 2, 3, 3, 3}),
                         Tensor5f(Dims5{1, 1, 1, 1, 1}), ConvGeometry::same(3)),
                  TemporalError);
}

TEST_CASE("retro_conv equals the two-spatial-convolution decomposition") {
  oracle::Gen g(13);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t L = g.index(2, 6), C = g.index(1, 3), D = g.index(1, 4);
    const std::size_t dil = g.index(1, 3), k = g.index(0, 1) ? 3 : 1;
    const auto x = g.tensor<double>(Dims5{g.index(1, 2), C, L, g.index(3, 9), g.index(3, 9)});
    const auto w = g.tensor<double>(Dims5{D, C, 2, k, k});
    const auto b = g.tensor<double>(Dims5{D, 1, 1, 1, 1});
    const auto y = retro_conv(x, w, b, dil);
    CHECK(y.dims() == Dims5{x.dims().n, D, L - 1, x.dims().h, x.dims().w});
    CHECK(oracle::max_abs_diff(y, oracle::retro_decomposition(x, w, b, dil)) < 1e-12);
  }
}

TEST_CASE("retro_conv with antisymmetric kernel zeroes a static clip") {
  oracle::Gen g(14);
  const auto x = g.static_clip<double>(Dims5{2, 3, 5, 7, 7});
  auto w = g.tensor<double>(Dims5{4, 3, 2, 3, 3});
  for (std::size_t d = 0; d < 4; ++d)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t q = 0; q < 3; ++q)
          w(d, c, 1, p, q) = -w(d, c, 0, p, q);
  const auto y = retro_conv(x, w, zero_bias(4), 1);
  for (double v : y.flat())
    CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("retro_conv output slices coincide on a static clip") {
  oracle::Gen g(15);
  const auto x = g.static_clip<float>(Dims5{1, 2, 6, 8, 8});
  const auto w = g.tensor<float>(Dims5{3, 2, 2, 3, 3});
  const auto b = g.tensor<float>(Dims5{3, 1, 1, 1, 1});
  const auto y = retro_conv(x, w, b, 2);
  const auto pooled = temporal_avg_pool(y);
  for (std::size_t l = 0; l < y.dims().l; ++l) {
    const auto s = slice_frames(y, l, 1);
    CHECK(s == slice_frames(y, 0, 1));
    CHECK(oracle::max_abs_diff(s, pooled) < 1e-6);
  }
}

TEST_CASE("retro_conv accepts any clip length with the same kernel") {
  oracle::Gen g(16);
  const auto w = g.tensor<float>(Dims5{2, 1, 2, 3, 3});
  const auto b = g.tensor<float>(Dims5{2, 1, 1, 1, 1});
  for (std::size_t L : {2, 3, 8, 12}) {
    const auto y = retro_conv(g.tensor<float>(Dims5{1, 1, L, 6, 6}), w, b, 1);
    CHECK(y.dims().l == L - 1);
  }
  CHECK_THROWS_AS(retro_conv(g.tensor<float>(Dims5{1, 1, 1, 6, 6}), w, b, 1),
                  TemporalError);
  CHECK_THROWS_AS(retro_conv(g.tensor<float>(Dims5{1, 1, 3, 6, 6}),
                             g.tensor<float>(Dims5{2, 1, 2, 2, 2}), b, 1),
                  ShapeError);
}

TEST_CASE("atrous retro conv: dilation 1 is retro conv, dilation 3 is a zero-inflated 7x7") {
  oracle::Gen g(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = g.tensor<double>(Dims5{1, 2, 4, 12, 11});
    RetroKernel<double> k{g.tensor<double>(Dims5{3, 2, 2, 3, 3}),
                          g.tensor<double>(Dims5{3, 1, 1, 1, 1}), 1};
    CHECK(atrous_retro_conv(x, k) == retro_conv(x, k.weight, k.bias, 1));
    k.dilation = 3;
    const auto wide = oracle::zero_inflate(k.weight, 3);
    CHECK(wide.dims().h == 7);
    const auto y = atrous_retro_conv(x, k);
    const auto ref = retro_conv(x, wide, k.bias, 1);
    CHECK(oracle::max_abs_diff(y, ref) < 1e-12);
  }
}

TEST_CASE("temporal_avg_pool averages over all slices") {
  oracle::Gen g(18);
  const auto x = g.tensor<double>(Dims5{2, 3, 4, 3, 3});
  const auto y = temporal_avg_pool(x);
  CHECK(y.dims() == Dims5{2, 3, 1, 3, 3});
  const double expect = (x(1, 2, 0, 1, 2) + x(1, 2, 1, 1, 2) + x(1, 2, 2, 1, 2) +
                         x(1, 2, 3, 1, 2)) / 4.0;
  CHECK(y(1, 2, 0, 1, 2) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("deconv2x2 matches the scatter oracle") {
  oracle::Gen g(19);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = g.tensor<double>(Dims5{2, g.index(1, 4), 1, g.index(1, 5), g.index(1, 5)});
    const auto w = g.tensor<double>(Dims5{g.index(1, 3), x.dims().c, 1, 2, 2});
    const auto b = g.tensor<double>(Dims5{w.dims().n, 1, 1, 1, 1});
    CHECK(oracle::max_abs_diff(deconv2x2(x, w, b), oracle::deconv2x2(x, w, b)) < 1e-12);
  }
}

TEST_CASE("pointwise ops and max-pool") {
  oracle::Gen g(20);
  const auto x = g.tensor<double>(Dims5{1, 2, 2, 6, 4}, -3, 3);
  const auto r = relu(x);
  const auto s = sigmoid(x);
  for (std::size_t k = 0; k < x.size(); ++k) {
    CHECK(r.data()[k] == std::max(0.0, x.data()[k]));
    CHECK(s.data()[k] == doctest::Approx(1.0 / (1.0 + std::exp(-x.data()[k]))));
  }
  CHECK(maxpool2(x) == oracle::maxpool2(x));
  CHECK_THROWS_AS(maxpool2(g.tensor<double>(Dims5{1, 1, 1, 5, 4})), ShapeError);
}

TEST_CASE("ArppConfig validation") {
  CHECK_NOTHROW((ArppConfig{{1, 3}, 64}.validate()));
  CHECK(ArppConfig{{1, 3}, 64}.branch_filters() == 32);
  CHECK_THROWS_AS((ArppConfig{{1, 3, 5}, 64}.validate()), ConfigError);
  CHECK_THROWS_AS((ArppConfig{{1, 1}, 64}.validate()), ConfigError);
  CHECK_THROWS_AS((ArppConfig{{}, 64}.validate()), ConfigError);
  CHECK_THROWS_AS((ArppConfig{{0, 2}, 64}.validate()), ConfigError);
}

TEST_CASE("arpp concatenates retro modules built at each dilation") {
  oracle::Gen g(21);
  const ArppConfig cfg{{1, 3}, 4};
  std::vector<RetroModule<double>> branches;
  for (std::size_t d : cfg.dilations) {
    RetroModule<double> m;
    m.retro = {g.tensor<double>(Dims5{2, 3, 2, 3, 3}), g.tensor<double>(Dims5{2, 1, 1, 1, 1}), d};
    m.spatial_a = {g.tensor<double>(Dims5{2, 2, 1, 3, 3}), g.tensor<double>(Dims5{2, 1, 1, 1, 1}),
                   ConvGeometry::same(3)};
    m.spatial_b = {g.tensor<double>(Dims5{2, 2, 1, 3, 3}), g.tensor<double>(Dims5{2, 1, 1, 1, 1}),
                   ConvGeometry::same(3)};
    branches.push_back(m);
  }
  const auto x = g.tensor<double>(Dims5{1, 3, 4, 8, 8});
  const auto y = arpp<double>(x, cfg, branches);
  CHECK(y.dims() == Dims5{1, 4, 1, 8, 8});

  // Hand composition of the first branch.
  auto h = relu(retro_conv(x, branches[0].retro));
  h = relu(conv3d(h, branches[0].spatial_a));
  h = relu(conv3d(h, branches[0].spatial_b));
  h = temporal_avg_pool(h);
  CHECK(oracle::max_abs_diff(slice_channels(y, 0, 2), h) < 1e-12);
  CHECK(slice_channels(y, 2, 2) == retro_module(x, branches[1]));
}

// ---------------------------------------------------------------------------
// Backward rules

TEST_CASE("conv3d backward is the adjoint of the forward map") {
  oracle::Gen g(22);
  for (int trial = 0; trial < 10; ++trial) {
    ConvGeometry geom = ConvGeometry::same(3, g.index(1, 2));
    geom.pad_l = g.index(0, 1);
    const auto x = g.tensor<double>(Dims5{2, 2, 3, 7, 6});
    const auto w = g.tensor<double>(Dims5{3, 2, 2, 3, 3});
    const auto y = conv3d(x, w, zero_bias(3), geom);
    const auto dy = g.tensor<double>(y.dims());
    const auto gr = conv3d_backward(x, w, geom, dy);
    CHECK(oracle::dot(y, dy) == doctest::Approx(oracle::dot(x, gr.dx)).epsilon(1e-12));
    CHECK(oracle::dot(y, dy) == doctest::Approx(oracle::dot(w, gr.dweight)).epsilon(1e-12));
    double sum = 0.0;
    for (std::size_t k = 0; k < dy.size(); ++k)
      sum += dy.data()[k] * (((k / y.dims().plane() / y.dims().l) % 3) == 1 ? 1.0 : 0.0);
    CHECK(gr.dbias.data()[1] == doctest::Approx(sum).epsilon(1e-12));
  }
}

TEST_CASE("retro_conv backward routes the current-frame half summed over slices") {
  oracle::Gen g(23);
  for (std::size_t dil : {1, 2}) {
    const std::size_t L = 4, C = 2, D = 3, H = 6, W = 7;
    const auto x = g.tensor<double>(Dims5{1, C, L, H, W});
    const auto w = g.tensor<double>(Dims5{D, C, 2, 3, 3});
    const auto dy = g.tensor<double>(Dims5{1, D, L - 1, H, W});
    const auto gr = retro_conv_backward(x, w, dil, dy);
    const auto y = retro_conv(x, w, zero_bias(D), dil);
    CHECK(oracle::dot(y, dy) == doctest::Approx(oracle::dot(x, gr.dx)).epsilon(1e-12));
    CHECK(oracle::dot(y, dy) == doctest::Approx(oracle::dot(w, gr.dweight)).epsilon(1e-12));

    const long pad = static_cast<long>(dil);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) {
          double cur = 0.0;
          for (std::size_t l = 0; l + 1 < L; ++l)
            for (std::size_t d = 0; d < D; ++d)
              for (std::size_t p = 0; p < 3; ++p)
                for (std::size_t q = 0; q < 3; ++q) {
                  const long oi = static_cast<long>(i) + pad - static_cast<long>(p * dil);
                  const long oj = static_cast<long>(j) + pad - static_cast<long>(q * dil);
                  if (oi < 0 || oj < 0 || oi >= static_cast<long>(H) || oj >= static_cast<long>(W))
                    continue;
                  cur += w(d, c, 1, p, q) * dy(0, d, l, static_cast<std::size_t>(oi),
                                               static_cast<std::size_t>(oj));
                }
          CHECK(gr.dx(0, c, L - 1, i, j) == doctest::Approx(cur).epsilon(1e-12));
        }
  }
}

TEST_CASE("deconv2x2 backward is the adjoint of the forward map") {
  oracle::Gen g(24);
  const auto x = g.tensor<double>(Dims5{2, 3, 1, 4, 5});
  const auto w = g.tensor<double>(Dims5{2, 3, 1, 2, 2});
  const auto y = deconv2x2(x, w, zero_bias(2));
  const auto dy = g.tensor<double>(y.dims());
  const auto gr = deconv2x2_backward(x, w, dy);
  CHECK(oracle::dot(y, dy) == doctest::Approx(oracle::dot(x, gr.dx)).epsilon(1e-12));
  CHECK(oracle::dot(y, dy) == doctest::Approx(oracle::dot(w, gr.dweight)).epsilon(1e-12));
}

TEST_CASE("temporal_avg_pool backward spreads gradient uniformly") {
  const Dims5 in{1, 1, 2, 3, 3};
  const Tensor5d dy(Dims5{1, 1, 1, 3, 3}, 1.0 / 9.0);
  const auto dx = temporal_avg_pool_backward(in, dy);
  for (double v : dx.flat())
    CHECK(v == doctest::Approx(0.5 / 9.0));
}

TEST_CASE("relu, sigmoid and maxpool backward") {
  Tensor5d x(Dims5{1, 1, 1, 2, 2});
  x.data()[0] = -1.0;
  x.data()[1] = 0.0;
  x.data()[2] = 2.0;
  x.data()[3] = 2.0;
  const Tensor5d ones(x.dims(), 1.0);
  const auto dr = relu_backward(x, ones);
  CHECK(dr.data()[0] == 0.0);
  CHECK(dr.data()[1] == 0.0); // subgradient at the kink
  CHECK(dr.data()[2] == 1.0);

  const auto y = sigmoid(x);
  const auto ds = sigmoid_backward(y, ones);
  CHECK(ds.data()[2] == doctest::Approx(y.data()[2] * (1 - y.data()[2])));

  // Tie between positions 2 and 3: the first in row-major order wins.
  const auto dm = maxpool2_backward(x, Tensor5d(Dims5{1, 1, 1, 1, 1}, 5.0));
  CHECK(dm.data()[2] == 5.0);
  CHECK(dm.data()[3] == 0.0);
  CHECK(dm.data()[0] == 0.0);
}

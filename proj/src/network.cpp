#include "rcnet/network.hpp"

#include <cmath>
#include <random>

namespace rcnet {

namespace {

template <typename T> class Builder {
public:
  Builder(Graph<T> &g, std::uint64_t seed) : g_(g), rng_(seed) {}

  std::size_t conv(const std::string &name, std::size_t in, std::size_t c_in,
                   std::size_t c_out, std::size_t lk, std::size_t k,
                   ConvGeometry geom) {
    const auto [w, b] = add_params(name, Dims5{c_out, c_in, lk, k, k});
    return g_.add_conv3d(name, in, w, b, geom);
  }

  std::size_t retro(const std::string &name, std::size_t in, std::size_t c_in,
                    std::size_t c_out, std::size_t dilation) {
    const auto [w, b] = add_params(name, Dims5{c_out, c_in, 2, 3, 3});
    return g_.add_retro_conv(name, in, w, b, dilation);
  }

  std::size_t deconv(const std::string &name, std::size_t in, std::size_t c_in,
                     std::size_t c_out) {
    const auto [w, b] = add_params(name, Dims5{c_out, c_in, 1, 2, 2});
    return g_.add_deconv2x2(name, in, w, b);
  }

  Graph<T> &graph() { return g_; }

private:
  std::pair<std::size_t, std::size_t> add_params(const std::string &name,
                                                 const Dims5 &wd) {
    const std::size_t taps = wd.l * wd.h * wd.w;
    const double bound =
        std::sqrt(6.0 / static_cast<double>((wd.c + wd.n) * taps));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor5<T> w(wd);
    for (T &v : w.flat())
      v = static_cast<T>(dist(rng_));
    const std::size_t wi = g_.params().add(name + ".w", std::move(w));
    const std::size_t bi =
        g_.params().add(name + ".b", Tensor5<T>(Dims5{wd.n, 1, 1, 1, 1}));
    return {wi, bi};
  }

  Graph<T> &g_;
  std::mt19937_64 rng_;
};

// Retro module: retro conv -> ReLU -> 2 x (3x3 spatial conv -> ReLU) ->
// temporal mean. Output has `width` channels and l = 1.
template <typename T>
std::size_t retro_module(Builder<T> &b, const std::string &p, std::size_t in,
                         std::size_t c_in, std::size_t width,
                         std::size_t dilation) {
  Graph<T> &g = b.graph();
  std::size_t x = b.retro(p + ".retro", in, c_in, width, dilation);
  x = g.add_relu(p + ".retro.relu", x);
  x = b.conv(p + ".spatial_a", x, width, width, 1, 3, ConvGeometry::same(3));
  x = g.add_relu(p + ".spatial_a.relu", x);
  x = b.conv(p + ".spatial_b", x, width, width, 1, 3, ConvGeometry::same(3));
  x = g.add_relu(p + ".spatial_b.relu", x);
  return g.add_temporal_avg_pool(p + ".tavg", x);
}

template <typename T>
std::size_t change_module(Builder<T> &b, const ModelConfig &cfg,
                          const std::string &p, std::size_t in,
                          std::size_t c_in, std::size_t width) {
  Graph<T> &g = b.graph();
  switch (cfg.change_module) {
  case ChangeModule::retro:
    return retro_module(b, p, in, c_in, width, 1);
  case ChangeModule::arpp: {
    const std::size_t per = width / cfg.arpp_dilations.size();
    std::vector<std::size_t> parts;
    for (std::size_t d : cfg.arpp_dilations)
      parts.push_back(retro_module(b, p + ".d" + std::to_string(d), in, c_in,
                                   per, d));
    return parts.size() == 1 ? parts.front() : g.add_concat(p + ".concat", parts);
  }
  case ChangeModule::conv3d_pair: {
    // Two 3x3x3 convolutions, one frame of temporal padding each.
    ConvGeometry geom = ConvGeometry::same(3);
    geom.pad_l = 1;
    std::size_t x = b.conv(p + ".conv3d_a", in, c_in, width, 3, 3, geom);
    x = g.add_relu(p + ".conv3d_a.relu", x);
    x = b.conv(p + ".conv3d_b", x, width, width, 3, 3, geom);
    x = g.add_relu(p + ".conv3d_b.relu", x);
    return g.add_temporal_avg_pool(p + ".tavg", x);
  }
  }
  throw ConfigError("unknown change module");
}

} // namespace

template <typename T>
Graph<T> build_graph(const ModelConfig &cfg, std::uint64_t seed) {
  cfg.validate();
  Graph<T> g(InputSignature{cfg.input_channels, 2, cfg.spatial_multiple()});
  Builder<T> b(g, seed);

  std::vector<std::size_t> taps;
  if (cfg.backbone == Backbone::raw_input) {
    taps.push_back(change_module(b, cfg, "change0", g.input_node(),
                                 cfg.input_channels, cfg.change_widths[0]));
  } else {
    const std::size_t blocks =
        cfg.backbone == Backbone::stacked_k_blocks ? cfg.blocks_per_stage : 1;
    std::size_t x = g.input_node();
    std::size_t c = cfg.input_channels;
    for (std::size_t s = 0; s < cfg.stages(); ++s) {
      const std::string sp = "stage" + std::to_string(s);
      if (s > 0)
        x = g.add_maxpool2(sp + ".pool", x);
      for (std::size_t k = 0; k < blocks; ++k) {
        const std::string cp = sp + ".conv" + std::to_string(k);
        x = b.conv(cp, x, c, cfg.backbone_widths[s], 1, 3, ConvGeometry::same(3));
        x = g.add_relu(cp + ".relu", x);
        c = cfg.backbone_widths[s];
      }
      taps.push_back(change_module(b, cfg, "change" + std::to_string(s), x, c,
                                   cfg.change_widths[s]));
    }
  }

  // Top-down fusion: upsample the coarser map, concatenate with the finer
  // change map, project back to the finer level's width.
  std::size_t f = taps.back();
  std::size_t cf = cfg.change_widths[taps.size() - 1];
  for (std::size_t s = taps.size() - 1; s-- > 0;) {
    const std::string dp = "decoder" + std::to_string(s);
    const std::size_t w = cfg.change_widths[s];
    const std::size_t up = b.deconv(dp + ".deconv", f, cf, w);
    const std::size_t cat = g.add_concat(dp + ".concat", {up, taps[s]});
    f = b.conv(dp + ".fuse", cat, 2 * w, w, 1, 3, ConvGeometry::same(3));
    f = g.add_relu(dp + ".fuse.relu", f);
    cf = w;
  }
  f = b.conv("head", f, cf, 1, 1, 1, ConvGeometry{});
  g.add_sigmoid("head.sigmoid", f);
  return g;
}

template Graph<float> build_graph<float>(const ModelConfig &, std::uint64_t);
template Graph<double> build_graph<double>(const ModelConfig &, std::uint64_t);

Model build_model(const ModelConfig &cfg, std::uint64_t seed) {
  Model m;
  m.config = cfg;
  m.seed = seed;
  m.graph = build_graph<float>(cfg, seed);
  return m;
}

namespace {

void check_clip(const Model &m, const Tensor5f &clip) {
  const Dims5 &d = clip.dims();
  if (clip.empty())
    throw ShapeError("infer: empty clip");
  if (d.l < 2)
    throw TemporalError("infer: clip length " + std::to_string(d.l) +
                        " < 2");
  if (d.c != m.config.input_channels)
    throw ShapeError("infer: clip has " + std::to_string(d.c) +
                     " channels, model expects " +
                     std::to_string(m.config.input_channels));
  const std::size_t mult = m.config.spatial_multiple();
  if (d.h % mult != 0 || d.w % mult != 0)
    throw ShapeError("infer: spatial dims " + std::to_string(d.h) + "x" +
                     std::to_string(d.w) + " not divisible by " +
                     std::to_string(mult));
}

} // namespace

Tensor5f infer(const Model &m, const Tensor5f &clip) {
  check_clip(m, clip);
  return m.graph.run(clip);
}

Tensor5f infer_multiscale(const Model &m, const Tensor5f &clip,
                          const std::vector<double> &scales) {
  if (scales.empty())
    throw ConfigError("infer_multiscale: empty scale list");
  const Dims5 &d = clip.dims();
  Tensor5f sum;
  for (double s : scales) {
    if (!(s > 0.0))
      throw ConfigError("infer_multiscale: scale must be positive");
    const auto h = static_cast<std::size_t>(std::lround(static_cast<double>(d.h) * s));
    const auto w = static_cast<std::size_t>(std::lround(static_cast<double>(d.w) * s));
    if (h == 0 || w == 0)
      throw ShapeError("infer_multiscale: scale " + std::to_string(s) +
                       " collapses the clip");
    Tensor5f p = (h == d.h && w == d.w) ? infer(m, clip)
                                        : infer(m, bilinear_resize(clip, h, w));
    if (h != d.h || w != d.w)
      p = bilinear_resize(p, d.h, d.w);
    if (sum.empty()) {
      sum = std::move(p);
    } else {
      for (std::size_t k = 0; k < sum.size(); ++k)
        sum.data()[k] += p.data()[k];
    }
  }
  const float inv = 1.0f / static_cast<float>(scales.size());
  if (scales.size() > 1)
    for (float &v : sum.flat())
      v *= inv;
  return sum;
}

} // namespace rcnet

#include "rcnet/gradcheck_suite.hpp"

#include <functional>
#include <random>
#include <sstream>

#include "rcnet/network.hpp"

namespace rcnet {

ModelConfig SuiteOptions::small_check_model() {
  ModelConfig cfg;
  cfg.backbone_widths = {4, 4, 6};
  cfg.change_widths = {4, 4, 6};
  cfg.arpp_dilations = {1, 3};
  cfg.decoder_levels = 3;
  return cfg;
}

bool SuiteReport::passed() const { return failed().empty(); }

std::vector<std::string> SuiteReport::failed() const {
  std::vector<std::string> out;
  for (const auto &c : cases)
    if (!c.report.passed())
      out.push_back(c.name);
  return out;
}

std::string SuiteReport::text() const {
  std::ostringstream os;
  char buf[160];
  for (const auto &c : cases) {
    std::snprintf(buf, sizeof buf, "[%s] %-18s max_rel=%.3e skipped=%zu\n",
                  c.report.passed() ? "PASS" : "FAIL", c.name.c_str(),
                  c.report.max_rel(), c.report.skipped());
    os << buf;
    std::istringstream lines(c.report.text());
    for (std::string line; std::getline(lines, line);)
      os << "    " << line << "\n";
  }
  os << (passed() ? "all cases passed\n" : "gradient check FAILED\n");
  return os.str();
}

namespace {

class CaseBuilder {
public:
  CaseBuilder(std::uint64_t seed, InputSignature sig)
      : rng_(seed), g_(sig) {}

  Tensor5d random(const Dims5 &d, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor5d t(d);
    for (double &v : t.flat())
      v = u(rng_);
    return t;
  }

  std::pair<std::size_t, std::size_t> params(const std::string &name,
                                             const Dims5 &wd) {
    const std::size_t w = g_.params().add(name + ".w", random(wd, -0.5, 0.5));
    const std::size_t b = g_.params().add(
        name + ".b", random(Dims5{wd.n, 1, 1, 1, 1}, -0.1, 0.1));
    return {w, b};
  }

  std::size_t conv(const std::string &name, std::size_t in, const Dims5 &wd,
                   const ConvGeometry &geom) {
    const auto [w, b] = params(name, wd);
    return g_.add_conv3d(name, in, w, b, geom);
  }

  std::size_t retro(const std::string &name, std::size_t in, std::size_t c_in,
                    std::size_t c_out, std::size_t dilation) {
    const auto [w, b] = params(name, Dims5{c_out, c_in, 2, 3, 3});
    return g_.add_retro_conv(name, in, w, b, dilation);
  }

  Graph<double> &graph() { return g_; }

private:
  std::mt19937_64 rng_;
  Graph<double> g_;
};

struct CaseSpec {
  std::string name;
  std::function<void(CaseBuilder &)> build;
  Dims5 input;
  double lo = -1.0, hi = 1.0;
};

std::vector<CaseSpec> case_specs() {
  std::vector<CaseSpec> specs;
  specs.push_back({"conv3d",
                   [](CaseBuilder &b) {
                     ConvGeometry geom = ConvGeometry::same(3);
                     geom.pad_l = 1;
                     b.conv("conv", 0, Dims5{3, 2, 3, 3, 3}, geom);
                   },
                   Dims5{2, 2, 3, 6, 6}});
  specs.push_back({"retro_conv",
                   [](CaseBuilder &b) { b.retro("retro", 0, 2, 3, 1); },
                   Dims5{2, 2, 4, 6, 6}});
  specs.push_back({"atrous_retro_conv",
                   [](CaseBuilder &b) { b.retro("atrous", 0, 2, 3, 2); },
                   Dims5{1, 2, 3, 8, 8}});
  specs.push_back({"temporal_avg_pool",
                   [](CaseBuilder &b) { b.graph().add_temporal_avg_pool("tavg", 0); },
                   Dims5{2, 3, 4, 5, 5}});
  specs.push_back(
      {"arpp",
       [](CaseBuilder &b) {
         Graph<double> &g = b.graph();
         std::vector<std::size_t> parts;
         for (std::size_t d : {1, 3}) {
           const std::string p = "arpp.d" + std::to_string(d);
           std::size_t x = b.retro(p + ".retro", 0, 2, 2, d);
           x = g.add_relu(p + ".retro.relu", x);
           x = b.conv(p + ".spatial_a", x, Dims5{2, 2, 1, 3, 3},
                      ConvGeometry::same(3));
           x = g.add_relu(p + ".spatial_a.relu", x);
           x = b.conv(p + ".spatial_b", x, Dims5{2, 2, 1, 3, 3},
                      ConvGeometry::same(3));
           x = g.add_relu(p + ".spatial_b.relu", x);
           parts.push_back(g.add_temporal_avg_pool(p + ".tavg", x));
         }
         g.add_concat("arpp.concat", parts);
       },
       Dims5{1, 2, 4, 8, 8}});
  specs.push_back({"deconv2x2",
                   [](CaseBuilder &b) {
                     const auto [w, bias] = b.params("deconv", Dims5{2, 3, 1, 2, 2});
                     b.graph().add_deconv2x2("deconv", 0, w, bias);
                   },
                   Dims5{2, 3, 1, 3, 3}});
  specs.push_back({"relu",
                   [](CaseBuilder &b) { b.graph().add_relu("relu", 0); },
                   Dims5{2, 2, 2, 4, 4}});
  specs.push_back({"sigmoid",
                   [](CaseBuilder &b) { b.graph().add_sigmoid("sigmoid", 0); },
                   Dims5{2, 2, 2, 4, 4}, -3.0, 3.0});
  specs.push_back({"maxpool2",
                   [](CaseBuilder &b) { b.graph().add_maxpool2("pool", 0); },
                   Dims5{1, 2, 2, 6, 6}});
  specs.push_back({"concat_channels",
                   [](CaseBuilder &b) {
                     Graph<double> &g = b.graph();
                     const std::size_t r = g.add_relu("relu", 0);
                     g.add_concat("concat", {0, r, 0});
                   },
                   Dims5{1, 2, 2, 4, 4}});
  return specs;
}

} // namespace

std::vector<std::string> suite_case_names() {
  std::vector<std::string> out;
  for (const auto &s : case_specs())
    out.push_back(s.name);
  out.push_back("model");
  return out;
}

SuiteReport run_gradcheck_suite(const SuiteOptions &opts) {
  SuiteReport rep;
  std::uint64_t seed = opts.seed;
  for (const auto &spec : case_specs()) {
    CaseBuilder b(++seed, InputSignature{spec.input.c, 1, 1});
    spec.build(b);
    const Tensor5d x = b.random(spec.input, spec.lo, spec.hi);
    b.graph().inject_backward_fault(opts.fault);
    GradCheckOptions co = opts.check;
    co.seed = seed;
    rep.cases.push_back({spec.name, grad_check(b.graph(), x, co)});
  }

  // Biases are redrawn from [0, 0.2].
  Graph<double> g = build_graph<double>(opts.model, ++seed);
  g.inject_backward_fault(opts.fault);
  CaseBuilder inputs(++seed, InputSignature{});
  for (std::size_t p = 0; p < g.params().size(); ++p)
    if (g.params()[p].dims().c == 1 && g.params().name(p).ends_with(".b"))
      g.params()[p] = inputs.random(g.params()[p].dims(), 0.0, 0.2);
  const std::size_t m = 2 * opts.model.spatial_multiple();
  const Tensor5d x = inputs.random(
      Dims5{1, opts.model.input_channels, 4, m, m}, 0.0, 1.0);
  GradCheckOptions co = opts.check;
  co.seed = seed;
  rep.cases.push_back({"model", grad_check(g, x, co)});
  return rep;
}

} // namespace rcnet

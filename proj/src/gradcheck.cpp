#include "rcnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace rcnet {

bool GradCheckReport::passed() const { return max_rel() <= tolerance; }

double GradCheckReport::max_rel() const {
  double m = 0.0;
  for (const auto &t : tensors)
    m = std::max(m, t.max_rel);
  return m;
}

std::size_t GradCheckReport::skipped() const {
  std::size_t s = 0;
  for (const auto &t : tensors)
    s += t.skipped;
  return s;
}

std::string GradCheckReport::text() const {
  std::ostringstream os;
  char buf[256];
  for (const auto &t : tensors) {
    std::snprintf(buf, sizeof buf,
                  "%-40s checked=%zu skipped=%zu max_rel=%.3e mean_rel=%.3e %s\n",
                  t.name.c_str(), t.checked, t.skipped, t.max_rel, t.mean_rel,
                  t.max_rel <= tolerance ? "PASS" : "FAIL");
    os << buf;
  }
  return os.str();
}

double relative_error(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

namespace {

using Wide = long double;

Wide mean_output(const Graph<Wide> &g, const Trace<Wide> &tr) {
  const Tensor5<Wide> &y = tr.outputs[g.output_node()];
  Wide s = 0.0;
  for (Wide v : y.flat())
    s += v;
  return s / static_cast<Wide>(y.size());
}

// True when the two runs disagree on any ReLU gate or max-pool winner, or a
// ReLU input moved while sitting inside the kink band.
bool crosses_kink(const Graph<Wide> &g, const Trace<Wide> &a,
                  const Trace<Wide> &b, Wide band) {
  const auto &nodes = g.nodes();
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const Node &n = nodes[k];
    if (n.kind != OpKind::relu && n.kind != OpKind::maxpool2)
      continue;
    const Tensor5<Wide> &xa = a.outputs[n.inputs[0]];
    const Tensor5<Wide> &xb = b.outputs[n.inputs[0]];
    if (n.kind == OpKind::relu) {
      for (std::size_t q = 0; q < xa.size(); ++q) {
        const Wide va = xa.data()[q], vb = xb.data()[q];
        if ((va > 0.0) != (vb > 0.0))
          return true;
        if (va != vb && (std::abs(va) <= band || std::abs(vb) <= band))
          return true;
      }
    } else {
      const Dims5 &d = xa.dims();
      for (std::size_t n0 = 0; n0 < d.n; ++n0)
        for (std::size_t c = 0; c < d.c; ++c)
          for (std::size_t l = 0; l < d.l; ++l) {
            const Wide *pa = xa.plane(n0, c, l);
            const Wide *pb = xb.plane(n0, c, l);
            for (std::size_t i = 0; i + 1 < d.h; i += 2)
              for (std::size_t j = 0; j + 1 < d.w; j += 2) {
                const std::size_t base = i * d.w + j;
                const std::size_t cand[4] = {base, base + 1, base + d.w,
                                             base + d.w + 1};
                std::size_t ba = cand[0], bb = cand[0];
                for (std::size_t q = 1; q < 4; ++q) {
                  if (pa[cand[q]] > pa[ba])
                    ba = cand[q];
                  if (pb[cand[q]] > pb[bb])
                    bb = cand[q];
                }
                if (ba != bb)
                  return true;
              }
          }
    }
  }
  return false;
}

std::vector<std::size_t> pick_coords(std::size_t size, std::size_t want,
                                     std::mt19937_64 &rng) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  if (size <= want)
    return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(want);
  std::sort(idx.begin(), idx.end());
  return idx;
}

} // namespace

GradCheckReport grad_check(const Graph<double> &graph, const Tensor5d &input,
                           const GradCheckOptions &opts) {
  GradCheckReport report;
  report.tolerance = opts.tolerance;
  std::mt19937_64 rng(opts.seed);

  const Trace<double> base = graph.forward(input);
  const Tensor5d &y = base.outputs[graph.output_node()];
  const Tensor5d dy(y.dims(), 1.0 / static_cast<double>(y.size()));
  const GradStore<double> analytic = graph.backward(base, dy);

  // Finite differences run on an extended-precision copy.
  Graph<Wide> wide = graph.cast<Wide>();
  Tensor5<Wide> wide_input = input.cast<Wide>();

  // Perturbs one coordinate of `target` and returns the central difference,
  // or NaN if the step crosses a kink.
  auto probe = [&](Wide &target) {
    const Wide saved = target;
    const Wide eps = opts.epsilon;
    target = saved + eps;
    const Trace<Wide> plus = wide.forward(wide_input);
    target = saved - eps;
    const Trace<Wide> minus = wide.forward(wide_input);
    target = saved;
    if (crosses_kink(wide, plus, minus, opts.kink_band))
      return std::nan("");
    return static_cast<double>(
        (mean_output(wide, plus) - mean_output(wide, minus)) / (2 * eps));
  };

  auto check_tensor = [&](const std::string &name, Tensor5<Wide> &values,
                          const Tensor5d &grad) {
    TensorCheck tc;
    tc.name = name;
    double sum = 0.0;
    for (std::size_t q : pick_coords(values.size(), opts.samples_per_tensor, rng)) {
      const double numeric = probe(values.data()[q]);
      if (std::isnan(numeric)) {
        ++tc.skipped;
        continue;
      }
      const double rel = relative_error(grad.data()[q], numeric);
      tc.max_rel = std::max(tc.max_rel, rel);
      sum += rel;
      ++tc.checked;
    }
    tc.mean_rel = tc.checked ? sum / static_cast<double>(tc.checked) : 0.0;
    report.tensors.push_back(tc);
  };

  for (std::size_t p = 0; p < wide.params().size(); ++p)
    check_tensor(wide.params().name(p), wide.params()[p], analytic.grads[p]);
  if (opts.check_input)
    check_tensor("input", wide_input, analytic.input);
  return report;
}

} // namespace rcnet

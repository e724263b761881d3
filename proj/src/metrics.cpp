#include "rcnet/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace rcnet {

EvalCounts confusion(const Tensor5f &pred, const Mask2 &mask, double threshold) {
  const Dims5 &d = pred.dims();
  if (d.c != 1 || d.l != 1 || d.n != mask.n || d.h != mask.h || d.w != mask.w)
    throw ShapeError("confusion: prediction " + d.str() +
                     " does not match mask dims");
  EvalCounts c;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const bool p = pred.data()[k] >= threshold;
    const bool y = mask.data[k] != 0;
    if (p && y)
      ++c.tp;
    else if (p)
      ++c.fp;
    else if (y)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

namespace {
double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
} // namespace

Prf prf(const EvalCounts &c) {
  Prf r;
  r.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  r.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  r.f_measure = ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
  return r;
}

std::string EvalReport::header() const {
  std::ostringstream os;
  os << "# aggregation: pixel counts summed per scenario (not mean of per-clip F)"
     << "; threshold " << kDefaultThreshold << "; 0/0 := 0\n# scales:";
  for (double s : scales)
    os << ' ' << s;
  os << "\n# evaluated " << evaluated << " samples, skipped " << skipped << "\n";
  return os.str();
}

std::string EvalReport::text() const {
  std::ostringstream os;
  os << header();
  std::size_t width = 8;
  for (const auto &[tag, c] : per_scenario)
    width = std::max(width, tag.size());
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %8s %8s %8s\n", static_cast<int>(width),
                "scenario", "P", "R", "F");
  os << buf;
  auto row = [&](const std::string &tag, const EvalCounts &c) {
    const Prf m = prf(c);
    std::snprintf(buf, sizeof buf, "%-*s %8.4f %8.4f %8.4f\n",
                  static_cast<int>(width), tag.c_str(), m.precision, m.recall,
                  m.f_measure);
    os << buf;
  };
  for (const auto &[tag, c] : per_scenario)
    row(tag, c);
  row("Average", overall);
  for (const auto &w : warnings)
    os << "# warning: " << w << "\n";
  return os.str();
}

std::string EvalReport::json() const {
  using nlohmann::json;
  auto entry = [](const EvalCounts &c) {
    const Prf m = prf(c);
    return json{{"tp", c.tp},           {"fp", c.fp},         {"fn", c.fn},
                {"tn", c.tn},           {"precision", m.precision},
                {"recall", m.recall},   {"f_measure", m.f_measure}};
  };
  json j;
  j["aggregation"] = "count";
  j["threshold"] = kDefaultThreshold;
  j["zero_over_zero"] = 0;
  j["scales"] = scales;
  j["evaluated"] = evaluated;
  j["skipped"] = skipped;
  j["warnings"] = warnings;
  json per = json::object();
  for (const auto &[tag, c] : per_scenario)
    per[tag] = entry(c);
  j["scenarios"] = per;
  j["average"] = entry(overall);
  return j.dump(2) + "\n";
}

EvalReport evaluate(const Model &m, std::span<const ClipSample> corpus,
                    const std::vector<double> &scales, std::size_t workers) {
  if (corpus.empty())
    throw ConfigError("evaluate: corpus is empty");
  if (scales.empty())
    throw ConfigError("evaluate: no scales given");
  std::vector<EvalCounts> counts(corpus.size());
  std::vector<std::string> errors(corpus.size());
  auto run = [&](std::size_t first, std::size_t stride) {
    for (std::size_t k = first; k < corpus.size(); k += stride) {
      try {
        const Tensor5f p = infer_multiscale(m, corpus[k].clip, scales);
        counts[k] = confusion(p, corpus[k].mask);
      } catch (const Error &e) {
        errors[k] = e.what();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, corpus.size());
  if (workers == 1) {
    run(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t)
      pool.emplace_back(run, t, workers);
  }
  EvalReport r;
  r.scales = scales;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    if (!errors[k].empty()) {
      ++r.skipped;
      r.warnings.push_back("sample " + std::to_string(k) + ": " + errors[k]);
      continue;
    }
    ++r.evaluated;
    r.per_scenario[corpus[k].scenario] += counts[k];
    r.overall += counts[k];
  }
  return r;
}

ProbabilityStats probability_stats(const Model &m,
                                   std::span<const ClipSample> samples,
                                   double threshold) {
  double sum = 0.0;
  std::uint64_t pixels = 0, fg = 0;
  for (const auto &s : samples) {
    const Tensor5f p = infer(m, s.clip);
    for (float v : p.flat()) {
      sum += v;
      fg += v >= threshold ? 1 : 0;
    }
    pixels += p.size();
  }
  ProbabilityStats st;
  if (pixels > 0) {
    st.mean_probability = sum / static_cast<double>(pixels);
    st.foreground_rate = static_cast<double>(fg) / static_cast<double>(pixels);
  }
  return st;
}

} // namespace rcnet

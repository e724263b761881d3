#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rcnet/network.hpp"
#include "rcnet/scene.hpp"

namespace rcnet {

struct EvalCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  EvalCounts &operator+=(const EvalCounts &o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  bool operator==(const EvalCounts &) const = default;
};

struct Prf {
  double precision = 0.0, recall = 0.0, f_measure = 0.0;
};

inline constexpr double kDefaultThreshold = 0.5;

/// Pixel counts with prediction p >= threshold counted as foreground.
EvalCounts confusion(const Tensor5f &pred, const Mask2 &mask,
                     double threshold = kDefaultThreshold);

/// Precision, recall and F-measure; any 0/0 is 0.
Prf prf(const EvalCounts &c);

struct EvalReport {
  std::vector<double> scales;
  std::map<std::string, EvalCounts> per_scenario;
  EvalCounts overall;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;

  std::string header() const;
  /// scenario / P / R / F table with a trailing Average row.
  std::string text() const;
  std::string json() const;
};

/// Count-level aggregation per scenario and overall. `workers` threads
/// split the samples; counts are merged in sample order.
EvalReport evaluate(const Model &m, std::span<const ClipSample> corpus,
                    const std::vector<double> &scales, std::size_t workers = 1);

/// Mean predicted probability and fraction of pixels at or above the
/// threshold over all samples (single scale).
struct ProbabilityStats {
  double mean_probability = 0.0;
  double foreground_rate = 0.0;
};
ProbabilityStats probability_stats(const Model &m,
                                   std::span<const ClipSample> samples,
                                   double threshold = kDefaultThreshold);

} // namespace rcnet

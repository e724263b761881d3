#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcnet/graph.hpp"

namespace rcnet {

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  std::size_t samples_per_tensor = 50; // all coordinates if fewer
  std::uint64_t seed = 0;
  bool check_input = true;
  // Coordinates whose +/-epsilon runs put a ReLU input within this band of
  // zero (or flip a ReLU / max-pool decision) are skipped.
  double kink_band = 1e-6;
};

struct TensorCheck {
  std::string name;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double max_rel = 0.0;
  double mean_rel = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double tolerance = 0.0;

  bool passed() const;
  double max_rel() const;
  std::size_t skipped() const;
  /// One line per tensor: name, checked/skipped counts, max and mean
  /// relative error, PASS/FAIL.
  std::string text() const;
};

double relative_error(double analytic, double numeric);

/// Compares backward() against central differences of mean(output) for a
/// sampled subset of every parameter tensor (and the input). The
/// differences are evaluated in long double.
GradCheckReport grad_check(const Graph<double> &graph, const Tensor5d &input,
                           const GradCheckOptions &opts = {});

} // namespace rcnet

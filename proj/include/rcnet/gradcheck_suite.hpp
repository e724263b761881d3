#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rcnet/gradcheck.hpp"
#include "rcnet/model_config.hpp"

namespace rcnet {

struct SuiteOptions {
  GradCheckOptions check;
  std::uint64_t seed = 7;
  ModelConfig model = small_check_model();
  /// Corrupt the backward rule of this op kind in every case.
  std::optional<OpKind> fault;

  /// Three stages, narrow widths, ARPP change modules.
  static ModelConfig small_check_model();
};

struct SuiteCase {
  std::string name; // op name, or "model"
  GradCheckReport report;
};

struct SuiteReport {
  std::vector<SuiteCase> cases;

  bool passed() const;
  std::vector<std::string> failed() const;
  std::string text() const;
};

/// Case names in run order: one per op kind, then "model".
std::vector<std::string> suite_case_names();

/// One small random instance per op kind plus a full model, all in double
/// precision.
SuiteReport run_gradcheck_suite(const SuiteOptions &opts);

} // namespace rcnet

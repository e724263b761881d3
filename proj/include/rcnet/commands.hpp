#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rcnet/kv_config.hpp"
#include "rcnet/model_config.hpp"
#include "rcnet/pipeline.hpp"
#include "rcnet/train.hpp"

namespace rcnet {

inline constexpr const char *kToolVersion = "rcnet 0.1.0";

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// Everything a run needs, read from one key=value config file.
///
///   [model]  see ModelConfig
///   [synth]  scenarios, stationary_prob, clips_per_scenario, source_h, source_w, length,
///            max_crops_per_scene, filter, fg_lo, fg_hi, interval_min,
///            interval_max, scales, crop_h, crop_w, stride_h, stride_w
///   [train]  base_lr, lr_decay_factor, decay_every_iters, momentum,
///            weight_decay, batch_size, max_iters, static_synthesis,
///            log_every, alpha, epsilon, augment
///   [eval]   scales, workers
///   [run]    seed
struct RunConfig {
  ModelConfig model;
  SynthConfig synth;
  LossConfig loss;
  OptimConfig optim;
  TrainOptions train;
  AugmentConfig augment;
  std::vector<double> eval_scales{1.0};
  std::size_t workers = 1;
  std::uint64_t seed = 1;

  static RunConfig from_kv(const KvConfig &kv);
  static RunConfig load(const std::string &path); // "" gives defaults
};

/// Command-line options shared by all subcommands.
struct CommandOptions {
  std::string config;
  std::string corpus;
  std::string out;
  std::vector<std::string> positional; // checkpoint / clip paths
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<double>> scales;
  std::optional<std::size_t> max_iters;
  bool no_static_synthesis = false;
  std::optional<std::size_t> workers;
  bool f64 = false;
  std::string inject_fault; // gradcheck: op name whose backward is corrupted
};

int cmd_synth(const CommandOptions &o, std::ostream &out);
int cmd_train(const CommandOptions &o, std::ostream &out);
int cmd_eval(const CommandOptions &o, std::ostream &out);
int cmd_infer(const CommandOptions &o, std::ostream &out);
int cmd_gradcheck(const CommandOptions &o, std::ostream &out);

/// Dispatches by name and maps exceptions to exit codes: config/spec
/// errors -> usage, numeric aborts -> numeric, everything else -> data.
int run_command(const std::string &name, const CommandOptions &o,
                std::ostream &out, std::ostream &err);

/// fg_ratio histogram with `buckets` equal bins over [0, 1].
std::vector<std::size_t> fg_histogram(const std::vector<ClipSample> &samples,
                                      std::size_t buckets = 10);

} // namespace rcnet

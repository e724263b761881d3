#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rcnet/network.hpp"
#include "rcnet/pipeline.hpp"

namespace rcnet {

struct LossConfig {
  double alpha = 4.0;    // foreground weight
  double epsilon = 1e-7; // probability clamp
  void validate() const;
};

template <typename T> struct LossResult {
  double loss = 0.0;
  Tensor5<T> grad; // d loss / d pred, same dims as pred
};

/// -mean over pixels of [alpha*y*log(p) + (1-y)*log(1-p)], p clamped to
/// [eps, 1-eps]. The gradient is evaluated at the clamped probability.
template <typename T>
LossResult<T> weighted_bce(const Tensor5<T> &pred, const Mask2 &target,
                           const LossConfig &cfg);

struct OptimConfig {
  double base_lr = 1e-6;
  double lr_decay_factor = 0.1;
  std::size_t decay_every_iters = 20000;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::size_t batch_size = 12;
  std::size_t max_iters = 80000;

  void validate() const;
  /// base_lr * factor^floor(iter / decay_every)
  double lr_at(std::size_t iter) const;
};

/// Momentum buffers (one per parameter, lazily sized) and the number of
/// completed steps.
struct TrainState {
  std::vector<Tensor5f> velocity;
  std::size_t iter = 0;
};

/// v <- momentum*v + grad + weight_decay*param; param <- param - lr(iter)*v.
/// NumericError naming the parameter if any gradient is non-finite; nothing
/// is modified in that case.
void sgd_step(ParamStore<float> &params, TrainState &state,
              const GradStore<float> &grads, const OptimConfig &cfg);

struct TrainOptions {
  bool static_synthesis = true;
  std::size_t log_every = 50;
};

struct LossLogEntry {
  std::size_t iter = 0; // 1-based step number
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  std::vector<LossLogEntry> log;
  TrainState state;
  /// "iter <n> lr <v> loss <v>" lines.
  std::string log_text() const;
};

/// Draws the next training batch. With static synthesis, the first half are
/// native draws and the second half their synthesised-static counterparts.
Batch next_training_batch(TrainingSampler &sampler, std::size_t batch_size,
                          bool static_synthesis);

/// Mini-batch SGD on `model` for optim.max_iters steps. Logs step 1, every
/// log_every-th step and the last step.
TrainResult train(Model &model, TrainingSampler &sampler,
                  const LossConfig &loss_cfg, const OptimConfig &optim,
                  const TrainOptions &opts,
                  const std::function<void(const LossLogEntry &)> &on_log = {});

} // namespace rcnet

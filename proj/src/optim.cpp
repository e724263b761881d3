#include <cmath>

#include "rcnet/train.hpp"

namespace rcnet {

void OptimConfig::validate() const {
  if (!(base_lr >= 0.0))
    throw ConfigError("base_lr must be >= 0");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor < 1.0))
    throw ConfigError("lr_decay_factor must lie in (0, 1)");
  if (decay_every_iters == 0)
    throw ConfigError("decay_every_iters must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0))
    throw ConfigError("weight_decay must be >= 0");
  if (batch_size == 0)
    throw ConfigError("batch_size must be positive");
}

double OptimConfig::lr_at(std::size_t iter) const {
  const auto steps = static_cast<double>(iter / decay_every_iters);
  return base_lr * std::pow(lr_decay_factor, steps);
}

void sgd_step(ParamStore<float> &params, TrainState &state,
              const GradStore<float> &grads, const OptimConfig &cfg) {
  if (grads.grads.size() != params.size())
    throw ShapeError("gradient store has " + std::to_string(grads.grads.size()) +
                     " entries for " + std::to_string(params.size()) +
                     " parameters");
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Tensor5f &g = grads.grads[p];
    if (g.dims() != params[p].dims())
      throw ShapeError("gradient for '" + params.name(p) + "' has dims " +
                       g.dims().str() + ", parameter " + params[p].dims().str());
    float max_abs = 0.0f;
    bool finite = true;
    for (float v : g.flat()) {
      finite = finite && std::isfinite(v);
      if (std::isfinite(v))
        max_abs = std::max(max_abs, std::abs(v));
    }
    if (!finite)
      throw NumericError("non-finite gradient for '" + params.name(p) +
                         "' at step " + std::to_string(state.iter) +
                         " (max finite |g| = " + std::to_string(max_abs) + ")");
  }
  if (state.velocity.size() != params.size()) {
    state.velocity.clear();
    for (std::size_t p = 0; p < params.size(); ++p)
      state.velocity.emplace_back(params[p].dims());
  }
  const auto lr = static_cast<float>(cfg.lr_at(state.iter));
  const auto mu = static_cast<float>(cfg.momentum);
  const auto wd = static_cast<float>(cfg.weight_decay);
  for (std::size_t p = 0; p < params.size(); ++p) {
    float *w = params[p].data();
    float *v = state.velocity[p].data();
    const float *g = grads.grads[p].data();
    for (std::size_t k = 0; k < params[p].size(); ++k) {
      v[k] = mu * v[k] + g[k] + wd * w[k];
      w[k] -= lr * v[k];
    }
  }
  ++state.iter;
}

} // namespace rcnet

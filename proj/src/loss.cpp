#include <algorithm>
#include <cmath>

#include "rcnet/train.hpp"

namespace rcnet {

void LossConfig::validate() const {
  if (!(alpha > 0.0))
    throw ConfigError("loss alpha must be positive");
  if (!(epsilon > 0.0 && epsilon < 0.5))
    throw ConfigError("loss epsilon must lie in (0, 0.5)");
}

template <typename T>
LossResult<T> weighted_bce(const Tensor5<T> &pred, const Mask2 &target,
                           const LossConfig &cfg) {
  cfg.validate();
  const Dims5 &d = pred.dims();
  if (d.c != 1 || d.l != 1 || d.n != target.n || d.h != target.h ||
      d.w != target.w)
    throw ShapeError("weighted_bce: prediction " + d.str() +
                     " does not match mask (" + std::to_string(target.n) + "," +
                     std::to_string(target.h) + "," + std::to_string(target.w) +
                     ")");
  const double M = static_cast<double>(pred.size());
  LossResult<T> r;
  r.grad = Tensor5<T>(d);
  double sum = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double p = std::clamp(static_cast<double>(pred.data()[k]), cfg.epsilon,
                                1.0 - cfg.epsilon);
    if (target.data[k]) {
      sum += cfg.alpha * std::log(p);
      r.grad.data()[k] = static_cast<T>(-cfg.alpha / (p * M));
    } else {
      sum += std::log(1.0 - p);
      r.grad.data()[k] = static_cast<T>(1.0 / ((1.0 - p) * M));
    }
  }
  r.loss = -sum / M;
  return r;
}

template LossResult<float> weighted_bce(const Tensor5f &, const Mask2 &,
                                        const LossConfig &);
template LossResult<double> weighted_bce(const Tensor5d &, const Mask2 &,
                                         const LossConfig &);

} // namespace rcnet

#include <cmath>
#include <cstdio>
#include <sstream>

#include "rcnet/train.hpp"

namespace rcnet {

std::string TrainResult::log_text() const {
  std::ostringstream os;
  char buf[128];
  for (const auto &e : log) {
    std::snprintf(buf, sizeof buf, "iter %zu lr %.6g loss %.9g\n", e.iter, e.lr,
                  e.loss);
    os << buf;
  }
  return os.str();
}

Batch next_training_batch(TrainingSampler &sampler, std::size_t batch_size,
                          bool static_synthesis) {
  std::vector<ClipSample> items;
  if (static_synthesis) {
    if (batch_size < 2 || batch_size % 2 != 0)
      throw ConfigError("static synthesis needs an even batch size >= 2");
    const std::size_t half = batch_size / 2;
    for (std::size_t k = 0; k < half; ++k)
      items.push_back(sampler.next());
    for (std::size_t k = 0; k < half; ++k)
      items.push_back(synthesize_static(items[k]));
  } else {
    for (std::size_t k = 0; k < batch_size; ++k)
      items.push_back(sampler.next());
  }
  return make_batch(items);
}

TrainResult train(Model &model, TrainingSampler &sampler,
                  const LossConfig &loss_cfg, const OptimConfig &optim,
                  const TrainOptions &opts,
                  const std::function<void(const LossLogEntry &)> &on_log) {
  loss_cfg.validate();
  optim.validate();
  TrainResult result;
  TrainState &state = result.state;
  const std::size_t log_every = std::max<std::size_t>(opts.log_every, 1);
  for (std::size_t step = 1; step <= optim.max_iters; ++step) {
    const Batch batch =
        next_training_batch(sampler, optim.batch_size, opts.static_synthesis);
    const Trace<float> trace = model.graph.forward(batch.clips);
    const Tensor5f &pred = trace.outputs[model.graph.output_node()];
    const LossResult<float> loss = weighted_bce(pred, batch.masks, loss_cfg);
    if (!std::isfinite(loss.loss))
      throw NumericError("non-finite loss at step " + std::to_string(step));
    const GradStore<float> grads = model.graph.backward(trace, loss.grad);
    const double lr = optim.lr_at(state.iter);
    sgd_step(model.graph.params(), state, grads, optim);
    if (step == 1 || step % log_every == 0 || step == optim.max_iters) {
      result.log.push_back(LossLogEntry{step, lr, loss.loss});
      if (on_log)
        on_log(result.log.back());
    }
  }
  return result;
}

} // namespace rcnet

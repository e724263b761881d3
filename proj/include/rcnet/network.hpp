#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcnet/graph.hpp"
#include "rcnet/model_config.hpp"

namespace rcnet {

inline constexpr std::uint16_t kCheckpointVersion = 1;

/// A built network: graph + parameters, the config it came from and the
/// seed its parameters were initialised with. Immutable once built or
/// loaded, except by the trainer.
struct Model {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::uint16_t format_version = kCheckpointVersion;
  Graph<float> graph;
};

/// Builds the graph for `cfg` with Glorot-uniform weights drawn from `seed`
/// and zero biases. Throws ConfigError listing every violation.
template <typename T> Graph<T> build_graph(const ModelConfig &cfg, std::uint64_t seed);

Model build_model(const ModelConfig &cfg, std::uint64_t seed);

/// Per-pixel change probability, dims (N, 1, 1, H, W).
Tensor5f infer(const Model &m, const Tensor5f &clip);

/// Mean of per-scale probability maps, each predicted on a bilinearly
/// resized clip and resized back to native resolution.
Tensor5f infer_multiscale(const Model &m, const Tensor5f &clip,
                          const std::vector<double> &scales);

std::vector<std::uint8_t> checkpoint_bytes(const Model &m);
Model checkpoint_from_bytes(const std::vector<std::uint8_t> &bytes);
void save_checkpoint(const Model &m, const std::string &path);
Model load_checkpoint(const std::string &path);

} // namespace rcnet

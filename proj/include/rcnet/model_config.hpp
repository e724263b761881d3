#pragma once

#include <string>
#include <vector>

#include "rcnet/kv_config.hpp"

namespace rcnet {

enum class Backbone { raw_input, simple_3layer, stacked_k_blocks };
enum class ChangeModule { conv3d_pair, retro, arpp };

std::string to_string(Backbone b);
std::string to_string(ChangeModule m);
Backbone parse_backbone(const std::string &s);
ChangeModule parse_change_module(const std::string &s);

/// Declarative network description.
///
/// Backbone stage s runs `blocks_per_stage` 1x3x3 convolutions (+ReLU) at
/// resolution H/2^s, with a 2x2 max-pool in front of every stage but the
/// first. A change module is attached to every stage output; decoders fuse
/// them top-down. The raw-input backbone has no stages: a single change
/// module reads the RGB clip and no decoder is built.
struct ModelConfig {
  Backbone backbone = Backbone::simple_3layer;
  std::vector<std::size_t> backbone_widths{16, 32, 64};
  std::size_t blocks_per_stage = 1; // stacked-k-blocks only
  ChangeModule change_module = ChangeModule::arpp;
  std::vector<std::size_t> arpp_dilations{1, 3};
  std::vector<std::size_t> change_widths{16, 32, 64};
  std::size_t decoder_levels = 3;
  std::size_t input_length = 4; // hint only; any L >= 2 runs
  std::size_t input_channels = 3;

  std::size_t stages() const;
  /// Spatial dims must be multiples of this.
  std::size_t spatial_multiple() const;

  /// Every violated invariant, one message each; empty when valid.
  std::vector<std::string> violations() const;
  /// Throws ConfigError listing all violations.
  void validate() const;

  /// key=value lines, stable order, round-trips through from_kv.
  std::string to_text() const;
  static ModelConfig from_kv(const KvSection &sec);

  bool operator==(const ModelConfig &) const = default;
};

} // namespace rcnet

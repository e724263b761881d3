#include "rcnet/model_config.hpp"

#include <set>
#include <sstream>

#include "rcnet/errors.hpp"

namespace rcnet {

std::string to_string(Backbone b) {
  switch (b) {
  case Backbone::raw_input:
    return "raw-input";
  case Backbone::simple_3layer:
    return "simple-3layer";
  case Backbone::stacked_k_blocks:
    return "stacked-k-blocks";
  }
  return "?";
}

std::string to_string(ChangeModule m) {
  switch (m) {
  case ChangeModule::conv3d_pair:
    return "conv3d-pair";
  case ChangeModule::retro:
    return "retro";
  case ChangeModule::arpp:
    return "arpp";
  }
  return "?";
}

Backbone parse_backbone(const std::string &s) {
  if (s == "raw-input")
    return Backbone::raw_input;
  if (s == "simple-3layer")
    return Backbone::simple_3layer;
  if (s == "stacked-k-blocks")
    return Backbone::stacked_k_blocks;
  throw ConfigError("unknown backbone '" + s + "'");
}

ChangeModule parse_change_module(const std::string &s) {
  if (s == "conv3d-pair")
    return ChangeModule::conv3d_pair;
  if (s == "retro")
    return ChangeModule::retro;
  if (s == "arpp")
    return ChangeModule::arpp;
  throw ConfigError("unknown change module '" + s + "'");
}

std::size_t ModelConfig::stages() const {
  return backbone == Backbone::raw_input ? 0 : backbone_widths.size();
}

std::size_t ModelConfig::spatial_multiple() const {
  return stages() == 0 ? 1 : std::size_t{1} << (stages() - 1);
}

std::vector<std::string> ModelConfig::violations() const {
  std::vector<std::string> v;
  const std::size_t taps = std::max<std::size_t>(stages(), 1);
  switch (backbone) {
  case Backbone::raw_input:
    if (!backbone_widths.empty())
      v.push_back("raw-input backbone takes no backbone_widths");
    break;
  case Backbone::simple_3layer:
    if (backbone_widths.size() != 3)
      v.push_back("simple-3layer needs exactly 3 backbone_widths");
    break;
  case Backbone::stacked_k_blocks:
    if (backbone_widths.empty())
      v.push_back("stacked-k-blocks needs at least one backbone width");
    if (blocks_per_stage == 0)
      v.push_back("blocks_per_stage must be >= 1");
    break;
  }
  for (std::size_t w : backbone_widths)
    if (w == 0)
      v.push_back("backbone widths must be positive");
  if (decoder_levels != stages())
    v.push_back("decoder_levels (" + std::to_string(decoder_levels) +
                ") must equal the number of tapped backbone stages (" +
                std::to_string(stages()) + ")");
  if (change_widths.size() != taps)
    v.push_back("change_widths needs " + std::to_string(taps) +
                " entries, has " + std::to_string(change_widths.size()));
  const bool is_arpp = change_module == ChangeModule::arpp;
  if (is_arpp == arpp_dilations.empty())
    v.push_back(is_arpp ? "arpp change module needs arpp_dilations"
                        : "arpp_dilations only apply to the arpp module");
  std::set<std::size_t> seen;
  for (std::size_t d : arpp_dilations) {
    if (d == 0)
      v.push_back("arpp dilations must be >= 1");
    if (!seen.insert(d).second)
      v.push_back("arpp dilation " + std::to_string(d) + " repeats");
  }
  const std::size_t branches = is_arpp ? std::max<std::size_t>(arpp_dilations.size(), 1) : 1;
  for (std::size_t w : change_widths)
    if (w == 0 || w % branches != 0)
      v.push_back("change width " + std::to_string(w) +
                  " not a positive multiple of branch count " +
                  std::to_string(branches));
  if (input_length < 2)
    v.push_back("input_length must be >= 2");
  if (input_channels == 0)
    v.push_back("input_channels must be positive");
  return v;
}

void ModelConfig::validate() const {
  const auto v = violations();
  if (v.empty())
    return;
  std::string msg = "invalid model config:";
  for (const auto &s : v)
    msg += "\n  - " + s;
  throw ConfigError(msg);
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "backbone=" << to_string(backbone) << "\n"
     << "backbone_widths=" << join_sizes(backbone_widths) << "\n"
     << "blocks_per_stage=" << blocks_per_stage << "\n"
     << "change_module=" << to_string(change_module) << "\n"
     << "arpp_dilations=" << join_sizes(arpp_dilations) << "\n"
     << "change_widths=" << join_sizes(change_widths) << "\n"
     << "decoder_levels=" << decoder_levels << "\n"
     << "input_length=" << input_length << "\n"
     << "input_channels=" << input_channels << "\n";
  return os.str();
}

ModelConfig ModelConfig::from_kv(const KvSection &sec) {
  ModelConfig c;
  c.backbone = parse_backbone(sec.str("backbone", to_string(c.backbone)));
  if (c.backbone == Backbone::raw_input)
    c.backbone_widths.clear();
  c.backbone_widths = sec.sizes("backbone_widths", c.backbone_widths);
  c.blocks_per_stage =
      static_cast<std::size_t>(sec.integer("blocks_per_stage", 1));
  c.change_module =
      parse_change_module(sec.str("change_module", to_string(c.change_module)));
  if (c.change_module != ChangeModule::arpp)
    c.arpp_dilations.clear();
  c.arpp_dilations = sec.sizes("arpp_dilations", c.arpp_dilations);
  if (c.backbone == Backbone::raw_input && !sec.has("change_widths"))
    c.change_widths = {c.change_widths.front()};
  c.change_widths = sec.sizes("change_widths", c.change_widths);
  c.decoder_levels = static_cast<std::size_t>(
      sec.integer("decoder_levels", static_cast<std::int64_t>(c.stages())));
  c.input_length = static_cast<std::size_t>(sec.integer("input_length", 4));
  c.input_channels = static_cast<std::size_t>(sec.integer("input_channels", 3));
  return c;
}

} // namespace rcnet

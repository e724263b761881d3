#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rcnet/scene.hpp"

namespace rcnet {

struct CropSpec {
  std::vector<double> scales{1.0, 0.5};
  std::size_t crop_h = 64, crop_w = 64;
  std::size_t stride_h = 32, stride_w = 32;
};

struct AugmentConfig {
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;
  double contrast_lo = 0.8, contrast_hi = 1.2; // multiplicative, about the clip mean
  double brightness = 0.08;                    // additive, uniform in +/- this
  double noise_sigma = 0.01;

  /// Every augmentation disabled.
  static AugmentConfig none();
};

struct SamplerConfig {
  double fg_lo = 0.05, fg_hi = 0.60;
  std::size_t interval_min = 2, interval_max = 8;
  std::map<std::string, double> scenario_weights; // empty: uniform
  AugmentConfig augment;
  CropSpec crop;

  /// Throws ConfigError on inconsistent bounds.
  void validate() const;
};

/// Frame indices current-(L-1)k, ..., current-k, current for an interval k
/// drawn uniformly from [interval_min, interval_max]. The upper bound is
/// clamped to what `current_index` can reach; SamplingError if even k = 1
/// cannot supply L frames.
std::vector<std::size_t> temporal_jitter_pick(std::size_t frame_count,
                                              std::size_t current_index,
                                              std::size_t length,
                                              std::size_t interval_min,
                                              std::size_t interval_max,
                                              std::mt19937_64 &rng);

/// For each scale: bilinear resize (masks thresholded at 0.5 after
/// resizing), then every full crop at the given stride; partial tiles are
/// dropped. ShapeError if a crop does not fit a scaled clip.
std::vector<ClipSample> multi_scale_crop(const ClipSample &sample,
                                         const CropSpec &spec);

/// Keeps samples with lo <= fg_ratio <= hi. Synthesised-static samples are
/// always kept.
std::vector<ClipSample> class_balance_filter(std::vector<ClipSample> samples,
                                             double lo, double hi);

std::map<std::string, std::vector<ClipSample>>
group_by_scenario(std::vector<ClipSample> samples);

/// Endless draw: a scenario uniformly (or by weight), then a sample within
/// it uniformly, with replacement.
class ScenarioBalancedStream {
public:
  explicit ScenarioBalancedStream(
      std::map<std::string, std::vector<ClipSample>> groups,
      std::map<std::string, double> weights = {});

  const ClipSample &next(std::mt19937_64 &rng);
  std::size_t scenario_count() const { return tags_.size(); }
  const std::vector<std::string> &scenarios() const { return tags_; }
  /// Index of the scenario chosen by the most recent next().
  std::size_t last_scenario() const { return last_; }

private:
  std::vector<std::string> tags_;
  std::vector<std::vector<ClipSample>> groups_;
  std::discrete_distribution<std::size_t> pick_;
  std::size_t last_ = 0;
};

/// Flips are applied to every frame and the mask; photometric jitter to
/// frames only; values are clamped to [0, 1].
ClipSample augment(const ClipSample &sample, const AugmentConfig &cfg,
                   std::mt19937_64 &rng);

ClipSample hflip(const ClipSample &sample);
ClipSample vflip(const ClipSample &sample);

/// Scenario-balanced, augmented training draws over a sample pool.
class TrainingSampler {
public:
  TrainingSampler(std::vector<ClipSample> pool, SamplerConfig cfg,
                  std::uint64_t seed);
  ClipSample next();

private:
  SamplerConfig cfg_;
  std::mt19937_64 rng_;
  ScenarioBalancedStream stream_;
};

struct Batch {
  Tensor5f clips; // (B, 3, L, H, W)
  Mask2 masks;    // (B, H, W)
};

/// Stacks samples of identical dims. ShapeError otherwise.
Batch make_batch(std::span<const ClipSample> samples);

/// Corpus synthesis recipe: random scenes per scenario, temporally jittered,
/// multi-scale cropped and class-balance filtered until every scenario has
/// `clips_per_scenario` samples.
struct SynthConfig {
  std::vector<ScenarioSpec> scenarios = standard_scenarios();
  std::size_t clips_per_scenario = 50;
  std::size_t source_h = 128, source_w = 128;
  std::size_t length = 4;
  std::size_t max_crops_per_scene = 4;
  bool filter = true;
  SamplerConfig sampler;
  std::uint64_t seed = 1;
};

std::vector<ClipSample> synthesize_corpus(const SynthConfig &cfg);

} // namespace rcnet

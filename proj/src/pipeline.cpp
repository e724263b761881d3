#include "rcnet/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace rcnet {

AugmentConfig AugmentConfig::none() {
  AugmentConfig c;
  c.hflip_prob = 0.0;
  c.vflip_prob = 0.0;
  c.contrast_lo = c.contrast_hi = 1.0;
  c.brightness = 0.0;
  c.noise_sigma = 0.0;
  return c;
}

void SamplerConfig::validate() const {
  if (!(fg_lo >= 0.0 && fg_lo < fg_hi && fg_hi <= 1.0))
    throw ConfigError("fg_ratio bounds need 0 <= lo < hi <= 1");
  if (interval_min < 1 || interval_max < interval_min)
    throw ConfigError("temporal interval range needs 1 <= min <= max");
  if (augment.contrast_lo > augment.contrast_hi || augment.contrast_lo <= 0.0)
    throw ConfigError("contrast range needs 0 < lo <= hi");
  if (crop.scales.empty() || crop.crop_h == 0 || crop.crop_w == 0 ||
      crop.stride_h == 0 || crop.stride_w == 0)
    throw ConfigError("crop spec needs scales and positive crop/stride dims");
}

std::vector<std::size_t> temporal_jitter_pick(std::size_t frame_count,
                                              std::size_t current_index,
                                              std::size_t length,
                                              std::size_t interval_min,
                                              std::size_t interval_max,
                                              std::mt19937_64 &rng) {
  if (length < 1 || current_index >= frame_count)
    throw SamplingError("current index " + std::to_string(current_index) +
                        " outside a sequence of " + std::to_string(frame_count));
  if (interval_min < 1 || interval_max < interval_min)
    throw SamplingError("interval range needs 1 <= min <= max");
  const std::size_t steps = length - 1;
  if (current_index < steps)
    throw SamplingError("only " + std::to_string(current_index + 1) +
                        " frames reachable, clip needs " + std::to_string(length));
  std::size_t lo = interval_min, hi = interval_max;
  if (steps > 0) {
    const std::size_t reach = current_index / steps;
    hi = std::min(hi, reach);
    lo = std::min(lo, hi);
  }
  const std::size_t k = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  std::vector<std::size_t> idx(length);
  for (std::size_t q = 0; q < length; ++q)
    idx[q] = current_index - (steps - q) * k;
  return idx;
}

namespace {

Mask2 resize_mask(const Mask2 &m, std::size_t h, std::size_t w) {
  if (h == m.h && w == m.w)
    return m;
  Tensor5f f(Dims5{m.n, 1, 1, m.h, m.w});
  for (std::size_t k = 0; k < m.data.size(); ++k)
    f.data()[k] = static_cast<float>(m.data[k]);
  const Tensor5f r = bilinear_resize(f, h, w);
  Mask2 out(m.n, h, w);
  for (std::size_t k = 0; k < out.data.size(); ++k)
    out.data[k] = r.data()[k] >= 0.5f ? 1 : 0;
  return out;
}

ClipSample crop(const ClipSample &s, std::size_t top, std::size_t left,
                std::size_t h, std::size_t w) {
  const Dims5 &d = s.clip.dims();
  ClipSample out;
  out.scenario = s.scenario;
  out.clip = Tensor5f(Dims5{d.n, d.c, d.l, h, w});
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t c = 0; c < d.c; ++c)
      for (std::size_t l = 0; l < d.l; ++l)
        for (std::size_t i = 0; i < h; ++i) {
          const float *src = s.clip.plane(n, c, l) + (top + i) * d.w + left;
          std::copy(src, src + w, out.clip.plane(n, c, l) + i * w);
        }
  out.mask = Mask2(s.mask.n, h, w);
  for (std::size_t n = 0; n < s.mask.n; ++n)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j)
        out.mask(n, i, j) = s.mask(n, top + i, left + j);
  out.refresh_fg_ratio();
  return out;
}

} // namespace

std::vector<ClipSample> multi_scale_crop(const ClipSample &sample,
                                         const CropSpec &spec) {
  if (spec.stride_h == 0 || spec.stride_w == 0)
    throw ConfigError("crop stride must be positive");
  std::vector<ClipSample> out;
  const Dims5 &d = sample.clip.dims();
  for (double s : spec.scales) {
    const auto h = static_cast<std::size_t>(std::lround(static_cast<double>(d.h) * s));
    const auto w = static_cast<std::size_t>(std::lround(static_cast<double>(d.w) * s));
    if (h < spec.crop_h || w < spec.crop_w)
      throw ShapeError("crop " + std::to_string(spec.crop_h) + "x" +
                       std::to_string(spec.crop_w) + " exceeds scaled clip " +
                       std::to_string(h) + "x" + std::to_string(w));
    ClipSample scaled;
    scaled.scenario = sample.scenario;
    scaled.clip = bilinear_resize(sample.clip, h, w);
    scaled.mask = resize_mask(sample.mask, h, w);
    for (std::size_t top = 0; top + spec.crop_h <= h; top += spec.stride_h)
      for (std::size_t left = 0; left + spec.crop_w <= w; left += spec.stride_w)
        out.push_back(crop(scaled, top, left, spec.crop_h, spec.crop_w));
  }
  return out;
}

std::vector<ClipSample> class_balance_filter(std::vector<ClipSample> samples,
                                             double lo, double hi) {
  if (!(lo >= 0.0 && lo < hi && hi <= 1.0))
    throw ConfigError("class balance bounds need 0 <= lo < hi <= 1");
  std::erase_if(samples, [&](const ClipSample &s) {
    return !s.is_static() && (s.fg_ratio < lo || s.fg_ratio > hi);
  });
  return samples;
}

std::map<std::string, std::vector<ClipSample>>
group_by_scenario(std::vector<ClipSample> samples) {
  std::map<std::string, std::vector<ClipSample>> groups;
  for (auto &s : samples)
    groups[s.scenario].push_back(std::move(s));
  return groups;
}

ScenarioBalancedStream::ScenarioBalancedStream(
    std::map<std::string, std::vector<ClipSample>> groups,
    std::map<std::string, double> weights) {
  if (groups.empty())
    throw ConfigError("scenario stream needs at least one scenario");
  std::vector<double> w;
  for (auto &[tag, group] : groups) {
    if (group.empty())
      throw ConfigError("scenario '" + tag + "' has no samples");
    tags_.push_back(tag);
    groups_.push_back(std::move(group));
    auto it = weights.find(tag);
    w.push_back(it == weights.end() ? (weights.empty() ? 1.0 : 0.0) : it->second);
  }
  if (std::all_of(w.begin(), w.end(), [](double v) { return v <= 0.0; }))
    throw ConfigError("scenario weights select no scenario");
  pick_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
}

const ClipSample &ScenarioBalancedStream::next(std::mt19937_64 &rng) {
  last_ = pick_(rng);
  const auto &group = groups_[last_];
  const std::size_t k =
      std::uniform_int_distribution<std::size_t>(0, group.size() - 1)(rng);
  return group[k];
}

ClipSample hflip(const ClipSample &sample) {
  ClipSample out = sample;
  const Dims5 &d = sample.clip.dims();
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t c = 0; c < d.c; ++c)
      for (std::size_t l = 0; l < d.l; ++l)
        for (std::size_t i = 0; i < d.h; ++i) {
          float *row = out.clip.plane(n, c, l) + i * d.w;
          std::reverse(row, row + d.w);
        }
  for (std::size_t n = 0; n < out.mask.n; ++n)
    for (std::size_t i = 0; i < out.mask.h; ++i) {
      auto row = out.mask.data.begin() +
                 static_cast<std::ptrdiff_t>((n * out.mask.h + i) * out.mask.w);
      std::reverse(row, row + static_cast<std::ptrdiff_t>(out.mask.w));
    }
  return out;
}

ClipSample vflip(const ClipSample &sample) {
  ClipSample out = sample;
  const Dims5 &d = sample.clip.dims();
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t c = 0; c < d.c; ++c)
      for (std::size_t l = 0; l < d.l; ++l) {
        const float *src = sample.clip.plane(n, c, l);
        float *dst = out.clip.plane(n, c, l);
        for (std::size_t i = 0; i < d.h; ++i)
          std::copy(src + (d.h - 1 - i) * d.w, src + (d.h - i) * d.w,
                    dst + i * d.w);
      }
  for (std::size_t n = 0; n < out.mask.n; ++n)
    for (std::size_t i = 0; i < out.mask.h; ++i)
      for (std::size_t j = 0; j < out.mask.w; ++j)
        out.mask(n, i, j) = sample.mask(n, out.mask.h - 1 - i, j);
  return out;
}

ClipSample augment(const ClipSample &sample, const AugmentConfig &cfg,
                   std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Draw order is fixed so streams stay reproducible.
  const bool do_h = u(rng) < cfg.hflip_prob;
  const bool do_v = u(rng) < cfg.vflip_prob;
  const double contrast = cfg.contrast_lo + (cfg.contrast_hi - cfg.contrast_lo) * u(rng);
  const double bright = cfg.brightness * (2.0 * u(rng) - 1.0);

  ClipSample out = do_h ? hflip(sample) : sample;
  if (do_v)
    out = vflip(out);

  const bool photometric =
      contrast != 1.0 || bright != 0.0 || cfg.noise_sigma > 0.0;
  if (!photometric)
    return out;
  double mean = 0.0;
  for (float v : out.clip.flat())
    mean += v;
  mean /= static_cast<double>(out.clip.size());
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (float &v : out.clip.flat()) {
    double x = (v - mean) * contrast + mean + bright;
    if (cfg.noise_sigma > 0.0)
      x += cfg.noise_sigma * gauss(rng);
    v = static_cast<float>(std::clamp(x, 0.0, 1.0));
  }
  return out;
}

TrainingSampler::TrainingSampler(std::vector<ClipSample> pool,
                                 SamplerConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rng_(seed),
      stream_(group_by_scenario(std::move(pool)), cfg_.scenario_weights) {}

ClipSample TrainingSampler::next() {
  const ClipSample &s = stream_.next(rng_);
  return augment(s, cfg_.augment, rng_);
}

Batch make_batch(std::span<const ClipSample> samples) {
  if (samples.empty())
    throw ShapeError("make_batch: no samples");
  const Dims5 &d0 = samples.front().clip.dims();
  Batch b;
  b.clips = Tensor5f(Dims5{samples.size(), d0.c, d0.l, d0.h, d0.w});
  b.masks = Mask2(samples.size(), d0.h, d0.w);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const ClipSample &s = samples[k];
    if (s.clip.dims() != d0 || s.mask.h != d0.h || s.mask.w != d0.w)
      throw ShapeError("make_batch: sample " + std::to_string(k) + " dims " +
                       s.clip.dims().str() + " differ from " + d0.str());
    std::copy(s.clip.data(), s.clip.data() + s.clip.size(), b.clips.item(k));
    std::copy(s.mask.data.begin(), s.mask.data.end(),
              b.masks.data.begin() + static_cast<std::ptrdiff_t>(k * d0.plane()));
  }
  return b;
}

std::vector<ClipSample> synthesize_corpus(const SynthConfig &cfg) {
  cfg.sampler.validate();
  if (cfg.length < 2)
    throw ConfigError("clip length must be >= 2");
  std::vector<ClipSample> out;
  std::mt19937_64 rng(cfg.seed);
  const std::size_t steps = cfg.length - 1;
  const std::size_t frames = steps * cfg.sampler.interval_max + 1;
  for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
    const ScenarioSpec &sc = cfg.scenarios[si];
    std::size_t kept = 0;
    std::size_t attempts = 0;
    const std::size_t max_attempts = 200 * cfg.clips_per_scenario + 100;
    while (kept < cfg.clips_per_scenario) {
      if (++attempts > max_attempts)
        throw SamplingError("scenario '" + sc.tag + "' produced only " +
                            std::to_string(kept) + " usable clips after " +
                            std::to_string(max_attempts) + " scenes");
      const auto idx = temporal_jitter_pick(frames, frames - 1, cfg.length,
                                            cfg.sampler.interval_min,
                                            cfg.sampler.interval_max, rng);
      std::vector<double> times(idx.begin(), idx.end());
      const SceneSpec spec = random_scene(sc, cfg.source_h, cfg.source_w,
                                          times.front(), times.back(), rng());
      std::vector<ClipSample> crops =
          multi_scale_crop(generate_clip_at(spec, times), cfg.sampler.crop);
      if (cfg.filter)
        crops = class_balance_filter(std::move(crops), cfg.sampler.fg_lo,
                                     cfg.sampler.fg_hi);
      std::shuffle(crops.begin(), crops.end(), rng);
      for (std::size_t k = 0;
           k < crops.size() && k < cfg.max_crops_per_scene &&
           kept < cfg.clips_per_scenario;
           ++k, ++kept)
        out.push_back(std::move(crops[k]));
    }
  }
  return out;
}

} // namespace rcnet

#include "rcnet/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rcnet {

bool ClipSample::is_static() const {
  return scenario.size() >= kStaticSuffix.size() &&
         scenario.compare(scenario.size() - kStaticSuffix.size(),
                          kStaticSuffix.size(), kStaticSuffix) == 0;
}

void ClipSample::refresh_fg_ratio() {
  fg_ratio = mask.data.empty()
                 ? 0.0
                 : static_cast<double>(mask.count_ones()) /
                       static_cast<double>(mask.data.size());
}

std::string to_string(BackgroundKind k) {
  switch (k) {
  case BackgroundKind::static_texture:
    return "static-texture";
  case BackgroundKind::dynamic_sinusoid:
    return "dynamic-sinusoid";
  case BackgroundKind::noise_field:
    return "noise-field";
  }
  return "?";
}

BackgroundKind parse_background(const std::string &s) {
  if (s == "static-texture")
    return BackgroundKind::static_texture;
  if (s == "dynamic-sinusoid")
    return BackgroundKind::dynamic_sinusoid;
  if (s == "noise-field")
    return BackgroundKind::noise_field;
  throw SpecError("unknown background kind '" + s + "'");
}

bool SceneObject::covers(double t, std::size_t i, std::size_t j) const {
  const double cy = static_cast<double>(i) + 0.5;
  const double cx = static_cast<double>(j) + 0.5;
  const double top = y + vy * t;
  const double left = x + vx * t;
  if (shape == ShapeKind::rect)
    return cy >= top && cy < top + size && cx >= left && cx < left + size;
  const double r = size / 2.0;
  const double dy = cy - (top + r), dx = cx - (left + r);
  return dy * dy + dx * dx <= r * r;
}

void SceneSpec::check_fits(const std::vector<double> &times) const {
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const SceneObject &o = objects[k];
    if (!(o.size > 0.0))
      throw SpecError("object " + std::to_string(k) + " has non-positive size");
    for (double t : times) {
      // Tolerates rounding in positions computed from velocities.
      constexpr double slack = 1e-9;
      const double top = o.y + o.vy * t, left = o.x + o.vx * t;
      if (top < -slack || left < -slack ||
          top + o.size > static_cast<double>(height) + slack ||
          left + o.size > static_cast<double>(width) + slack)
        throw SpecError("object " + std::to_string(k) +
                        " leaves the canvas at t=" + std::to_string(t));
    }
  }
}

namespace {

// Smooth per-channel texture: base colour plus a few low-frequency waves.
struct Wave {
  double ky, kx, phase, amp;
};

struct Background {
  std::array<double, 3> base{};
  std::array<std::vector<Wave>, 3> waves;
  std::vector<float> grain;       // noise-field: fixed per-pixel offsets
  Wave ripple{0, 0, 0, 0};        // dynamic-sinusoid: travelling wave
  double omega = 0.0;
};

Background make_background(const SceneSpec &spec) {
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Background bg;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t c = 0; c < 3; ++c) {
    bg.base[c] = 0.3 + 0.3 * u(rng);
    for (int k = 0; k < 3; ++k)
      bg.waves[c].push_back(Wave{two_pi * (0.5 + 2.5 * u(rng)) / static_cast<double>(spec.height),
                                 two_pi * (0.5 + 2.5 * u(rng)) / static_cast<double>(spec.width),
                                 two_pi * u(rng), 0.04 + 0.04 * u(rng)});
  }
  if (spec.background == BackgroundKind::noise_field) {
    bg.grain.resize(3 * spec.height * spec.width);
    for (float &g : bg.grain)
      g = static_cast<float>(0.24 * (u(rng) - 0.5));
  }
  if (spec.background == BackgroundKind::dynamic_sinusoid) {
    const double angle = two_pi * u(rng);
    const double freq = two_pi / (6.0 + 6.0 * u(rng));
    bg.ripple = Wave{freq * std::sin(angle), freq * std::cos(angle),
                     two_pi * u(rng), 0.08 + 0.06 * u(rng)};
    bg.omega = 0.6 + 0.8 * u(rng);
  }
  return bg;
}

void render_frame(const SceneSpec &spec, const Background &bg, double t,
                  std::size_t frame_index, Tensor5f &clip, std::size_t l) {
  const std::size_t H = spec.height, W = spec.width;
  std::mt19937_64 noise_rng(spec.seed * 1000003ULL + frame_index * 7919ULL + 17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double drift = spec.photometric.brightness_drift * t;
  for (std::size_t c = 0; c < 3; ++c) {
    float *plane = clip.plane(0, c, l);
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j) {
        double v = bg.base[c];
        for (const Wave &w : bg.waves[c])
          v += w.amp * std::sin(w.ky * static_cast<double>(i) +
                                w.kx * static_cast<double>(j) + w.phase);
        if (!bg.grain.empty())
          v += bg.grain[(c * H + i) * W + j];
        if (bg.ripple.amp > 0.0)
          v += bg.ripple.amp * std::sin(bg.ripple.ky * static_cast<double>(i) +
                                        bg.ripple.kx * static_cast<double>(j) -
                                        bg.omega * t + bg.ripple.phase);
        plane[i * W + j] = static_cast<float>(v);
      }
  }
  // Objects are painted in list order; later ones occlude earlier ones.
  for (const SceneObject &o : spec.objects) {
    const double top = o.y + o.vy * t, left = o.x + o.vx * t;
    const auto i0 = static_cast<std::size_t>(std::max(0.0, std::floor(top)));
    const auto j0 = static_cast<std::size_t>(std::max(0.0, std::floor(left)));
    const std::size_t i1 = std::min(H, static_cast<std::size_t>(std::ceil(top + o.size)) + 1);
    const std::size_t j1 = std::min(W, static_cast<std::size_t>(std::ceil(left + o.size)) + 1);
    for (std::size_t i = i0; i < i1; ++i)
      for (std::size_t j = j0; j < j1; ++j)
        if (o.covers(t, i, j))
          for (std::size_t c = 0; c < 3; ++c)
            clip.plane(0, c, l)[i * W + j] = o.color[c];
  }
  for (std::size_t c = 0; c < 3; ++c) {
    float *plane = clip.plane(0, c, l);
    for (std::size_t k = 0; k < H * W; ++k) {
      double v = plane[k] + drift;
      if (spec.photometric.noise_sigma > 0.0)
        v += spec.photometric.noise_sigma * gauss(noise_rng);
      plane[k] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
}

} // namespace

ClipSample generate_clip_at(const SceneSpec &spec,
                            const std::vector<double> &times) {
  if (times.size() < 2)
    throw TemporalError("generate_clip: need at least 2 frames");
  spec.check_fits(times);
  const std::size_t H = spec.height, W = spec.width, L = times.size();
  ClipSample s;
  s.scenario = spec.scenario;
  s.clip = Tensor5f(Dims5{1, 3, L, H, W});
  const Background bg = make_background(spec);
  for (std::size_t l = 0; l < L; ++l)
    render_frame(spec, bg, times[l],
                 static_cast<std::size_t>(std::llround(times[l] * 16.0)), s.clip, l);

  s.mask = Mask2(1, H, W);
  for (const SceneObject &o : spec.objects) {
    if (!o.moving())
      continue;
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j) {
        bool any = false, all = true;
        for (double t : times) {
          const bool in = o.covers(t, i, j);
          any = any || in;
          all = all && in;
        }
        if (any && !all)
          s.mask(0, i, j) = 1;
      }
  }
  s.refresh_fg_ratio();
  return s;
}

ClipSample generate_clip(const SceneSpec &spec, std::size_t length) {
  std::vector<double> times(length);
  for (std::size_t t = 0; t < length; ++t)
    times[t] = static_cast<double>(t);
  return generate_clip_at(spec, times);
}

ClipSample synthesize_static(const ClipSample &sample) {
  ClipSample out = sample;
  const Dims5 &d = sample.clip.dims();
  for (std::size_t c = 0; c < d.c; ++c) {
    const float *cur = sample.clip.plane(0, c, d.l - 1);
    for (std::size_t l = 0; l + 1 < d.l; ++l)
      std::copy(cur, cur + d.plane(), out.clip.plane(0, c, l));
  }
  std::fill(out.mask.data.begin(), out.mask.data.end(), std::uint8_t{0});
  out.fg_ratio = 0.0;
  if (!out.is_static())
    out.scenario += kStaticSuffix;
  return out;
}

std::vector<ScenarioSpec> standard_scenarios() {
  std::vector<ScenarioSpec> out;
  for (BackgroundKind bg : {BackgroundKind::static_texture,
                            BackgroundKind::dynamic_sinusoid,
                            BackgroundKind::noise_field}) {
    ScenarioSpec slow;
    slow.tag = to_string(bg) + "/slow";
    slow.background = bg;
    slow.speed_min = 0.4;
    slow.speed_max = 0.9;
    ScenarioSpec fast = slow;
    fast.tag = to_string(bg) + "/fast";
    fast.speed_min = 0.9;
    fast.speed_max = 1.6;
    out.push_back(slow);
    out.push_back(fast);
  }
  return out;
}

SceneSpec random_scene(const ScenarioSpec &sc, std::size_t height,
                       std::size_t width, double t_first, double t_last,
                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SceneSpec spec;
  spec.height = height;
  spec.width = width;
  spec.background = sc.background;
  spec.photometric = sc.photometric;
  spec.seed = seed;
  spec.scenario = sc.tag;
  const std::size_t span = sc.objects_max - sc.objects_min + 1;
  const std::size_t count =
      sc.objects_min + static_cast<std::size_t>(u(rng) * static_cast<double>(span)) % span;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t k = 0; k < count; ++k) {
    SceneObject o;
    o.shape = u(rng) < 0.5 ? ShapeKind::rect : ShapeKind::disk;
    o.size = std::round(sc.size_min + (sc.size_max - sc.size_min) * u(rng));
    for (float &c : o.color)
      c = static_cast<float>(u(rng));
    // Near-grey colours get a saturated red channel.
    if (std::abs(o.color[0] + o.color[1] + o.color[2] - 1.5f) < 0.45f)
      o.color[0] = o.color[0] > 0.5f ? 1.0f : 0.0f;
    if (u(rng) >= sc.stationary_prob) {
      const double speed = sc.speed_min + (sc.speed_max - sc.speed_min) * u(rng);
      const double angle = two_pi * u(rng);
      o.vy = speed * std::sin(angle);
      o.vx = speed * std::cos(angle);
    }
    // Place the object so its whole trajectory over [t_first, t_last] fits.
    const double dy0 = std::min(o.vy * t_first, o.vy * t_last);
    const double dy1 = std::max(o.vy * t_first, o.vy * t_last);
    const double dx0 = std::min(o.vx * t_first, o.vx * t_last);
    const double dx1 = std::max(o.vx * t_first, o.vx * t_last);
    const double room_y = static_cast<double>(height) - o.size - (dy1 - dy0);
    const double room_x = static_cast<double>(width) - o.size - (dx1 - dx0);
    if (room_y < 0.0 || room_x < 0.0) {
      // Trajectory cannot fit this canvas: keep the object stationary.
      o.vy = o.vx = 0.0;
      o.y = std::floor(u(rng) * (static_cast<double>(height) - o.size));
      o.x = std::floor(u(rng) * (static_cast<double>(width) - o.size));
    } else {
      o.y = std::floor(u(rng) * room_y) - dy0;
      o.x = std::floor(u(rng) * room_x) - dx0;
    }
    spec.objects.push_back(o);
  }
  return spec;
}

} // namespace rcnet

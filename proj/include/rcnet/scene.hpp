#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rcnet/tensor.hpp"

namespace rcnet {

/// One training/evaluation example: a (1, 3, L, H, W) clip in [0, 1] whose
/// last frame is current, and the change mask of that current frame.
struct ClipSample {
  Tensor5f clip;
  Mask2 mask; // (1, H, W)
  std::string scenario;
  double fg_ratio = 0.0;

  /// Synthesised-static samples carry the "-static" scenario suffix.
  bool is_static() const;
  void refresh_fg_ratio();
  bool operator==(const ClipSample &) const = default;
};

inline constexpr std::string_view kStaticSuffix = "-static";

enum class BackgroundKind { static_texture, dynamic_sinusoid, noise_field };
enum class ShapeKind { rect, disk };

std::string to_string(BackgroundKind k);
BackgroundKind parse_background(const std::string &s);

/// Axis-aligned square (rect) or inscribed disk of side `size`, top-left
/// corner at (y, x) at t = 0, moving at (vy, vx) pixels per frame.
struct SceneObject {
  ShapeKind shape = ShapeKind::rect;
  double size = 8.0;
  double y = 0.0, x = 0.0;
  double vy = 0.0, vx = 0.0;
  std::array<float, 3> color{1.0f, 1.0f, 1.0f};

  bool moving() const { return vy != 0.0 || vx != 0.0; }
  /// Pixel (i, j) belongs to the object at time t iff its centre is inside.
  bool covers(double t, std::size_t i, std::size_t j) const;
};

struct Photometric {
  double brightness_drift = 0.0; // added per frame
  double noise_sigma = 0.0;      // i.i.d. Gaussian per pixel and frame
};

struct SceneSpec {
  std::size_t height = 64, width = 64;
  BackgroundKind background = BackgroundKind::static_texture;
  std::vector<SceneObject> objects;
  Photometric photometric;
  std::uint64_t seed = 0;
  std::string scenario = "scene";

  /// Throws SpecError if an object leaves the canvas at any of `times`.
  void check_fits(const std::vector<double> &times) const;
};

/// Renders frames at t = 0..L-1 (last is current). The mask marks, for every
/// moving object, the pixels covered at some but not all of the rendered
/// times; stationary objects contribute nothing.
ClipSample generate_clip(const SceneSpec &spec, std::size_t length);
/// Same, at arbitrary ascending frame times (last one is current).
ClipSample generate_clip_at(const SceneSpec &spec,
                            const std::vector<double> &times);

/// Copies the current frame into every historical slot, clears the mask,
/// tags the scenario "-static". Idempotent.
ClipSample synthesize_static(const ClipSample &sample);

/// Recipe for random scenes of one scenario.
struct ScenarioSpec {
  std::string tag;
  BackgroundKind background = BackgroundKind::dynamic_sinusoid;
  double speed_min = 0.5, speed_max = 1.5; // px per frame
  std::size_t objects_min = 1, objects_max = 3;
  double size_min = 10.0, size_max = 20.0;
  double stationary_prob = 0.2; // chance an object does not move
  Photometric photometric{0.0, 0.01};
};

/// The six desk-scale scenarios: {static-texture, dynamic-sinusoid,
/// noise-field} x {slow, fast}.
std::vector<ScenarioSpec> standard_scenarios();

/// A random scene whose objects stay on the canvas over [t_first, t_last].
SceneSpec random_scene(const ScenarioSpec &sc, std::size_t height,
                       std::size_t width, double t_first, double t_last,
                       std::uint64_t seed);

} // namespace rcnet

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmgest/vec3.hpp"

namespace mmgest::scene {

enum class GestureClass {
  knock,
  left_swipe,
  right_swipe,
  rotate,
  interference_tiny,
  interference_walk_run,
  clutter_only,
};

inline constexpr int kGestureClassCount = 7;

std::string_view to_string(GestureClass label);
/// Parses the canonical snake_case name (as written in CSV files).
GestureClass parse_gesture_class(std::string_view name);

/// CLI preset names: knock, left-swipe, right-swipe, rotate, tiny, walk-run, clutter.
std::string_view preset_name(GestureClass label);
GestureClass parse_preset(std::string_view name);

/// Radar maximum unambiguous range of the reference sensor, in meters.
inline constexpr double kMaxSceneRange = 9.62;
/// 30 frames at 100 ms.
inline constexpr double kCaptureWindow = 3.0;

using PositionFn = std::function<Vec3(double)>;

struct ScattererTrack {
  PositionFn position;  // radar frame: x lateral, y boresight, z up
  double rcs = 1.0;
  double birth = 0.0;
  double death = kCaptureWindow;

  bool alive(double t) const { return t >= birth && t <= death; }
};

/// Start/end times of the raise, stroke and return segments of a hand gesture.
struct PhaseTimes {
  double raise_begin = 0.0;
  double stroke_begin = 0.0;
  double stroke_end = 0.0;
  double return_end = 0.0;
};

struct GestureScene {
  GestureClass label = GestureClass::clutter_only;
  std::vector<ScattererTrack> hand_tracks;
  std::vector<ScattererTrack> clutter_tracks;
  double duration = kCaptureWindow;
  Vec3 anchor;
  std::uint64_t seed = 0;
  std::optional<PhaseTimes> phases{};  // set for hand gestures (not walk-run / clutter)
};

struct Box {
  Vec3 lo;
  Vec3 hi;
  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
  }
};

struct SceneOptions {
  int scatterers_per_hand = 10;
  double jitter_sigma = 0.02;   // m
  double variation = 0.15;      // relative amplitude/timing spread
  int clutter_count = 4;
  Box clutter_extent{{-2.5, 1.0, -1.0}, {2.5, 6.0, 1.0}};
  double duration = kCaptureWindow;
};

/// Builds a hand gesture or interference scene around `anchor` (the hand rest
/// position). Deterministic for a fixed (label, anchor, seed, options).
GestureScene make_gesture_scene(GestureClass label, const Vec3& anchor, std::uint64_t seed,
                                const SceneOptions& options = {});

/// Static reflectors (furniture) uniformly placed inside `extent`, rcs log-uniform
/// over one decade.
std::vector<ScattererTrack> make_clutter(int n, const Box& extent, std::uint64_t seed);

/// Scene with clutter reflectors only.
GestureScene make_clutter_scene(std::uint64_t seed, const SceneOptions& options = {});

struct ScatterSample {
  Vec3 position;
  double radial_velocity = 0.0;  // m/s, positive = receding
  double rcs = 0.0;
};

/// One entry per live track at time t: hand tracks first, then clutter.
std::vector<ScatterSample> sample_scene(const GestureScene& scene, double t);

/// Radial velocity of a single track by central difference of its range.
double radial_velocity(const ScattererTrack& track, double t);

/// Text dump of the scene (header plus every track sampled every `dt` seconds),
/// printed with round-trip precision.
std::string serialize_scene(const GestureScene& scene, double dt = 0.05);

}  // namespace mmgest::scene

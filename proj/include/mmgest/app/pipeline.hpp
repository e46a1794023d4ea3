#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmgest/dsp_pipeline.hpp"
#include "mmgest/gesture_scene.hpp"
#include "mmgest/pointcloud.hpp"
#include "mmgest/radar_frontend.hpp"

namespace mmgest::app {

struct PipelineOptions {
  radar::ChirpConfig chirp;
  dsp::CfarConfig cfar;
  dsp::RangeDopplerOptions range_doppler;
  scene::SceneOptions scene;
  int max_attempts = 8;  // reseeds when a capture yields no points at all
};

/// Scene -> 30 frames of ADC data -> detected points per frame.
/// Frame j starts at t = j * frame_period; its noise seed is derived from `noise_seed`.
radar::AdcCube capture_frame(const scene::GestureScene& scene, const PipelineOptions& opts, std::uint64_t noise_seed,
                             int frame);
cloud::RawCapture capture_scene(const scene::GestureScene& scene, const PipelineOptions& opts,
                                std::uint64_t noise_seed, const std::string& sample_id);

/// Noise seed simulate_sample uses for a given scene seed.
std::uint64_t capture_noise_seed(std::uint64_t scene_seed);

struct SimulatedSample {
  cloud::RawCapture raw;
  std::optional<cloud::GestureSample> sample{};  // empty only for clutter-only scenes
  std::uint64_t seed = 0;                      // scene seed actually used
  int attempts = 1;
  std::size_t total_points = 0;
};

/// Builds the scene for `label` from `seed` and runs the full pipeline. Hand
/// scenes that produce no points are redrawn with derived seeds, up to
/// max_attempts; then EmptyGesture propagates.
SimulatedSample simulate_sample(scene::GestureClass label, const Vec3& anchor, std::uint64_t seed,
                                const std::string& sample_id, const PipelineOptions& opts);

/// One (class, anchor) item of an experiment preset.
struct PresetItem {
  scene::GestureClass label;
  Vec3 anchor;
};

inline constexpr double kDefaultAnchorRange = 2.4;  // 5th brick at 0.6 m per brick
inline constexpr double kNearAnchorRange = 1.8;     // 4th brick

/// Scene presets (knock, left-swipe, right-swipe, rotate, tiny, walk-run, clutter)
/// and the groups gestures, interference, all, distance-sweep.
std::vector<PresetItem> expand_preset(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace mmgest::app

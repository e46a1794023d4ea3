#include "mmgest/app/pipeline.hpp"

#include "mmgest/errors.hpp"
#include "mmgest/seed.hpp"

namespace mmgest::app {

namespace {

constexpr std::uint64_t kNoiseStream = 0x4e0;
constexpr std::uint64_t kRetryStream = 0x7e7;

}  // namespace

radar::AdcCube capture_frame(const scene::GestureScene& scene, const PipelineOptions& opts, std::uint64_t noise_seed,
                             int frame) {
  if (frame < 0 || frame >= cloud::kFrames) throw OutOfRange("frame index " + std::to_string(frame) + " outside [0, 29]");
  return radar::synthesize_frame(scene, opts.chirp, frame * opts.chirp.frame_period, opts.chirp.noise_std,
                                 derive_seed(noise_seed, static_cast<std::uint64_t>(frame)));
}

std::uint64_t capture_noise_seed(std::uint64_t scene_seed) { return derive_seed(scene_seed, kNoiseStream); }

cloud::RawCapture capture_scene(const scene::GestureScene& scene, const PipelineOptions& opts,
                                std::uint64_t noise_seed, const std::string& sample_id) {
  cloud::RawCapture raw;
  raw.sample_id = sample_id;
  raw.label = scene.label;
  for (int j = 0; j < cloud::kFrames; ++j) {
    const auto cube = capture_frame(scene, opts, noise_seed, j);
    raw.frames.push_back({j, dsp::extract_points(cube, opts.cfar, opts.range_doppler)});
  }
  return raw;
}

SimulatedSample simulate_sample(scene::GestureClass label, const Vec3& anchor, std::uint64_t seed,
                                const std::string& sample_id, const PipelineOptions& opts) {
  if (opts.max_attempts < 1) throw InvalidArgument("max_attempts must be >= 1");
  std::uint64_t current = seed;
  for (int attempt = 1;; ++attempt) {
    const auto sc = label == scene::GestureClass::clutter_only
                        ? scene::make_clutter_scene(current, opts.scene)
                        : scene::make_gesture_scene(label, anchor, current, opts.scene);
    SimulatedSample out;
    out.raw = capture_scene(sc, opts, capture_noise_seed(current), sample_id);
    out.seed = current;
    out.attempts = attempt;
    for (const auto& f : out.raw.frames) out.total_points += f.points.size();
    if (label == scene::GestureClass::clutter_only) {
      if (out.total_points > 0) out.sample = cloud::build_sample(out.raw.frames, label, sample_id, current);
      return out;
    }
    try {
      out.sample = cloud::build_sample(out.raw.frames, label, sample_id, current);
      return out;
    } catch (const EmptyGesture&) {
      if (attempt >= opts.max_attempts) {
        throw EmptyGesture(sample_id + ": no reflection points after " + std::to_string(attempt) + " scene draws");
      }
    }
    current = derive_seed(current, kRetryStream);
  }
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (int i = 0; i < scene::kGestureClassCount; ++i) {
    out.emplace_back(scene::preset_name(static_cast<scene::GestureClass>(i)));
  }
  for (const char* g : {"gestures", "interference", "all", "distance-sweep"}) out.emplace_back(g);
  return out;
}

std::vector<PresetItem> expand_preset(std::string_view name) {
  using scene::GestureClass;
  const Vec3 base{0.0, kDefaultAnchorRange, 0.0};
  const Vec3 near{0.0, kNearAnchorRange, 0.0};
  const GestureClass gestures[] = {GestureClass::knock, GestureClass::left_swipe, GestureClass::right_swipe,
                                   GestureClass::rotate};
  std::vector<PresetItem> out;
  if (name == "gestures") {
    for (auto g : gestures) out.push_back({g, base});
  } else if (name == "interference") {
    out = {{GestureClass::interference_tiny, base}, {GestureClass::interference_walk_run, base}};
  } else if (name == "all") {
    for (auto g : gestures) out.push_back({g, base});
    out.push_back({GestureClass::interference_tiny, base});
    out.push_back({GestureClass::interference_walk_run, base});
  } else if (name == "distance-sweep") {
    for (auto g : gestures) out.push_back({g, base});
    for (auto g : gestures) out.push_back({g, near});
  } else {
    try {
      out.push_back({scene::parse_preset(name), base});
    } catch (const InvalidArgument&) {
      std::string list;
      for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
      throw InvalidArgument("unknown preset '" + std::string(name) + "' (known: " + list + ")");
    }
  }
  return out;
}

}  // namespace mmgest::app

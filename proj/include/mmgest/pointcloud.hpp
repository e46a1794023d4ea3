#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mmgest/dsp_pipeline.hpp"
#include "mmgest/gesture_scene.hpp"

namespace mmgest::cloud {

inline constexpr int kFeatures = 5;   // X, Y, Z, V, I
inline constexpr int kFrames = 30;
inline constexpr int kSlots = 65;     // standard point + 64 deltas
inline constexpr int kMaxPointsPerFrame = kSlots - 1;
inline constexpr std::size_t kTensorSize = static_cast<std::size_t>(kFeatures) * kFrames * kSlots;

using dsp::DetectedPoint;

struct FramePoints {
  int frame_index = 0;
  std::vector<DetectedPoint> points;
};

/// Five features in tensor order (x, y, z, v, intensity).
using Features = std::array<double, kFeatures>;

Features features_of(const DetectedPoint& p);

struct StandardPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double v = 0.0;
  double intensity = 0.0;

  Features features() const { return {x, y, z, v, intensity}; }
  bool operator==(const StandardPoint&) const = default;
};

struct GestureSample {
  std::vector<double> tensor = std::vector<double>(kTensorSize, 0.0);  // [feature][frame][slot]
  std::array<int, kFrames> point_counts{};  // non-padding deltas per frame
  scene::GestureClass label = scene::GestureClass::knock;
  std::string sample_id;
  std::uint64_t seed = 0;

  static constexpr std::size_t index(int feature, int frame, int slot) {
    return (static_cast<std::size_t>(feature) * kFrames + frame) * kSlots + slot;
  }
  double& at(int feature, int frame, int slot) { return tensor[index(feature, frame, slot)]; }
  double at(int feature, int frame, int slot) const { return tensor[index(feature, frame, slot)]; }
};

/// Retention order: intensity descending, then (range bin, Doppler bin), then
/// coordinates, ascending. A strict weak ordering used for slot placement.
bool retention_before(const DetectedPoint& a, const DetectedPoint& b);

/// Keeps the 64 strongest points of every frame, sorted in retention order.
std::vector<FramePoints> retain_strongest(std::vector<FramePoints> frames);

StandardPoint standard_point(const std::vector<FramePoints>& frames);

/// Per-frame lists of point-minus-standard-point, in the input point order.
std::vector<std::vector<Features>> delta_points(const std::vector<FramePoints>& frames, const StandardPoint& p0);

/// Lays out exactly 30 frames: slot 0 holds p0, slots 1..64 the deltas of the
/// retained points in retention order, the rest zeros.
GestureSample assemble(const std::vector<FramePoints>& frames, const StandardPoint& p0,
                       const std::vector<std::vector<Features>>& deltas);

/// retain_strongest -> standard_point -> delta_points -> assemble.
GestureSample build_sample(const std::vector<FramePoints>& frames, scene::GestureClass label,
                           const std::string& sample_id, std::uint64_t seed);

inline constexpr const char* kCsvHeader = "sample_id,label,frame,slot,x,y,z,v,intensity";

/// One row per non-padding slot (slot 0 of every frame plus each retained delta).
void write_sample_csv(const GestureSample& sample, const std::filesystem::path& path);
GestureSample read_sample_csv(const std::filesystem::path& path);

struct RawCapture {
  std::string sample_id;
  scene::GestureClass label = scene::GestureClass::knock;
  std::vector<FramePoints> frames;  // always kFrames entries after reading
};

/// Detected points before centering; slot = index of the point in its frame.
void write_frames_csv(const RawCapture& capture, const std::filesystem::path& path);
RawCapture read_frames_csv(const std::filesystem::path& path);

}  // namespace mmgest::cloud

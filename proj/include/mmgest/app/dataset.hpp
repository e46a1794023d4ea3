#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mmgest/app/pipeline.hpp"

namespace mmgest::app {

inline constexpr int kManifestVersion = 1;

struct ManifestEntry {
  std::string sample_id;
  scene::GestureClass label = scene::GestureClass::knock;
  std::string preset;       // scene preset name of the label
  std::uint64_t seed = 0;   // scene seed actually used
  Vec3 anchor;
  double noise_std = 0.0;
  std::string csv;          // gesture tensor CSV, relative to the manifest; empty for point-free clutter
  std::string frames_csv;   // raw detections, optional
  std::string scene_file;   // scene dump, optional
  std::size_t points = 0;   // detections over all 30 frames
  int attempts = 1;
};

struct DatasetManifest {
  int format_version = kManifestVersion;
  std::string config_hash;
  std::string chirp_config;  // canonical config text
  std::vector<ManifestEntry> entries;
};

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);

/// Writes to a temporary file in the same directory, then renames.
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);
/// Parses and validates: unique ids, known labels, every referenced file present.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Reads every entry's tensor CSV and checks it against the entry.
std::vector<cloud::GestureSample> load_samples(const DatasetManifest& m, const std::filesystem::path& manifest_dir);

struct SampleJob {
  std::string sample_id;
  scene::GestureClass label;
  Vec3 anchor;
  std::uint64_t seed;
};

/// `count` jobs per preset item. Seeds depend on (seed, label, anchor, index) only,
/// so the same sample comes out of a single-class preset and a group preset.
std::vector<SampleJob> plan_jobs(std::string_view preset, int count, std::uint64_t seed);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Runs the jobs on `threads` workers; results are in job order and do not depend
/// on the thread count.
std::vector<SimulatedSample> run_jobs(const std::vector<SampleJob>& jobs, const PipelineOptions& opts,
                                      unsigned threads = 1, const ProgressFn& progress = {});

/// Labels of the samples, for splitting.
std::vector<scene::GestureClass> labels_of(const std::vector<cloud::GestureSample>& samples);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per class: shuffle the indices with a seed derived from (seed, class) and put
/// the first round(fraction * n) in train. Both lists come back sorted.
Split stratified_split(const std::vector<scene::GestureClass>& labels, double train_fraction, std::uint64_t seed);

template <class T>
std::vector<T> take(const std::vector<T>& all, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all.at(i));
  return out;
}

}  // namespace mmgest::app

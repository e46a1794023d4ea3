#include "mmgest/app/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "mmgest/errors.hpp"
#include "mmgest/seed.hpp"

namespace mmgest::app {

namespace fs = std::filesystem;
using nlohmann::json;

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["format_version"] = m.format_version;
  j["config_hash"] = m.config_hash;
  j["chirp_config"] = m.chirp_config;
  j["entries"] = json::array();
  for (const auto& e : m.entries) {
    json je;
    je["sample_id"] = e.sample_id;
    je["label"] = std::string(scene::to_string(e.label));
    je["preset"] = e.preset;
    je["seed"] = e.seed;
    je["anchor"] = {e.anchor.x, e.anchor.y, e.anchor.z};
    je["noise_std"] = e.noise_std;
    je["csv"] = e.csv;
    je["frames_csv"] = e.frames_csv;
    je["scene_file"] = e.scene_file;
    je["points"] = e.points;
    je["attempts"] = e.attempts;
    j["entries"].push_back(std::move(je));
  }
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what(), 1);
  }
  DatasetManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kManifestVersion) {
      throw InvalidArgument("unsupported manifest format version " + std::to_string(m.format_version));
    }
    m.config_hash = j.at("config_hash").get<std::string>();
    m.chirp_config = j.value("chirp_config", "");
    std::set<std::string> ids;
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.sample_id = je.at("sample_id").get<std::string>();
      if (!ids.insert(e.sample_id).second) throw InvalidArgument("duplicate sample_id '" + e.sample_id + "'");
      e.label = scene::parse_gesture_class(je.at("label").get<std::string>());
      e.preset = je.at("preset").get<std::string>();
      e.seed = je.at("seed").get<std::uint64_t>();
      const auto& a = je.at("anchor");
      if (!a.is_array() || a.size() != 3) throw InvalidArgument(e.sample_id + ": anchor must hold 3 numbers");
      e.anchor = {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
      e.noise_std = je.at("noise_std").get<double>();
      e.csv = je.at("csv").get<std::string>();
      e.frames_csv = je.value("frames_csv", "");
      e.scene_file = je.value("scene_file", "");
      e.points = je.value("points", std::size_t{0});
      e.attempts = je.value("attempts", 1);
      if (e.csv.empty() && e.label != scene::GestureClass::clutter_only) {
        throw InvalidArgument(e.sample_id + ": entry has no tensor CSV");
      }
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << manifest_to_json(m);
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move manifest into place at " + path.string() + ": " + ec.message());
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto m = manifest_from_json(ss.str());
  const fs::path dir = path.parent_path();
  for (const auto& e : m.entries) {
    for (const auto* rel : {&e.csv, &e.frames_csv, &e.scene_file}) {
      if (!rel->empty() && !fs::exists(dir / *rel)) {
        throw IoError(e.sample_id + ": referenced file " + (dir / *rel).string() + " is missing");
      }
    }
  }
  return m;
}

std::vector<cloud::GestureSample> load_samples(const DatasetManifest& m, const fs::path& manifest_dir) {
  std::vector<cloud::GestureSample> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) {
    if (e.csv.empty()) throw InvalidArgument(e.sample_id + ": clutter-only entry carries no gesture tensor");
    auto s = cloud::read_sample_csv(manifest_dir / e.csv);
    if (s.sample_id != e.sample_id || s.label != e.label) {
      throw InvalidArgument(e.sample_id + ": CSV content does not match its manifest entry");
    }
    s.seed = e.seed;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SampleJob> plan_jobs(std::string_view preset, int count, std::uint64_t seed) {
  if (count < 0) throw InvalidArgument("count must be >= 0");
  std::vector<SampleJob> jobs;
  for (const auto& item : expand_preset(preset)) {
    const auto mm = static_cast<long>(std::lround(item.anchor.y * 1000.0));
    const std::uint64_t stream = static_cast<std::uint64_t>(item.label) * 1000003ULL + static_cast<std::uint64_t>(mm);
    const std::uint64_t base = derive_seed(seed, stream);
    for (int i = 0; i < count; ++i) {
      char id[96];
      std::snprintf(id, sizeof id, "%s_%ldmm_%04d", std::string(scene::preset_name(item.label)).c_str(), mm, i);
      jobs.push_back({id, item.label, item.anchor, derive_seed(base, static_cast<std::uint64_t>(i))});
    }
  }
  return jobs;
}

std::vector<SimulatedSample> run_jobs(const std::vector<SampleJob>& jobs, const PipelineOptions& opts, unsigned threads,
                                      const ProgressFn& progress) {
  std::vector<SimulatedSample> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const auto& j = jobs[i];
        results[i] = simulate_sample(j.label, j.anchor, j.seed, j.sample_id, opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(++done, jobs.size());
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, jobs.size()))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::vector<scene::GestureClass> labels_of(const std::vector<cloud::GestureSample>& samples) {
  std::vector<scene::GestureClass> out;
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

Split stratified_split(const std::vector<scene::GestureClass>& labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw InvalidArgument("train fraction must lie in [0, 1]");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<int>(labels[i])].push_back(i);
  Split split;
  for (auto& [cls, idx] : by_class) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
    for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng() % (i + 1)]);
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(idx.size())));
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + n_train);
    split.test.insert(split.test.end(), idx.begin() + n_train, idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace mmgest::app

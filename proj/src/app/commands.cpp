#include "mmgest/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mmgest/errors.hpp"

namespace mmgest::app {

using nlohmann::json;

namespace {

void make_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

bool is_interference(scene::GestureClass c) {
  return c == scene::GestureClass::interference_tiny || c == scene::GestureClass::interference_walk_run;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Accuracy per anchor range, only when the evaluated entries span more than one.
std::string format_by_anchor(const DatasetManifest& m, const std::vector<cloud::GestureSample>& samples,
                             const std::vector<int>& predictions) {
  std::map<long, std::pair<long, long>> by_mm;  // range in mm -> (correct, total)
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& a = m.entries[i].anchor;
    auto& [correct, total] = by_mm[std::lround(1000.0 * std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z))];
    correct += predictions[i] == static_cast<int>(samples[i].label);
    ++total;
  }
  if (by_mm.size() < 2) return {};
  std::string out = "\nby anchor range:\n";
  for (auto it = by_mm.rbegin(); it != by_mm.rend(); ++it) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %.2f m  %.2f%% (%ld samples)\n", it->first / 1000.0,
                  100.0 * it->second.first / it->second.second, it->second.second);
    out += buf;
  }
  return out;
}

}  // namespace

DatasetManifest cmd_simulate(const SimulateOptions& opts, std::ostream& log) {
  PipelineOptions pipe;
  if (opts.config) pipe.chirp = radar::load_chirp_config(*opts.config);
  if (opts.noise_std) {
    pipe.chirp.noise_std = *opts.noise_std;
    pipe.chirp.validate();
  }
  const auto jobs = plan_jobs(opts.preset, opts.count, opts.seed);
  if (opts.dump_rd_frame && (*opts.dump_rd_frame < 0 || *opts.dump_rd_frame >= cloud::kFrames)) {
    throw InvalidArgument("--dump-rd frame must lie in [0, 29]");
  }

  make_dir(opts.out);
  // A stale manifest must not survive a partial rerun.
  std::error_code ec;
  fs::remove(opts.out / "manifest.json", ec);
  make_dir(opts.out / "samples");
  if (opts.raw) make_dir(opts.out / "raw");
  if (opts.scenes) make_dir(opts.out / "scenes");
  if (opts.dump_rd_frame) make_dir(opts.out / "rd");

  log << "simulating " << jobs.size() << " samples (preset " << opts.preset << ", seed " << opts.seed << ", "
      << opts.jobs << " worker" << (opts.jobs == 1 ? "" : "s") << ")\n";
  const auto results = run_jobs(jobs, pipe, opts.jobs, [&](std::size_t done, std::size_t total) {
    if (done == total || done % 20 == 0) log << "  " << done << "/" << total << "\n";
  });

  DatasetManifest m;
  m.config_hash = radar::config_hash(pipe.chirp);
  m.chirp_config = radar::to_config_text(pipe.chirp);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    const auto& res = results[i];
    ManifestEntry e;
    e.sample_id = job.sample_id;
    e.label = job.label;
    e.preset = std::string(scene::preset_name(job.label));
    e.seed = res.seed;
    e.anchor = job.anchor;
    e.noise_std = pipe.chirp.noise_std;
    e.points = res.total_points;
    e.attempts = res.attempts;
    if (res.sample) {
      e.csv = "samples/" + job.sample_id + ".csv";
      cloud::write_sample_csv(*res.sample, opts.out / e.csv);
    }
    if (opts.raw) {
      e.frames_csv = "raw/" + job.sample_id + "_frames.csv";
      cloud::write_frames_csv(res.raw, opts.out / e.frames_csv);
    }
    if (opts.scenes || opts.dump_rd_frame) {
      const auto sc = job.label == scene::GestureClass::clutter_only
                          ? scene::make_clutter_scene(res.seed, pipe.scene)
                          : scene::make_gesture_scene(job.label, job.anchor, res.seed, pipe.scene);
      if (opts.scenes) {
        e.scene_file = "scenes/" + job.sample_id + ".txt";
        write_text(opts.out / e.scene_file, scene::serialize_scene(sc));
      }
      if (opts.dump_rd_frame) {
        // same frame and noise the pipeline saw
        const auto cube = capture_frame(sc, pipe, capture_noise_seed(res.seed), *opts.dump_rd_frame);
        const auto rd = dsp::range_doppler(cube, pipe.range_doppler);
        dsp::write_rd_csv(rd, opts.out / "rd" / (job.sample_id + "_f" + std::to_string(*opts.dump_rd_frame) + ".csv"));
      }
    }
    m.entries.push_back(std::move(e));
  }
  save_manifest(m, opts.out / "manifest.json");
  log << "wrote " << m.entries.size() << " entries to " << (opts.out / "manifest.json").string() << "\n";
  return m;
}

TrainOutcome cmd_train(const TrainOptions& opts, std::ostream& log) {
  const auto manifest = load_manifest(opts.manifest);
  const auto dir = opts.manifest.parent_path();

  std::size_t classes = opts.classes;
  if (classes == 0) {
    classes = std::any_of(manifest.entries.begin(), manifest.entries.end(),
                          [](const ManifestEntry& e) { return is_interference(e.label); })
                  ? 6
                  : 4;
  }
  if (classes != 4 && classes != 6) throw InvalidArgument("classes must be 4 or 6");

  DatasetManifest used = manifest;
  used.entries.clear();
  std::size_t skipped = 0;
  for (const auto& e : manifest.entries) {
    if (static_cast<std::size_t>(e.label) < classes) {
      used.entries.push_back(e);
    } else {
      ++skipped;
    }
  }
  if (skipped) log << "skipping " << skipped << " entries outside the " << classes << "-class set\n";
  // Every sample is read and checked before any training step.
  const auto samples = load_samples(used, dir);
  if (samples.empty()) throw InvalidArgument("manifest holds no trainable samples");

  const auto split = stratified_split(labels_of(samples), opts.train_fraction, opts.split_seed);
  const auto train_set = take(samples, split.train);
  if (train_set.empty()) throw InvalidArgument("training split is empty");

  nn::ModelConfig mc = opts.model;
  mc.n_classes = classes;
  mc.seed = opts.seed;
  nn::TrainConfig tc = opts.train;
  tc.seed = opts.seed;

  log << "training " << classes << "-class model on " << train_set.size() << " samples (" << split.test.size()
      << " held out, split_seed " << opts.split_seed << ")\n";
  nn::GestureNet model(mc);
  const auto history = nn::train(model, train_set, tc, [&](const nn::EpochStats& e) {
    if (e.epoch == 1 || e.epoch % 10 == 0) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "  epoch %zu loss %.5f acc %.4f\n", e.epoch, e.loss, e.accuracy);
      log << buf;
    }
  });

  make_dir(opts.out);
  nn::CheckpointMeta meta{mc, tc.seed, static_cast<std::uint32_t>(history.size()), manifest.config_hash};
  nn::save_checkpoint(model, meta, opts.out / "model.ckpt");
  write_history_csv(history, opts.out / "history.csv");

  json sj;
  sj["split_seed"] = opts.split_seed;
  sj["train_fraction"] = opts.train_fraction;
  sj["classes"] = classes;
  sj["train"] = json::array();
  sj["test"] = json::array();
  for (auto i : split.train) sj["train"].push_back(samples[i].sample_id);
  for (auto i : split.test) sj["test"].push_back(samples[i].sample_id);
  write_text(opts.out / "split.json", sj.dump(2) + "\n");

  log << "final epoch " << history.back().epoch << ": loss " << history.back().loss << ", accuracy "
      << history.back().accuracy << "\n";
  return {history, classes, train_set.size(), split.test.size()};
}

EvalOutcome cmd_eval(const EvalOptions& opts, std::ostream& log) {
  if (opts.subset != "test" && opts.subset != "train" && opts.subset != "unseen" && opts.subset != "all") {
    throw InvalidArgument("subset must be test, train, unseen or all");
  }
  auto ck = nn::load_checkpoint(opts.checkpoint);
  const auto manifest = load_manifest(opts.manifest);
  if (!ck.meta.config_hash.empty() && ck.meta.config_hash != manifest.config_hash) {
    log << "warning: checkpoint was trained on chirp config " << ck.meta.config_hash << ", manifest uses "
        << manifest.config_hash << "\n";
  }

  std::vector<std::string> header;
  DatasetManifest chosen = manifest;
  if (opts.subset != "all") {
    const fs::path split_path = opts.split_file ? *opts.split_file : opts.checkpoint.parent_path() / "split.json";
    json sj;
    try {
      sj = json::parse(read_file(split_path));
    } catch (const json::exception& e) {
      throw ParseError(split_path.string() + ": " + e.what(), 1);
    }
    const bool unseen = opts.subset == "unseen";
    std::set<std::string> ids;
    try {
      for (const auto& id : sj.at(unseen ? "train" : opts.subset)) ids.insert(id.get<std::string>());
    } catch (const json::exception& e) {
      throw ParseError(split_path.string() + ": " + e.what(), 1);
    }
    chosen.entries.clear();
    for (const auto& e : manifest.entries) {
      // unseen: everything the model was not trained on, e.g. another manifest
      if (unseen ? !ids.count(e.sample_id) : ids.erase(e.sample_id) > 0) chosen.entries.push_back(e);
    }
    if (!unseen && !ids.empty()) {
      throw InvalidArgument("split lists " + std::to_string(ids.size()) + " ids missing from the manifest");
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "split: %.0f/%.0f stratified by class, split_seed %llu, subset %s",
                  100.0 * sj.value("train_fraction", 0.8), 100.0 * (1.0 - sj.value("train_fraction", 0.8)),
                  static_cast<unsigned long long>(sj.value("split_seed", std::uint64_t{0})), opts.subset.c_str());
    header.emplace_back(buf);
  } else {
    header.emplace_back("split: none, every manifest entry evaluated");
  }
  header.push_back("checkpoint: " + opts.checkpoint.string() + " (" + std::to_string(ck.meta.model.n_classes) +
                   " classes, " + std::to_string(ck.meta.epoch) + " epochs)");
  header.push_back("manifest: " + opts.manifest.string() + " (config " + manifest.config_hash + ")");

  const auto samples = load_samples(chosen, opts.manifest.parent_path());
  auto evaluation = nn::evaluate(ck.model, samples);
  EvalOutcome outcome{std::move(evaluation), ""};
  outcome.table = format_confusion(outcome.evaluation.confusion, header);
  outcome.table += format_by_anchor(chosen, samples, outcome.evaluation.predictions);
  if (opts.out) {
    make_dir(*opts.out);
    write_text(*opts.out / "confusion.txt", outcome.table);
    write_confusion_csv(outcome.evaluation.confusion, *opts.out / "confusion.csv");
  }
  return outcome;
}

nn::History cmd_report(const ReportOptions& opts, std::ostream& log) {
  const auto history = read_history_csv(opts.history);
  make_dir(opts.out);
  write_history_csv(history, opts.out / "history.csv");
  write_history_svg(history, opts.out / "curves.svg");
  log << "wrote " << history.size() << " epochs to " << (opts.out / "history.csv").string() << " and "
      << (opts.out / "curves.svg").string() << "\n";
  return history;
}

}  // namespace mmgest::app

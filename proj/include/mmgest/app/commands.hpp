#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "mmgest/app/dataset.hpp"
#include "mmgest/app/report.hpp"
#include "mmgest/nn/checkpoint.hpp"

namespace mmgest::app {

namespace fs = std::filesystem;

struct SimulateOptions {
  std::string preset = "gestures";
  int count = 50;                      // per preset item
  std::uint64_t seed = 42;
  std::optional<fs::path> config{};    // chirp config file
  std::optional<double> noise_std{};   // overrides the config value
  fs::path out = "data";
  unsigned jobs = 1;
  bool raw = false;                    // also write the raw detections
  bool scenes = false;                 // also write scene dumps
  std::optional<int> dump_rd_frame{};  // range-Doppler power CSV of this frame per sample
};

/// Writes samples/<id>.csv (and optional extras), then manifest.json last.
DatasetManifest cmd_simulate(const SimulateOptions& opts, std::ostream& log);

struct TrainOptions {
  fs::path manifest;
  fs::path out = "run";
  std::uint64_t seed = 0;              // weight init and shuffling
  std::uint64_t split_seed = 0;
  double train_fraction = 0.8;
  std::size_t classes = 0;             // 0: 6 if the manifest has interference samples, else 4
  nn::TrainConfig train{};             // seed is overwritten from `seed`
  nn::ModelConfig model{};             // n_classes and seed are overwritten
};

struct TrainOutcome {
  nn::History history;
  std::size_t classes = 0;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
};

/// Writes model.ckpt, history.csv and split.json into `out`.
TrainOutcome cmd_train(const TrainOptions& opts, std::ostream& log);

struct EvalOptions {
  fs::path manifest;
  fs::path checkpoint;
  std::string subset = "test";         // test | train | unseen | all
  std::optional<fs::path> split_file{};  // default: split.json beside the checkpoint
  std::optional<fs::path> out{};       // confusion.txt / confusion.csv
};

struct EvalOutcome {
  nn::Evaluation evaluation;
  std::string table;
};

EvalOutcome cmd_eval(const EvalOptions& opts, std::ostream& log);

struct ReportOptions {
  fs::path history;
  fs::path out = "report";
};

/// Writes history.csv (one row per epoch) and curves.svg.
nn::History cmd_report(const ReportOptions& opts, std::ostream& log);

}  // namespace mmgest::app

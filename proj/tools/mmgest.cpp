// mmgest: synthetic mmWave gesture datasets, training and evaluation.
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "mmgest/app/commands.hpp"
#include "mmgest/errors.hpp"

using namespace mmgest;

int main(int argc, char** argv) {
  CLI::App cli{"Synthetic mmWave radar gesture pipeline"};
  cli.require_subcommand(1);
  cli.set_help_all_flag("--help-all", "Help for every subcommand");

  app::SimulateOptions sim;
  std::string config_path;
  double noise = -1.0;
  int dump_rd = -1;
  auto* c_sim = cli.add_subcommand("simulate", "Synthesize scenes, run the radar pipeline, write CSVs and a manifest");
  c_sim->add_option("--preset", sim.preset, "Scene preset or group")->capture_default_str();
  c_sim->add_option("--count", sim.count, "Samples per preset item")->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "Base seed")->capture_default_str();
  c_sim->add_option("--config", config_path, "Chirp config file (key=value lines)");
  c_sim->add_option("--noise", noise, "Override the config noise_std");
  c_sim->add_option("--out", sim.out, "Output directory")->capture_default_str();
  sim.jobs = std::max(1u, std::thread::hardware_concurrency());
  c_sim->add_option("--jobs", sim.jobs, "Worker threads (output does not depend on this)");
  c_sim->add_flag("--raw", sim.raw, "Also write raw per-frame detections");
  c_sim->add_flag("--scenes", sim.scenes, "Also write scene dumps");
  c_sim->add_option("--dump-rd", dump_rd, "Write the range-Doppler power map of this frame for every sample");

  app::TrainOptions tr;
  std::optional<double> stop_at;
  auto* c_train = cli.add_subcommand("train", "Train the five-branch classifier on a manifest");
  c_train->add_option("--manifest", tr.manifest, "Dataset manifest")->required();
  c_train->add_option("--out", tr.out, "Run directory")->capture_default_str();
  c_train->add_option("--seed", tr.seed, "Weight-init and shuffling seed")->capture_default_str();
  c_train->add_option("--split-seed", tr.split_seed, "Train/test split seed")->capture_default_str();
  c_train->add_option("--classes", tr.classes, "4 or 6 (default: 6 when interference samples are present)");
  c_train->add_option("--epochs", tr.train.epochs)->capture_default_str();
  c_train->add_option("--batch-size", tr.train.batch_size)->capture_default_str();
  c_train->add_option("--lr", tr.train.lr)->capture_default_str();
  c_train->add_option("--lr-decay", tr.train.lr_decay)->capture_default_str();
  c_train->add_option("--decay-every", tr.train.decay_every, "Epochs between learning-rate decays")->capture_default_str();
  c_train->add_option("--stop-at-accuracy", stop_at, "Stop once an epoch's training accuracy reaches this");
  c_train->add_option("--blocks", tr.model.blocks_per_branch, "Residual blocks per branch")->capture_default_str();

  app::EvalOptions ev;
  std::string split_file;
  std::string eval_out;
  auto* c_eval = cli.add_subcommand("eval", "Confusion matrix of a checkpoint on a manifest");
  c_eval->add_option("--manifest", ev.manifest, "Dataset manifest")->required();
  c_eval->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  c_eval->add_option("--subset", ev.subset, "test, train, unseen (not trained on) or all")->capture_default_str()->check(CLI::IsMember({"test", "train", "unseen", "all"}));
  c_eval->add_option("--split", split_file, "split.json (default: beside the checkpoint)");
  c_eval->add_option("--out", eval_out, "Directory for confusion.txt and confusion.csv");

  app::ReportOptions rep;
  auto* c_report = cli.add_subcommand("report", "Loss/accuracy curves from a training history");
  c_report->add_option("--history", rep.history, "history.csv written by train")->required();
  c_report->add_option("--out", rep.out, "Output directory")->capture_default_str();

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 64;
  }

  try {
    if (*c_sim) {
      if (!config_path.empty()) sim.config = config_path;
      if (noise >= 0.0) sim.noise_std = noise;
      if (dump_rd >= 0) sim.dump_rd_frame = dump_rd;
      app::cmd_simulate(sim, std::cerr);
    } else if (*c_train) {
      tr.train.stop_at_accuracy = stop_at;
      app::cmd_train(tr, std::cerr);
    } else if (*c_eval) {
      if (!split_file.empty()) ev.split_file = split_file;
      if (!eval_out.empty()) ev.out = eval_out;
      std::cout << app::cmd_eval(ev, std::cerr).table;
    } else if (*c_report) {
      app::cmd_report(rep, std::cerr);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mmgest/nn/model.hpp"

namespace mmgest::nn {

struct TrainConfig {
  std::size_t batch_size = 64;  // clipped to the dataset size
  std::size_t epochs = 200;
  double lr = 1e-3;
  double lr_decay = 0.1;
  std::size_t decay_every = 200;  // lr *= lr_decay after every decay_every epochs
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;  // shuffling
  std::optional<double> stop_at_accuracy{};  // stop once an epoch's train accuracy reaches this

  void validate() const;
  double lr_at(std::size_t epoch) const;  // epoch is 1-based
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, double beta1, double beta2, double eps);
  void step(double lr);
  std::size_t steps() const { return t_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;  // on the training minibatches of this epoch
  double lr = 0.0;
};

using History = std::vector<EpochStats>;
using EpochCallback = std::function<void(const EpochStats&)>;

/// Minibatch Adam on softmax cross-entropy. Single-threaded and bitwise
/// deterministic for a fixed model seed and cfg.seed.
History train(GestureNet& model, const std::vector<cloud::GestureSample>& data, const TrainConfig& cfg,
              const EpochCallback& on_epoch = {});

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);

  void add(int truth, int predicted);
  std::size_t classes() const { return n_; }
  long count(int truth, int predicted) const { return counts_[truth * n_ + predicted]; }
  long row_total(int truth) const;
  long total() const;
  /// Row-normalized fraction; 0 for classes with no samples.
  double fraction(int truth, int predicted) const;
  double accuracy() const;
  double class_accuracy(int truth) const;

 private:
  std::size_t n_;
  std::vector<long> counts_;
};

ConfusionMatrix confusion_from(const std::vector<int>& truth, const std::vector<int>& predicted, std::size_t classes);

struct Evaluation {
  ConfusionMatrix confusion;
  std::vector<int> predictions;
  double accuracy() const { return confusion.accuracy(); }
};

Evaluation evaluate(GestureNet& model, const std::vector<cloud::GestureSample>& data);

}  // namespace mmgest::nn

#include "mmgest/nn/train.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "mmgest/errors.hpp"

namespace mmgest::nn {

void TrainConfig::validate() const {
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (epochs == 0) throw InvalidArgument("epochs must be positive");
  if (!(lr > 0.0) || !(lr_decay > 0.0) || decay_every == 0) throw InvalidArgument("learning-rate schedule must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw InvalidArgument("Adam betas must lie in (0, 1) and eps must be positive");
  }
}

double TrainConfig::lr_at(std::size_t epoch) const {
  const auto decays = static_cast<double>((epoch - 1) / decay_every);
  return lr * std::pow(lr_decay, decays);
}

Adam::Adam(std::vector<Parameter*> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto* p : params_) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    double* w = params_[k]->value.data();
    const double* g = params_[k]->grad.data();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

namespace {

void check_labels(const std::vector<cloud::GestureSample>& data, std::size_t classes) {
  for (const auto& s : data) {
    const auto idx = static_cast<std::size_t>(s.label);
    if (idx >= classes) {
      throw InvalidArgument("sample " + s.sample_id + " has label " + std::string(scene::to_string(s.label)) +
                            " outside the model's " + std::to_string(classes) + " classes");
    }
  }
}

}  // namespace

History train(GestureNet& model, const std::vector<cloud::GestureSample>& data, const TrainConfig& cfg,
              const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.empty()) throw InvalidArgument("cannot train on an empty dataset");
  check_labels(data, model.config().n_classes);

  const std::size_t batch = std::min(cfg.batch_size, data.size());
  Adam adam(model.parameters(), cfg.beta1, cfg.beta2, cfg.eps);
  SoftmaxCrossEntropy ce;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  History history;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Fisher-Yates with a fixed draw rule so the order is the same on every standard library.
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    const double lr = cfg.lr_at(epoch);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<const cloud::GestureSample*> chunk;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        chunk.push_back(&data[order[i]]);
        labels.push_back(static_cast<int>(data[order[i]].label));
      }
      model.zero_grad();
      Tensor scores;
      double loss;
      try {
        scores = model.forward(batch_tensor(chunk), true);
        loss = ce.forward(scores, labels);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      }
      if (!std::isfinite(loss)) throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": loss is not finite");
      model.backward(ce.backward());
      adam.step(lr);
      loss_sum += loss * static_cast<double>(end - start);
      const auto pred = argmax_rows(scores);
      for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
    }
    EpochStats stats{epoch, loss_sum / data.size(), static_cast<double>(correct) / data.size(), lr};
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (cfg.stop_at_accuracy && stats.accuracy >= *cfg.stop_at_accuracy) break;
  }
  return history;
}

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : n_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw InvalidArgument("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(int truth, int predicted) {
  if (truth < 0 || predicted < 0 || static_cast<std::size_t>(truth) >= n_ || static_cast<std::size_t>(predicted) >= n_) {
    throw InvalidArgument("class index outside the confusion matrix");
  }
  ++counts_[truth * n_ + predicted];
}

long ConfusionMatrix::row_total(int truth) const {
  long t = 0;
  for (std::size_t j = 0; j < n_; ++j) t += counts_[truth * n_ + j];
  return t;
}

long ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), 0L); }

double ConfusionMatrix::fraction(int truth, int predicted) const {
  const long t = row_total(truth);
  return t ? static_cast<double>(count(truth, predicted)) / t : 0.0;
}

double ConfusionMatrix::accuracy() const {
  const long t = total();
  if (!t) return 0.0;
  long hit = 0;
  for (std::size_t i = 0; i < n_; ++i) hit += counts_[i * n_ + i];
  return static_cast<double>(hit) / t;
}

double ConfusionMatrix::class_accuracy(int truth) const { return fraction(truth, truth); }

ConfusionMatrix confusion_from(const std::vector<int>& truth, const std::vector<int>& predicted, std::size_t classes) {
  if (truth.size() != predicted.size()) throw InvalidArgument("truth and prediction lists differ in length");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

Evaluation evaluate(GestureNet& model, const std::vector<cloud::GestureSample>& data) {
  if (data.empty()) throw InvalidArgument("cannot evaluate on an empty dataset");
  const std::size_t classes = model.config().n_classes;
  check_labels(data, classes);
  auto pred = predict(model, data);
  std::vector<int> truth;
  for (const auto& s : data) truth.push_back(static_cast<int>(s.label));
  return {confusion_from(truth, pred, classes), std::move(pred)};
}

}  // namespace mmgest::nn

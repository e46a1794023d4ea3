#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mmgest/nn/layers.hpp"
#include "mmgest/pointcloud.hpp"

namespace mmgest::nn {

struct ModelConfig {
  std::size_t n_classes = 4;          // 4 gestures, or 6 with the interference classes
  std::size_t stem_channels = 16;
  std::size_t block_channels = 32;
  std::size_t blocks_per_branch = 1;  // first block has stride 2, the rest stride 1
  std::uint64_t seed = 0;             // weight init

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

inline constexpr std::size_t kBranches = cloud::kFeatures;

/// One branch per feature plane:
/// conv7x7/2 -> bn -> relu -> maxpool3x3/2 -> residual block(s).
class Branch : public Sequential {
 public:
  Branch(std::string name, const ModelConfig& cfg);
};

/// Five independent branches, channel concat, conv3x3 + bn + relu, flatten, linear.
class GestureNet {
 public:
  explicit GestureNet(const ModelConfig& cfg);

  /// x: (N, 5, 30, 65) -> scores (N, n_classes).
  Tensor forward(const Tensor& x, bool training);
  /// Gradient of the loss w.r.t. the scores; returns the input gradient.
  Tensor backward(const Tensor& grad_scores);

  std::vector<Parameter*> parameters();
  std::vector<Buffer> buffers();
  void zero_grad();

  /// Per-branch outputs of the last forward call, before concatenation.
  const std::vector<Tensor>& branch_outputs() const { return branch_outputs_; }
  const ModelConfig& config() const { return cfg_; }
  std::size_t flattened_width() const { return flat_width_; }

 private:
  ModelConfig cfg_;
  std::vector<std::unique_ptr<Branch>> branches_;
  std::unique_ptr<Sequential> combine_;
  std::unique_ptr<Linear> classifier_;
  std::vector<Tensor> branch_outputs_;
  Shape branch_shape_;
  std::size_t flat_width_ = 0;
};

/// Stacks samples into an (N, 5, 30, 65) batch.
Tensor batch_tensor(const std::vector<const cloud::GestureSample*>& samples);

/// Index of the largest score per row (first on ties).
std::vector<int> argmax_rows(const Tensor& scores);

/// Eval-mode predictions in batches.
std::vector<int> predict(GestureNet& model, const std::vector<cloud::GestureSample>& samples, std::size_t batch = 64);

}  // namespace mmgest::nn

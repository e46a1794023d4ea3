#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mmgest/nn/tensor.hpp"

namespace mmgest::nn {

/// Portable uniform draw in [lo, hi) (53 random bits).
double uniform(std::mt19937_64& rng, double lo, double hi);

/// Batched layer on (N, ...) tensors. forward() caches what backward() needs;
/// backward() adds parameter gradients and returns the input gradient.
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  virtual Tensor forward(const Tensor& x, bool training) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual std::vector<Buffer> buffers() { return {}; }
  virtual void initialize(std::mt19937_64&) {}

  const std::string& name() const { return name_; }

 protected:
  std::string name_;
};

struct Conv2dSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool bias = true;
};

/// Square-kernel 2-D convolution on (N, C, H, W), im2col + GEMM.
class Conv2d : public Layer {
 public:
  Conv2d(std::string name, Conv2dSpec spec);

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override;
  /// Kaiming-uniform on fan-in, zero bias.
  void initialize(std::mt19937_64& rng) override;

  Shape output_shape(const Shape& input) const;
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Conv2dSpec& spec() const { return spec_; }

 private:
  Conv2dSpec spec_;
  Parameter weight_;  // (out, in, k, k)
  Parameter bias_;    // (out)
  Shape in_shape_;
  std::vector<double> cols_;
};

class BatchNorm2d : public Layer {
 public:
  BatchNorm2d(std::string name, std::size_t channels, double momentum = 0.1, double eps = 1e-5);

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<Buffer> buffers() override;
  void initialize(std::mt19937_64& rng) override;

  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }
  Tensor& running_mean() { return running_mean_; }
  Tensor& running_var() { return running_var_; }

 private:
  std::size_t channels_;
  double momentum_;
  double eps_;
  Parameter gamma_;
  Parameter beta_;
  Tensor running_mean_;
  Tensor running_var_;
  Tensor xhat_;
  std::vector<double> inv_std_;
  bool training_ = true;
};

class ReLU : public Layer {
 public:
  using Layer::Layer;
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor input_;
};

/// Max pooling with -inf padding; ties go to the first element in scan order.
class MaxPool2d : public Layer {
 public:
  MaxPool2d(std::string name, std::size_t kernel, std::size_t stride, std::size_t padding);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& input) const;

 private:
  std::size_t kernel_, stride_, padding_;
  Shape in_shape_;
  std::vector<std::size_t> argmax_;
};

/// (N, ...) -> (N, prod(...))
class Flatten : public Layer {
 public:
  using Layer::Layer;
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Shape in_shape_;
};

/// y = x W^T + b on (N, in).
class Linear : public Layer {
 public:
  Linear(std::string name, std::size_t in_features, std::size_t out_features);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void initialize(std::mt19937_64& rng) override;

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  std::size_t in_, out_;
  Parameter weight_;  // (out, in)
  Parameter bias_;
  Tensor input_;
};

/// Ordered container; checks every intermediate for NaN/Inf.
class Sequential : public Layer {
 public:
  using Layer::Layer;

  template <class T, class... Args>
  T& add(Args&&... args) {
    auto layer = std::make_unique<T>(std::forward<Args>(args)...);
    T& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override;
  std::vector<Buffer> buffers() override;
  void initialize(std::mt19937_64& rng) override;

  std::size_t size() const { return layers_.size(); }
  Layer& operator[](std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// conv3x3(stride) -> bn -> relu -> conv3x3 -> bn, plus a shortcut
/// (1x1 strided conv + bn when the shape changes, identity otherwise),
/// followed by relu.
class ResidualBlock : public Layer {
 public:
  ResidualBlock(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t stride);

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override;
  std::vector<Buffer> buffers() override;
  void initialize(std::mt19937_64& rng) override;

  bool has_projection() const { return projection_ != nullptr; }
  Conv2d& conv1() { return conv1_; }
  Conv2d& conv2() { return conv2_; }
  BatchNorm2d& bn1() { return bn1_; }
  BatchNorm2d& bn2() { return bn2_; }

 private:
  Conv2d conv1_;
  BatchNorm2d bn1_;
  ReLU relu1_;
  Conv2d conv2_;
  BatchNorm2d bn2_;
  std::unique_ptr<Conv2d> projection_;
  std::unique_ptr<BatchNorm2d> projection_bn_;
  Tensor sum_;
};

/// Mean softmax cross-entropy over a batch of (N, C) scores.
class SoftmaxCrossEntropy {
 public:
  double forward(const Tensor& scores, const std::vector<int>& labels);
  /// d(loss)/d(scores) for the last forward call.
  Tensor backward() const;
  const Tensor& probabilities() const { return probs_; }

 private:
  Tensor probs_;
  std::vector<int> labels_;
};

}  // namespace mmgest::nn

#include "mmgest/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmgest/errors.hpp"
#include "mmgest/nn/gemm.hpp"

namespace mmgest::nn {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

namespace {

void expect_rank(const Tensor& x, std::size_t rank, const std::string& who) {
  if (x.rank() != rank) {
    throw ShapeError(who + ": expected a rank-" + std::to_string(rank) + " input, got " + shape_string(x.shape()));
  }
}

std::size_t pooled(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad, const std::string& who) {
  if (in + 2 * pad < kernel) throw ShapeError(who + ": input extent " + std::to_string(in) + " smaller than kernel");
  return (in + 2 * pad - kernel) / stride + 1;
}

}  // namespace

// ---- Conv2d

Conv2d::Conv2d(std::string name, Conv2dSpec spec)
    : Layer(std::move(name)),
      spec_(spec),
      weight_(name_ + ".weight", {spec.out_channels, spec.in_channels, spec.kernel, spec.kernel}),
      bias_(name_ + ".bias", {spec.bias ? spec.out_channels : 0}) {
  if (spec.in_channels == 0 || spec.out_channels == 0 || spec.kernel == 0 || spec.stride == 0) {
    throw InvalidArgument(name_ + ": channels, kernel and stride must be positive");
  }
}

std::vector<Parameter*> Conv2d::parameters() {
  if (spec_.bias) return {&weight_, &bias_};
  return {&weight_};
}

void Conv2d::initialize(std::mt19937_64& rng) {
  const double fan_in = static_cast<double>(spec_.in_channels * spec_.kernel * spec_.kernel);
  const double bound = std::sqrt(6.0 / fan_in);
  for (auto& w : weight_.value.values()) w = uniform(rng, -bound, bound);
  bias_.value.fill(0.0);
}

Shape Conv2d::output_shape(const Shape& in) const {
  if (in.size() != 4 || in[1] != spec_.in_channels) {
    throw ShapeError(name_ + ": expected input (N, " + std::to_string(spec_.in_channels) + ", H, W), got " +
                     shape_string(in));
  }
  return {in[0], spec_.out_channels, pooled(in[2], spec_.kernel, spec_.stride, spec_.padding, name_),
          pooled(in[3], spec_.kernel, spec_.stride, spec_.padding, name_)};
}

Tensor Conv2d::forward(const Tensor& x, bool) {
  const Shape out_shape = output_shape(x.shape());
  in_shape_ = x.shape();
  const std::size_t n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
  const std::size_t oc = out_shape[1], oh = out_shape[2], ow = out_shape[3];
  const std::size_t k = spec_.kernel, s = spec_.stride;
  const auto pad = static_cast<std::ptrdiff_t>(spec_.padding);
  const std::size_t plane = oh * ow;
  const std::size_t np = n * plane;
  const std::size_t depth = c * k * k;

  cols_.assign(depth * np, 0.0);
  const double* xd = x.data();
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        double* dst = cols_.data() + ((ci * k + ki) * k + kj) * np;
        for (std::size_t b = 0; b < n; ++b) {
          const double* src = xd + (b * c + ci) * h * w;
          for (std::size_t i = 0; i < oh; ++i) {
            const std::ptrdiff_t row = static_cast<std::ptrdiff_t>(i * s + ki) - pad;
            double* out = dst + b * plane + i * ow;
            if (row < 0 || row >= static_cast<std::ptrdiff_t>(h)) continue;
            const double* line = src + row * w;
            for (std::size_t j = 0; j < ow; ++j) {
              const std::ptrdiff_t col = static_cast<std::ptrdiff_t>(j * s + kj) - pad;
              if (col >= 0 && col < static_cast<std::ptrdiff_t>(w)) out[j] = line[col];
            }
          }
        }
      }
    }
  }

  std::vector<double> tmp(oc * np);
  gemm_nn(oc, np, depth, weight_.value.data(), cols_.data(), tmp.data(), false);

  Tensor y(out_shape);
  double* yd = y.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < oc; ++o) {
      const double bias = spec_.bias ? bias_.value[o] : 0.0;
      const double* src = tmp.data() + o * np + b * plane;
      double* dst = yd + (b * oc + o) * plane;
      for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] + bias;
    }
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const Shape out_shape = output_shape(in_shape_);
  expect_shape(grad_out, out_shape, name_ + " backward");
  const std::size_t n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
  const std::size_t oc = out_shape[1], oh = out_shape[2], ow = out_shape[3];
  const std::size_t k = spec_.kernel, s = spec_.stride;
  const auto pad = static_cast<std::ptrdiff_t>(spec_.padding);
  const std::size_t plane = oh * ow;
  const std::size_t np = n * plane;
  const std::size_t depth = c * k * k;

  // (N, O, P) -> (O, N*P)
  std::vector<double> g(oc * np);
  const double* gd = grad_out.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < oc; ++o) {
      std::copy_n(gd + (b * oc + o) * plane, plane, g.data() + o * np + b * plane);
    }
  }
  if (spec_.bias) {
    for (std::size_t o = 0; o < oc; ++o) {
      double acc = 0.0;
      for (std::size_t p = 0; p < np; ++p) acc += g[o * np + p];
      bias_.grad[o] += acc;
    }
  }
  gemm_nt(oc, depth, np, g.data(), cols_.data(), weight_.grad.data(), true);

  std::vector<double> dcols(depth * np);
  gemm_tn(depth, np, oc, weight_.value.data(), g.data(), dcols.data(), false);

  Tensor dx(in_shape_);
  double* dxd = dx.data();
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const double* src = dcols.data() + ((ci * k + ki) * k + kj) * np;
        for (std::size_t b = 0; b < n; ++b) {
          double* dst = dxd + (b * c + ci) * h * w;
          for (std::size_t i = 0; i < oh; ++i) {
            const std::ptrdiff_t row = static_cast<std::ptrdiff_t>(i * s + ki) - pad;
            if (row < 0 || row >= static_cast<std::ptrdiff_t>(h)) continue;
            const double* in = src + b * plane + i * ow;
            double* line = dst + row * w;
            for (std::size_t j = 0; j < ow; ++j) {
              const std::ptrdiff_t col = static_cast<std::ptrdiff_t>(j * s + kj) - pad;
              if (col >= 0 && col < static_cast<std::ptrdiff_t>(w)) line[col] += in[j];
            }
          }
        }
      }
    }
  }
  return dx;
}

// ---- BatchNorm2d

BatchNorm2d::BatchNorm2d(std::string name, std::size_t channels, double momentum, double eps)
    : Layer(std::move(name)),
      channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_(name_ + ".gamma", {channels}),
      beta_(name_ + ".beta", {channels}),
      running_mean_({channels}, 0.0),
      running_var_({channels}, 1.0) {
  gamma_.value.fill(1.0);
}

std::vector<Buffer> BatchNorm2d::buffers() {
  return {{name_ + ".running_mean", &running_mean_}, {name_ + ".running_var", &running_var_}};
}

void BatchNorm2d::initialize(std::mt19937_64&) {
  gamma_.value.fill(1.0);
  beta_.value.fill(0.0);
  running_mean_.fill(0.0);
  running_var_.fill(1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
  expect_rank(x, 4, name_);
  if (x.dim(1) != channels_) {
    throw ShapeError(name_ + ": expected " + std::to_string(channels_) + " channels, got " + shape_string(x.shape()));
  }
  const std::size_t n = x.dim(0), plane = x.dim(2) * x.dim(3);
  const std::size_t m = n * plane;
  xhat_ = Tensor(x.shape());
  inv_std_.assign(channels_, 0.0);
  Tensor y(x.shape());
  for (std::size_t ch = 0; ch < channels_; ++ch) {
    double mean, var;
    if (training) {
      if (m < 2) throw ShapeError(name_ + ": batch statistics need more than one value per channel");
      double acc = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* src = x.data() + (b * channels_ + ch) * plane;
        for (std::size_t p = 0; p < plane; ++p) acc += src[p];
      }
      mean = acc / m;
      double sq = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* src = x.data() + (b * channels_ + ch) * plane;
        for (std::size_t p = 0; p < plane; ++p) sq += (src[p] - mean) * (src[p] - mean);
      }
      var = sq / m;
      running_mean_[ch] = (1.0 - momentum_) * running_mean_[ch] + momentum_ * mean;
      running_var_[ch] = (1.0 - momentum_) * running_var_[ch] + momentum_ * var * m / (m - 1);
    } else {
      mean = running_mean_[ch];
      var = running_var_[ch];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[ch] = inv;
    const double gm = gamma_.value[ch], bt = beta_.value[ch];
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * channels_ + ch) * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        const double xh = (x[off + p] - mean) * inv;
        xhat_[off + p] = xh;
        y[off + p] = gm * xh + bt;
      }
    }
  }
  training_ = training;
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  expect_shape(grad_out, xhat_.shape(), name_ + " backward");
  const std::size_t n = grad_out.dim(0), plane = grad_out.dim(2) * grad_out.dim(3);
  const double m = static_cast<double>(n * plane);
  Tensor dx(grad_out.shape());
  for (std::size_t ch = 0; ch < channels_; ++ch) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * channels_ + ch) * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        sum_g += grad_out[off + p];
        sum_gx += grad_out[off + p] * xhat_[off + p];
      }
    }
    gamma_.grad[ch] += sum_gx;
    beta_.grad[ch] += sum_g;
    const double scale = gamma_.value[ch] * inv_std_[ch];
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * channels_ + ch) * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        dx[off + p] = training_ ? scale * (grad_out[off + p] - sum_g / m - xhat_[off + p] * sum_gx / m)
                                : scale * grad_out[off + p];
      }
    }
  }
  return dx;
}

// ---- ReLU

Tensor ReLU::forward(const Tensor& x, bool) {
  input_ = x;
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  expect_shape(grad_out, input_.shape(), name_ + " backward");
  Tensor dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = input_[i] > 0.0 ? grad_out[i] : 0.0;
  return dx;
}

// ---- MaxPool2d

MaxPool2d::MaxPool2d(std::string name, std::size_t kernel, std::size_t stride, std::size_t padding)
    : Layer(std::move(name)), kernel_(kernel), stride_(stride), padding_(padding) {
  if (kernel == 0 || stride == 0) throw InvalidArgument(name_ + ": kernel and stride must be positive");
  if (2 * padding > kernel) throw InvalidArgument(name_ + ": padding must be at most half the kernel");
}

Shape MaxPool2d::output_shape(const Shape& in) const {
  if (in.size() != 4) throw ShapeError(name_ + ": expected (N, C, H, W), got " + shape_string(in));
  return {in[0], in[1], pooled(in[2], kernel_, stride_, padding_, name_), pooled(in[3], kernel_, stride_, padding_, name_)};
}

Tensor MaxPool2d::forward(const Tensor& x, bool) {
  const Shape out_shape = output_shape(x.shape());
  in_shape_ = x.shape();
  const std::size_t h = in_shape_[2], w = in_shape_[3];
  const std::size_t oh = out_shape[2], ow = out_shape[3];
  const std::size_t planes = in_shape_[0] * in_shape_[1];
  const auto pad = static_cast<std::ptrdiff_t>(padding_);
  Tensor y(out_shape);
  argmax_.assign(y.size(), 0);
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const double* src = x.data() + pl * h * w;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        bool found = false;
        for (std::size_t ki = 0; ki < kernel_; ++ki) {
          const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i * stride_ + ki) - pad;
          if (r < 0 || r >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kj = 0; kj < kernel_; ++kj) {
            const std::ptrdiff_t cidx = static_cast<std::ptrdiff_t>(j * stride_ + kj) - pad;
            if (cidx < 0 || cidx >= static_cast<std::ptrdiff_t>(w)) continue;
            const std::size_t idx = static_cast<std::size_t>(r) * w + static_cast<std::size_t>(cidx);
            if (!found || src[idx] > best) {
              best = src[idx];
              best_idx = idx;
              found = true;
            }
          }
        }
        const std::size_t o = (pl * oh + i) * ow + j;
        y[o] = best;
        argmax_[o] = pl * h * w + best_idx;
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
  expect_shape(grad_out, output_shape(in_shape_), name_ + " backward");
  Tensor dx(in_shape_);
  for (std::size_t o = 0; o < grad_out.size(); ++o) dx[argmax_[o]] += grad_out[o];
  return dx;
}

// ---- Flatten

Tensor Flatten::forward(const Tensor& x, bool) {
  if (x.rank() < 2) throw ShapeError(name_ + ": expected (N, ...), got " + shape_string(x.shape()));
  in_shape_ = x.shape();
  return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

Tensor Flatten::backward(const Tensor& grad_out) { return grad_out.reshaped(in_shape_); }

// ---- Linear

Linear::Linear(std::string name, std::size_t in_features, std::size_t out_features)
    : Layer(std::move(name)),
      in_(in_features),
      out_(out_features),
      weight_(name_ + ".weight", {out_features, in_features}),
      bias_(name_ + ".bias", {out_features}) {
  if (in_features == 0 || out_features == 0) throw InvalidArgument(name_ + ": feature counts must be positive");
}

void Linear::initialize(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  for (auto& w : weight_.value.values()) w = uniform(rng, -bound, bound);
  bias_.value.fill(0.0);
}

Tensor Linear::forward(const Tensor& x, bool) {
  if (x.rank() != 2 || x.dim(1) != in_) {
    throw ShapeError(name_ + ": expected (N, " + std::to_string(in_) + "), got " + shape_string(x.shape()));
  }
  input_ = x;
  const std::size_t n = x.dim(0);
  Tensor y({n, out_});
  gemm_nt(n, out_, in_, x.data(), weight_.value.data(), y.data(), false);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < out_; ++o) y[b * out_ + o] += bias_.value[o];
  }
  return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const std::size_t n = input_.dim(0);
  expect_shape(grad_out, {n, out_}, name_ + " backward");
  gemm_tn(out_, in_, n, grad_out.data(), input_.data(), weight_.grad.data(), true);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < out_; ++o) bias_.grad[o] += grad_out[b * out_ + o];
  }
  Tensor dx({n, in_});
  gemm_nn(n, in_, out_, grad_out.data(), weight_.value.data(), dx.data(), false);
  return dx;
}

// ---- Sequential

Tensor Sequential::forward(const Tensor& x, bool training) {
  Tensor h = x;
  for (auto& layer : layers_) {
    h = layer->forward(h, training);
    h.check_finite(layer->name());
  }
  return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<Parameter*> Sequential::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    auto p = layer->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<Buffer> Sequential::buffers() {
  std::vector<Buffer> out;
  for (auto& layer : layers_) {
    auto b = layer->buffers();
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

void Sequential::initialize(std::mt19937_64& rng) {
  for (auto& layer : layers_) layer->initialize(rng);
}

// ---- ResidualBlock

ResidualBlock::ResidualBlock(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t stride)
    : Layer(std::move(name)),
      conv1_(name_ + ".conv1", {in_channels, out_channels, 3, stride, 1, false}),
      bn1_(name_ + ".bn1", out_channels),
      relu1_(name_ + ".relu1"),
      conv2_(name_ + ".conv2", {out_channels, out_channels, 3, 1, 1, false}),
      bn2_(name_ + ".bn2", out_channels) {
  if (stride != 1 || in_channels != out_channels) {
    projection_ = std::make_unique<Conv2d>(name_ + ".shortcut", Conv2dSpec{in_channels, out_channels, 1, stride, 0, false});
    projection_bn_ = std::make_unique<BatchNorm2d>(name_ + ".shortcut_bn", out_channels);
  }
}

Tensor ResidualBlock::forward(const Tensor& x, bool training) {
  Tensor h = bn2_.forward(conv2_.forward(relu1_.forward(bn1_.forward(conv1_.forward(x, training), training), training),
                                         training),
                          training);
  const Tensor shortcut = projection_ ? projection_bn_->forward(projection_->forward(x, training), training) : x;
  expect_shape(shortcut, h.shape(), name_ + " shortcut");
  for (std::size_t i = 0; i < h.size(); ++i) h[i] += shortcut[i];
  sum_ = h;
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = h[i] > 0.0 ? h[i] : 0.0;
  return h;
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
  expect_shape(grad_out, sum_.shape(), name_ + " backward");
  Tensor g(grad_out.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = sum_[i] > 0.0 ? grad_out[i] : 0.0;
  Tensor dx = conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(g)))));
  const Tensor ds = projection_ ? projection_->backward(projection_bn_->backward(g)) : g;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += ds[i];
  return dx;
}

std::vector<Parameter*> ResidualBlock::parameters() {
  std::vector<Parameter*> out;
  for (Layer* l : std::initializer_list<Layer*>{&conv1_, &bn1_, &conv2_, &bn2_, projection_.get(), projection_bn_.get()}) {
    if (!l) continue;
    auto p = l->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<Buffer> ResidualBlock::buffers() {
  std::vector<Buffer> out;
  for (Layer* l : std::initializer_list<Layer*>{&bn1_, &bn2_, projection_bn_.get()}) {
    if (!l) continue;
    auto b = l->buffers();
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

void ResidualBlock::initialize(std::mt19937_64& rng) {
  conv1_.initialize(rng);
  bn1_.initialize(rng);
  conv2_.initialize(rng);
  bn2_.initialize(rng);
  if (projection_) {
    projection_->initialize(rng);
    projection_bn_->initialize(rng);
  }
}

// ---- SoftmaxCrossEntropy

double SoftmaxCrossEntropy::forward(const Tensor& scores, const std::vector<int>& labels) {
  if (scores.rank() != 2 || scores.dim(0) != labels.size() || scores.dim(0) == 0) {
    throw ShapeError("cross-entropy: scores " + shape_string(scores.shape()) + " do not match " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = scores.dim(0), c = scores.dim(1);
  probs_ = Tensor(scores.shape());
  labels_ = labels;
  double loss = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= c) {
      throw InvalidArgument("label " + std::to_string(labels[b]) + " outside " + std::to_string(c) + " classes");
    }
    const double* row = scores.data() + b * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < c; ++j) probs_[b * c + j] = std::exp(row[j] - mx) / z;
    loss += std::log(z) + mx - row[labels[b]];
  }
  return loss / n;
}

Tensor SoftmaxCrossEntropy::backward() const {
  Tensor g = probs_;
  const std::size_t n = g.dim(0), c = g.dim(1);
  for (std::size_t b = 0; b < n; ++b) g[b * c + labels_[b]] -= 1.0;
  for (auto& v : g.values()) v /= static_cast<double>(n);
  return g;
}

}  // namespace mmgest::nn

#include "mmgest/nn/model.hpp"

#include <algorithm>

#include "mmgest/errors.hpp"

namespace mmgest::nn {

void ModelConfig::validate() const {
  if (n_classes < 2) throw InvalidArgument("model needs at least 2 classes");
  if (stem_channels == 0 || block_channels == 0) throw InvalidArgument("channel widths must be positive");
  if (blocks_per_branch == 0) throw InvalidArgument("blocks_per_branch must be >= 1");
}

Branch::Branch(std::string name, const ModelConfig& cfg) : Sequential(std::move(name)) {
  add<Conv2d>(name_ + ".conv1", Conv2dSpec{1, cfg.stem_channels, 7, 2, 3, false});
  add<BatchNorm2d>(name_ + ".bn1", cfg.stem_channels);
  add<ReLU>(name_ + ".relu1");
  add<MaxPool2d>(name_ + ".pool", 3, 2, 1);
  for (std::size_t b = 0; b < cfg.blocks_per_branch; ++b) {
    add<ResidualBlock>(name_ + ".block" + std::to_string(b), b == 0 ? cfg.stem_channels : cfg.block_channels,
                       cfg.block_channels, b == 0 ? 2 : 1);
  }
}

namespace {

std::size_t out_extent(std::size_t in, std::size_t k, std::size_t s, std::size_t p) { return (in + 2 * p - k) / s + 1; }

const char* kBranchNames[kBranches] = {"x", "y", "z", "v", "i"};

}  // namespace

GestureNet::GestureNet(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  for (std::size_t f = 0; f < kBranches; ++f) {
    branches_.push_back(std::make_unique<Branch>(std::string("branch_") + kBranchNames[f], cfg_));
  }
  std::size_t h = out_extent(cloud::kFrames, 7, 2, 3), w = out_extent(cloud::kSlots, 7, 2, 3);
  h = out_extent(h, 3, 2, 1);
  w = out_extent(w, 3, 2, 1);
  h = out_extent(h, 3, 2, 1);
  w = out_extent(w, 3, 2, 1);
  branch_shape_ = {cfg_.block_channels, h, w};
  const std::size_t combined = kBranches * cfg_.block_channels;
  combine_ = std::make_unique<Sequential>("combine");
  combine_->add<Conv2d>("combine.conv", Conv2dSpec{combined, combined, 3, 1, 1, false});
  combine_->add<BatchNorm2d>("combine.bn", combined);
  combine_->add<ReLU>("combine.relu");
  combine_->add<Flatten>("combine.flatten");
  flat_width_ = combined * h * w;
  classifier_ = std::make_unique<Linear>("classifier", flat_width_, cfg_.n_classes);

  std::mt19937_64 rng(cfg_.seed);
  for (auto& b : branches_) b->initialize(rng);
  combine_->initialize(rng);
  classifier_->initialize(rng);
}

Tensor GestureNet::forward(const Tensor& x, bool training) {
  if (x.rank() != 4 || x.dim(1) != kBranches || x.dim(2) != static_cast<std::size_t>(cloud::kFrames) ||
      x.dim(3) != static_cast<std::size_t>(cloud::kSlots)) {
    throw ShapeError("model input: expected (N, 5, 30, 65), got " + shape_string(x.shape()));
  }
  const std::size_t n = x.dim(0);
  const std::size_t plane = x.dim(2) * x.dim(3);
  branch_outputs_.clear();
  for (std::size_t f = 0; f < kBranches; ++f) {
    Tensor sub({n, 1, x.dim(2), x.dim(3)});
    for (std::size_t b = 0; b < n; ++b) {
      std::copy_n(x.data() + (b * kBranches + f) * plane, plane, sub.data() + b * plane);
    }
    branch_outputs_.push_back(branches_[f]->forward(sub, training));
  }
  const std::size_t bc = branch_shape_[0], bplane = branch_shape_[1] * branch_shape_[2];
  Tensor cat({n, kBranches * bc, branch_shape_[1], branch_shape_[2]});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t f = 0; f < kBranches; ++f) {
      std::copy_n(branch_outputs_[f].data() + b * bc * bplane, bc * bplane,
                  cat.data() + (b * kBranches + f) * bc * bplane);
    }
  }
  Tensor scores = classifier_->forward(combine_->forward(cat, training), training);
  scores.check_finite("classifier");
  return scores;
}

Tensor GestureNet::backward(const Tensor& grad_scores) {
  const Tensor gcat = combine_->backward(classifier_->backward(grad_scores));
  const std::size_t n = gcat.dim(0);
  const std::size_t bc = branch_shape_[0], bplane = branch_shape_[1] * branch_shape_[2];
  const std::size_t in_plane = static_cast<std::size_t>(cloud::kFrames) * cloud::kSlots;
  Tensor dx({n, kBranches, static_cast<std::size_t>(cloud::kFrames), static_cast<std::size_t>(cloud::kSlots)});
  for (std::size_t f = 0; f < kBranches; ++f) {
    Tensor g({n, bc, branch_shape_[1], branch_shape_[2]});
    for (std::size_t b = 0; b < n; ++b) {
      std::copy_n(gcat.data() + (b * kBranches + f) * bc * bplane, bc * bplane, g.data() + b * bc * bplane);
    }
    const Tensor gin = branches_[f]->backward(g);
    for (std::size_t b = 0; b < n; ++b) {
      std::copy_n(gin.data() + b * in_plane, in_plane, dx.data() + (b * kBranches + f) * in_plane);
    }
  }
  return dx;
}

std::vector<Parameter*> GestureNet::parameters() {
  std::vector<Parameter*> out;
  for (auto& b : branches_) {
    auto p = b->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  for (Layer* l : std::initializer_list<Layer*>{combine_.get(), classifier_.get()}) {
    auto p = l->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<Buffer> GestureNet::buffers() {
  std::vector<Buffer> out;
  for (auto& b : branches_) {
    auto p = b->buffers();
    out.insert(out.end(), p.begin(), p.end());
  }
  auto p = combine_->buffers();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

void GestureNet::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

Tensor batch_tensor(const std::vector<const cloud::GestureSample*>& samples) {
  Tensor x({samples.size(), kBranches, static_cast<std::size_t>(cloud::kFrames), static_cast<std::size_t>(cloud::kSlots)});
  for (std::size_t b = 0; b < samples.size(); ++b) {
    if (samples[b]->tensor.size() != cloud::kTensorSize) {
      throw ShapeError("sample " + samples[b]->sample_id + " has " + std::to_string(samples[b]->tensor.size()) +
                       " values, expected " + std::to_string(cloud::kTensorSize));
    }
    std::copy(samples[b]->tensor.begin(), samples[b]->tensor.end(), x.data() + b * cloud::kTensorSize);
  }
  return x;
}

std::vector<int> argmax_rows(const Tensor& scores) {
  if (scores.rank() != 2) throw ShapeError("argmax: expected (N, C), got " + shape_string(scores.shape()));
  const std::size_t n = scores.dim(0), c = scores.dim(1);
  std::vector<int> out(n);
  for (std::size_t b = 0; b < n; ++b) {
    const double* row = scores.data() + b * c;
    out[b] = static_cast<int>(std::max_element(row, row + c) - row);
  }
  return out;
}

std::vector<int> predict(GestureNet& model, const std::vector<cloud::GestureSample>& samples, std::size_t batch) {
  if (batch == 0) throw InvalidArgument("batch size must be positive");
  std::vector<int> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch) {
    std::vector<const cloud::GestureSample*> chunk;
    for (std::size_t i = start; i < std::min(samples.size(), start + batch); ++i) chunk.push_back(&samples[i]);
    const auto p = argmax_rows(model.forward(batch_tensor(chunk), false));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace mmgest::nn

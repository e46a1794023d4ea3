#include "mmgest/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mmgest/errors.hpp"

namespace mmgest::nn {

std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_size(shape_)) {
    throw ShapeError("value count " + std::to_string(values_.size()) + " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != values_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), values_);
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void Tensor::check_finite(std::string_view where) const {
  for (double v : values_) {
    if (!std::isfinite(v)) throw NumericError("non-finite value in " + std::string(where));
  }
}

void expect_shape(const Tensor& t, const Shape& expected, std::string_view what) {
  if (t.shape() != expected) {
    throw ShapeError(std::string(what) + ": expected " + shape_string(expected) + ", got " + shape_string(t.shape()));
  }
}

}  // namespace mmgest::nn

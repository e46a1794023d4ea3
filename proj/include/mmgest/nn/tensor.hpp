#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmgest::nn {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return values_.size(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Same values, new shape of equal size.
  Tensor reshaped(Shape shape) const;
  void fill(double v);

  /// Throws NumericError naming `where` if any value is NaN or infinite.
  void check_finite(std::string_view where) const;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// Throws ShapeError naming both shapes unless they are equal.
void expect_shape(const Tensor& t, const Shape& expected, std::string_view what);

/// Trainable array with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(shape) {}
  void zero_grad() { grad.fill(0.0); }
};

/// Non-trainable state saved with the model (batch-norm running statistics).
struct Buffer {
  std::string name;
  Tensor* tensor;
};

}  // namespace mmgest::nn

#include "pmrt/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "pmrt/errors.hpp"

namespace pmrt {

namespace {

size_t shape_size(const std::vector<size_t>& shape) {
  if (shape.size() > 4)
    throw InvalidConfig("tensors support at most 4 dimensions");
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<size_t> shape)
    : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

Tensor::Tensor(std::initializer_list<size_t> shape)
    : Tensor(std::vector<size_t>(shape)) {}

Tensor Tensor::zeros(std::vector<size_t> shape) {
  return Tensor(std::move(shape));
}

Tensor Tensor::full(std::vector<size_t> shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::from_values(std::vector<size_t> shape,
                           std::vector<double> values) {
  Tensor t;
  t.shape_ = std::move(shape);
  if (shape_size(t.shape_) != values.size())
    throw ShapeMismatch("from_values: " + std::to_string(values.size()) +
                        " values for shape " + t.shape_str());
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::reshaped(std::vector<size_t> shape) const {
  if (shape_size(shape) != size())
    throw ShapeMismatch("reshape to incompatible size");
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = data_;
  return t;
}

void Tensor::fill(double value) {
  std::fill(data_.begin(), data_.end(), value);
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::string s = "(";
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape_[i]);
  }
  return s + ")";
}

void Tensor::add_scaled(const Tensor& other, double scale) {
  if (!same_shape(other))
    throw ShapeMismatch("add_scaled: " + shape_str() + " vs " +
                        other.shape_str());
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

void Tensor::scale(double s) {
  for (double& v : data_) v *= s;
}

double Tensor::sum() const {
  double total = 0.0;
  for (double v : data_) total += v;
  return total;
}

double Tensor::squared_l2() const {
  double total = 0.0;
  for (double v : data_) total += v * v;
  return total;
}

double Tensor::max_abs_diff(const Tensor& other) const {
  if (!same_shape(other))
    throw ShapeMismatch("max_abs_diff: " + shape_str() + " vs " +
                        other.shape_str());
  double worst = 0.0;
  for (size_t i = 0; i < data_.size(); ++i)
    worst = std::max(worst, std::abs(data_[i] - other.data_[i]));
  return worst;
}

void Tensor::require_shape(const std::vector<size_t>& shape,
                           const std::string& what) const {
  if (shape_ != shape) {
    Tensor probe;
    probe.shape_ = shape;
    throw ShapeMismatch(what + ": expected " + probe.shape_str() + ", got " +
                        shape_str());
  }
}

}  // namespace pmrt

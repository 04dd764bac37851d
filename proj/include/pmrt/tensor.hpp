#ifndef PMRT_TENSOR_HPP
#define PMRT_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace pmrt {

// Dense row-major tensor of doubles, up to 4 dimensions. Double precision
// throughout: the gradient checks compare against central finite differences
// at 1e-4 relative error, and checkpoints must round-trip bit-exactly.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape);
  Tensor(std::initializer_list<size_t> shape);

  static Tensor zeros(std::vector<size_t> shape);
  static Tensor full(std::vector<size_t> shape, double value);
  static Tensor from_values(std::vector<size_t> shape,
                            std::vector<double> values);

  const std::vector<size_t>& shape() const { return shape_; }
  size_t ndim() const { return shape_.size(); }
  size_t dim(size_t i) const { return shape_[i]; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  // Multi-index access; strides are implied by the row-major shape.
  double& at(size_t i0) { return data_[i0]; }
  double at(size_t i0) const { return data_[i0]; }
  double& at(size_t i0, size_t i1) { return data_[index2(i0, i1)]; }
  double at(size_t i0, size_t i1) const { return data_[index2(i0, i1)]; }
  double& at(size_t i0, size_t i1, size_t i2) {
    return data_[index3(i0, i1, i2)];
  }
  double at(size_t i0, size_t i1, size_t i2) const {
    return data_[index3(i0, i1, i2)];
  }
  double& at(size_t i0, size_t i1, size_t i2, size_t i3) {
    return data_[index4(i0, i1, i2, i3)];
  }
  double at(size_t i0, size_t i1, size_t i2, size_t i3) const {
    return data_[index4(i0, i1, i2, i3)];
  }

  // Returns a copy with the same data and a new shape of equal size.
  Tensor reshaped(std::vector<size_t> shape) const;

  void fill(double value);
  void zero() { fill(0.0); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  std::string shape_str() const;

  // Elementwise helpers used by the losses and tests.
  void add_scaled(const Tensor& other, double scale);  // this += scale * other
  void scale(double s);
  double sum() const;
  double squared_l2() const;
  double max_abs_diff(const Tensor& other) const;

  void require_shape(const std::vector<size_t>& shape,
                     const std::string& what) const;

 private:
  size_t index2(size_t i0, size_t i1) const { return i0 * shape_[1] + i1; }
  size_t index3(size_t i0, size_t i1, size_t i2) const {
    return (i0 * shape_[1] + i1) * shape_[2] + i2;
  }
  size_t index4(size_t i0, size_t i1, size_t i2, size_t i3) const {
    return ((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3;
  }

  std::vector<size_t> shape_;
  std::vector<double> data_;
};

}  // namespace pmrt

#endif  // PMRT_TENSOR_HPP

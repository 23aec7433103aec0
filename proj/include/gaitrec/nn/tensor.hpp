#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "gaitrec/util.hpp"

namespace gaitrec::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major tensor of doubles. All feature maps use H x W x C order
// (with an optional leading batch dimension), matching the shape algebra of
// the reconstruction network.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), values_(shape_numel(shape_), 0.0) {}
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double v);

  const Shape& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Reinterprets the buffer under a new shape with the same element count.
  void reshape(Shape new_shape);
  Tensor reshaped(Shape new_shape) const&;
  Tensor reshaped(Shape new_shape) &&;

  void fill(double v);
  void add_scaled(const Tensor& other, double scale);  // *this += scale * other

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  Shape shape_;
  std::vector<double> values_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace gaitrec::nn

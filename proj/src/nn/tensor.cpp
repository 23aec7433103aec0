#include "gaitrec/nn/tensor.hpp"

#include <sstream>

namespace gaitrec::nn {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    require(d > 0, "tensor shape dimensions must be positive");
    n *= d;
  }
  return shape.empty() ? 0 : n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  require(values_.size() == shape_numel(shape_),
          "tensor value count does not match shape " + shape_str(shape_));
}

Tensor Tensor::full(Shape shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

void Tensor::reshape(Shape new_shape) {
  require(shape_numel(new_shape) == values_.size(),
          "reshape " + shape_str(shape_) + " -> " + shape_str(new_shape) +
              " changes element count");
  shape_ = std::move(new_shape);
}

Tensor Tensor::reshaped(Shape new_shape) const& {
  Tensor t = *this;
  t.reshape(std::move(new_shape));
  return t;
}

Tensor Tensor::reshaped(Shape new_shape) && {
  reshape(std::move(new_shape));
  return std::move(*this);
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void Tensor::add_scaled(const Tensor& other, double scale) {
  require_same_shape(*this, other, "add_scaled");
  const double* src = other.data();
  double* dst = data();
  for (std::size_t i = 0; i < values_.size(); ++i) dst[i] += scale * src[i];
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                      shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace gaitrec::nn

#pragma once

#include <Eigen/Dense>

#include "gaitrec/nn/tensor.hpp"

namespace gaitrec::nn {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

inline EMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return EMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

inline ECMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ECMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

}  // namespace gaitrec::nn

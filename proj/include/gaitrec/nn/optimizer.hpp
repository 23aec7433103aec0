#pragma once

#include <cstdint>
#include <span>

#include "gaitrec/nn/tensor.hpp"

namespace gaitrec::nn {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  std::vector<Tensor> m;  // first-moment estimates, one per parameter tensor
  std::vector<Tensor> v;  // second-moment estimates
  std::uint64_t step_count = 0;
};

// One bias-corrected Adam update, in place. The state is created lazily on
// the first call and must then keep matching the parameter list.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               const AdamConfig& config);

// Sum over all elements of -t*log(p) - (1-t)*log(1-p), predictions clamped to
// [eps, 1-eps].
double bce_loss(const Tensor& prediction, const Tensor& target);
Tensor bce_loss_grad(const Tensor& prediction, const Tensor& target);
inline constexpr double kBceClamp = 1e-7;

// Mean of squared elementwise differences.
double mse_loss(const Tensor& prediction, const Tensor& target);
Tensor mse_loss_grad(const Tensor& prediction, const Tensor& target);

}  // namespace gaitrec::nn

#include "gaitrec/nn/optimizer.hpp"

#include <cmath>

namespace gaitrec::nn {

void AdamConfig::validate() const {
  require(learning_rate > 0.0, "adam: learning_rate must be > 0");
  require(beta1 >= 0.0 && beta1 < 1.0, "adam: beta1 must be in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "adam: beta2 must be in [0, 1)");
  require(epsilon > 0.0, "adam: epsilon must be > 0");
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               const AdamConfig& config) {
  config.validate();
  require(params.size() == grads.size(), "adam: parameter/gradient count mismatch");
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  require(state.m.size() == params.size(), "adam: state does not match parameter list");

  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    require_same_shape(p, g, "adam_step");
    double* pv = p.data();
    const double* gv = g.data();
    double* mv = state.m[i].data();
    double* vv = state.v[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      mv[j] = config.beta1 * mv[j] + (1.0 - config.beta1) * gv[j];
      vv[j] = config.beta2 * vv[j] + (1.0 - config.beta2) * gv[j] * gv[j];
      const double mhat = mv[j] / bc1;
      const double vhat = vv[j] / bc2;
      pv[j] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
}

double bce_loss(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction, target, "bce_loss");
  const double* p = prediction.data();
  const double* t = target.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double y = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
    sum += -t[i] * std::log(y) - (1.0 - t[i]) * std::log(1.0 - y);
  }
  return sum;
}

Tensor bce_loss_grad(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction, target, "bce_loss");
  Tensor grad(prediction.shape());
  const double* p = prediction.data();
  const double* t = target.data();
  double* g = grad.data();
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double y = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
    g[i] = -t[i] / y + (1.0 - t[i]) / (1.0 - y);
  }
  return grad;
}

double mse_loss(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction, target, "mse_loss");
  const double* p = prediction.data();
  const double* t = target.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = p[i] - t[i];
    sum += d * d;
  }
  return sum / static_cast<double>(prediction.size());
}

Tensor mse_loss_grad(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction, target, "mse_loss");
  Tensor grad(prediction.shape());
  const double scale = 2.0 / static_cast<double>(prediction.size());
  const double* p = prediction.data();
  const double* t = target.data();
  double* g = grad.data();
  for (std::size_t i = 0; i < prediction.size(); ++i) g[i] = scale * (p[i] - t[i]);
  return grad;
}

}  // namespace gaitrec::nn

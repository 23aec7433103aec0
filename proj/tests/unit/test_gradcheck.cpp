#include <doctest.h>

#include "support/gradcheck.hpp"

using namespace gaitrec;
using gaitrec::testing::GradCheck;

// Central finite differences at h = 1e-5 in 64-bit; every layer kind must
// stay under 1e-4 relative error on random small tensors.
namespace {
constexpr double kTol = 1e-4;
}

TEST_CASE("gradcheck: conv2d") {
  Rng rng(101);
  nn::Conv2d layer(2, 3, 3, rng);
  CHECK(GradCheck::check_layer(layer, {2, 8, 8, 2}, 1) < kTol);
}

TEST_CASE("gradcheck: dense") {
  Rng rng(102);
  nn::Dense layer(7, 4, rng);
  CHECK(GradCheck::check_layer(layer, {3, 7}, 2) < kTol);
}

TEST_CASE("gradcheck: relu") {
  nn::Relu layer;
  // Inputs bounded away from the kink.
  Rng rng(103);
  nn::Tensor in({2, 6, 5, 2});
  std::uniform_real_distribution<double> mag(0.05, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (double& v : in.values()) v = (sign(rng) ? 1.0 : -1.0) * mag(rng);
  nn::Tensor coeff(in.shape());
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : coeff.values()) v = dist(rng);
  nn::Cache cache;
  layer.forward(in, &cache, true);
  const nn::Tensor din = layer.backward(in, cache, coeff, nullptr);
  double worst = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    nn::Tensor probe = in;
    probe[i] += GradCheck::kStep;
    const nn::Tensor up = layer.forward(probe, nullptr, true);
    probe[i] -= 2 * GradCheck::kStep;
    const nn::Tensor down = layer.forward(probe, nullptr, true);
    double lu = 0.0, ld = 0.0;
    for (std::size_t j = 0; j < up.size(); ++j) {
      lu += coeff[j] * up[j];
      ld += coeff[j] * down[j];
    }
    worst = std::max(worst, GradCheck::rel_err(din[i], (lu - ld) / (2 * GradCheck::kStep)));
  }
  CHECK(worst < kTol);
}

TEST_CASE("gradcheck: sigmoid") {
  nn::Sigmoid layer;
  CHECK(GradCheck::check_layer(layer, {2, 5, 4, 2}, 4) < kTol);
}

TEST_CASE("gradcheck: maxpool2d") {
  nn::MaxPool2d layer;
  CHECK(GradCheck::check_layer(layer, {2, 7, 6, 3}, 5) < kTol);  // odd height: ceil path
}

TEST_CASE("gradcheck: upsample2d_nearest") {
  nn::Upsample2dNearest layer;
  CHECK(GradCheck::check_layer(layer, {2, 4, 5, 3}, 6) < kTol);
}

TEST_CASE("gradcheck: batchnorm (training statistics)") {
  nn::BatchNorm layer(3);
  CHECK(GradCheck::check_layer(layer, {4, 5, 4, 3}, 7) < kTol);
}

TEST_CASE("gradcheck: residual_block") {
  Rng rng(108);
  nn::ResidualBlock layer(4, rng);
  CHECK(GradCheck::check_layer(layer, {2, 6, 7, 4}, 8) < kTol);
}

TEST_CASE("gradcheck: crop_rows") {
  nn::CropRows layer(1);
  CHECK(GradCheck::check_layer(layer, {2, 6, 5, 2}, 9) < kTol);
}

TEST_CASE("gradcheck: flatten and reshape") {
  nn::Flatten flat;
  CHECK(GradCheck::check_layer(flat, {2, 3, 4, 2}, 10) < kTol);
  nn::Reshape reshape({3, 4, 2});
  CHECK(GradCheck::check_layer(reshape, {2, 24}, 11) < kTol);
}

TEST_CASE("gradcheck: lstm_cell") {
  Rng rng(112);
  nn::LstmCell cell(6, 5, rng);
  CHECK(GradCheck::check_lstm_cell(cell, 3, 12) < kTol);
}

TEST_CASE("gradcheck: sequential stack end to end") {
  Rng rng(113);
  nn::Sequential net;
  net.add(std::make_unique<nn::Conv2d>(1, 3, 3, rng));
  net.add(std::make_unique<nn::Relu>());
  net.add(std::make_unique<nn::MaxPool2d>());
  net.add(std::make_unique<nn::Flatten>());
  net.add(std::make_unique<nn::Dense>(4 * 4 * 3, 5, rng));
  net.add(std::make_unique<nn::Sigmoid>());

  Rng in_rng(14);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  nn::Tensor input({2, 8, 8, 1});
  for (double& v : input.values()) v = dist(in_rng);
  nn::Tensor coeff({2, 5});
  for (double& v : coeff.values()) v = dist(in_rng);

  nn::Sequential::Trace trace;
  net.forward_trace(input, trace, true);
  std::vector<nn::Tensor> grads;
  const nn::Tensor din = net.backward(trace, coeff, &grads);

  const auto loss = [&](const nn::Tensor& in) {
    const nn::Tensor out = net.forward(in, true);
    double sum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) sum += coeff[i] * out[i];
    return sum;
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    nn::Tensor probe = input;
    probe[i] += GradCheck::kStep;
    const double up = loss(probe);
    probe[i] -= 2 * GradCheck::kStep;
    const double down = loss(probe);
    worst = std::max(worst, GradCheck::rel_err(din[i], (up - down) / (2 * GradCheck::kStep)));
  }
  CHECK(worst < kTol);
  CHECK(grads.size() == net.params().size());
}

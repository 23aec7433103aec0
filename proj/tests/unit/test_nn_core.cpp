#include <doctest.h>

#include "gaitrec/nn/checkpoint.hpp"
#include "gaitrec/nn/layers.hpp"
#include "gaitrec/nn/optimizer.hpp"

#include "support/gradcheck.hpp"

using namespace gaitrec;
using gaitrec::testing::GradCheck;

TEST_CASE("tensor shape and reshape rules") {
  nn::Tensor t({2, 3, 4});
  CHECK(t.size() == 24);
  t.reshape({6, 4});
  CHECK(t.shape() == nn::Shape({6, 4}));
  CHECK_THROWS_AS(t.reshape({5, 5}), Error);
  CHECK_THROWS_AS(nn::Tensor({0, 3}), Error);
}

TEST_CASE("layer output shapes follow the network's shape algebra") {
  Rng rng(7);
  // conv + pool stages of the encoder
  nn::MaxPool2d pool;
  CHECK(pool.output_shape({1, 150, 200, 32}) == nn::Shape({1, 75, 100, 32}));
  CHECK(pool.output_shape({1, 75, 100, 8}) == nn::Shape({1, 38, 50, 8}));
  nn::CropRows crop(1);
  CHECK(crop.output_shape({1, 152, 200, 32}) == nn::Shape({1, 150, 200, 32}));
  nn::Upsample2dNearest up;
  CHECK(up.output_shape({1, 38, 50, 8}) == nn::Shape({1, 76, 100, 8}));
  nn::Conv2d conv(3, 5, 3, rng);
  CHECK(conv.output_shape({2, 10, 12, 3}) == nn::Shape({2, 10, 12, 5}));
  CHECK_THROWS(conv.output_shape({2, 10, 12, 4}));
  nn::Dense dense(6, 9, rng);
  CHECK(dense.output_shape({4, 6}) == nn::Shape({4, 9}));
  CHECK_THROWS(dense.output_shape({4, 7}));
}

TEST_CASE("adam: zero gradient is the identity on parameters") {
  nn::Tensor p({3});
  p[0] = 1.5;
  p[1] = -2.0;
  p[2] = 0.25;
  const nn::Tensor before = p;
  nn::Tensor g({3});
  nn::AdamState state;
  std::vector<nn::Tensor*> params{&p};
  std::vector<nn::Tensor> grads{g};
  nn::adam_step(params, grads, state, {});
  CHECK(p.values() == before.values());
  CHECK(state.step_count == 1);
}

TEST_CASE("adam: first unit-gradient step moves by the learning rate") {
  nn::Tensor p({1});
  p[0] = 1.0;
  nn::Tensor g = nn::Tensor::full({1}, 1.0);
  nn::AdamState state;
  std::vector<nn::Tensor*> params{&p};
  std::vector<nn::Tensor> grads{g};
  nn::adam_step(params, grads, state, {});
  // Bias-corrected mhat = vhat = 1, so the update is lr/(1 + eps).
  CHECK(std::abs((1.0 - p[0]) - 0.001) < 1e-8);
  CHECK(p[0] < 1.0);
}

TEST_CASE("adam: identical runs give identical trajectories") {
  const auto run = [] {
    Rng rng(99);
    std::uniform_real_distribution<double> dist(-1, 1);
    nn::Tensor p = nn::Tensor::full({8}, 0.5);
    nn::AdamState state;
    std::vector<nn::Tensor*> params{&p};
    for (int i = 0; i < 50; ++i) {
      nn::Tensor g({8});
      for (double& v : g.values()) v = dist(rng);
      std::vector<nn::Tensor> grads{g};
      nn::adam_step(params, grads, state, {});
    }
    return p.values();
  };
  CHECK(run() == run());
}

TEST_CASE("adam config validation") {
  nn::AdamConfig bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("bce loss matches hand-computed values") {
  nn::Tensor t({1});
  nn::Tensor p({1});
  t[0] = 1.0;
  p[0] = 1.0 - 1e-9;  // clamped to 1 - eps
  CHECK(nn::bce_loss(p, t) < 1e-5);
  p[0] = 0.5;
  CHECK(nn::bce_loss(p, t) == doctest::Approx(0.693147).epsilon(1e-5));
  t[0] = 0.0;
  CHECK(nn::bce_loss(p, t) == doctest::Approx(0.693147).epsilon(1e-5));  // symmetry
}

TEST_CASE("bce/mse are nonnegative and zero only at a perfect match") {
  Rng rng(3);
  std::uniform_real_distribution<double> dist(0.05, 0.95);
  nn::Tensor p({4, 7});
  nn::Tensor t({4, 7});
  for (double& v : p.values()) v = dist(rng);
  for (double& v : t.values()) v = dist(rng) > 0.5 ? 1.0 : 0.0;
  CHECK(nn::bce_loss(p, t) > 0.0);
  CHECK(nn::mse_loss(p, t) > 0.0);
  CHECK(nn::mse_loss(t, t) == 0.0);
}

TEST_CASE("mse loss examples") {
  nn::Tensor a({2}), b({2});
  b[0] = 1.0;
  b[1] = 2.0;
  CHECK(nn::mse_loss(a, b) == doctest::Approx(2.5));
  nn::Tensor c = nn::Tensor::full({3, 3}, 2.0);
  nn::Tensor d = nn::Tensor::full({3, 3}, 1.0);
  CHECK(nn::mse_loss(c, d) == doctest::Approx(1.0));
  CHECK_THROWS(nn::mse_loss(a, c));
}

TEST_CASE("loss gradients agree with finite differences") {
  Rng rng(11);
  std::uniform_real_distribution<double> dist(0.1, 0.9);
  nn::Tensor p({3, 5});
  nn::Tensor t({3, 5});
  for (double& v : p.values()) v = dist(rng);
  for (double& v : t.values()) v = dist(rng) > 0.5 ? 1.0 : 0.0;
  const double h = 1e-6;
  const nn::Tensor gb = nn::bce_loss_grad(p, t);
  const nn::Tensor gm = nn::mse_loss_grad(p, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    nn::Tensor probe = p;
    probe[i] += h;
    const double bup = nn::bce_loss(probe, t), mup = nn::mse_loss(probe, t);
    probe[i] -= 2 * h;
    const double bdn = nn::bce_loss(probe, t), mdn = nn::mse_loss(probe, t);
    CHECK(GradCheck::rel_err(gb[i], (bup - bdn) / (2 * h)) < 1e-4);
    CHECK(GradCheck::rel_err(gm[i], (mup - mdn) / (2 * h)) < 1e-4);
  }
}

TEST_CASE("dense backward: linear case has broadcast-input parameter gradients") {
  Rng rng(5);
  nn::Dense dense(3, 2, rng);
  nn::Tensor in({1, 3});
  in[0] = 0.5;
  in[1] = -1.0;
  in[2] = 2.0;
  nn::Tensor up = nn::Tensor::full({1, 2}, 1.0);  // loss = sum of outputs
  std::vector<nn::Tensor> grads;
  dense.backward(in, nn::Cache{}, up, &grads);
  // dW[i][j] = in[i] for every output j.
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(grads[0][i * 2 + j] == doctest::Approx(in[i]));
  for (std::size_t j = 0; j < 2; ++j) CHECK(grads[1][j] == doctest::Approx(1.0));
}

TEST_CASE("relu gates gradients at negative pre-activations") {
  nn::Relu relu;
  nn::Tensor in({1, 4});
  in[0] = -1.0;
  in[1] = 2.0;
  in[2] = -0.5;
  in[3] = 0.25;
  nn::Tensor up = nn::Tensor::full({1, 4}, 1.0);
  const nn::Tensor din = relu.backward(in, nn::Cache{}, up, nullptr);
  CHECK(din[0] == 0.0);
  CHECK(din[1] == 1.0);
  CHECK(din[2] == 0.0);
  CHECK(din[3] == 1.0);
}

TEST_CASE("checkpoint round-trips tensors bit-exactly") {
  Rng rng(21);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  nn::Tensor a({3, 4});
  for (double& v : a.values()) v = dist(rng);
  a[0] = -0.0;
  a[1] = 1e-312;  // subnormal
  nn::Tensor b({7});
  for (double& v : b.values()) v = dist(rng);

  const auto path = std::filesystem::temp_directory_path() / "gaitrec_ckpt_test.bin";
  nn::save_checkpoint(path, "unit_test", {{"note", 42}}, {&a, &b});
  const nn::Checkpoint ck = nn::load_checkpoint(path, "unit_test");
  CHECK(ck.meta.at("note") == 42);
  REQUIRE(ck.tensors.size() == 2);
  CHECK(ck.tensors[0].shape() == a.shape());
  CHECK(std::memcmp(ck.tensors[0].data(), a.data(), a.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(ck.tensors[1].data(), b.data(), b.size() * sizeof(double)) == 0);
  CHECK_THROWS_AS(nn::load_checkpoint(path, "other_kind"), Error);
  std::filesystem::remove(path);
}

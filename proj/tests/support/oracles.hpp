#pragma once

#include <cmath>

#include "gaitrec/autoencoder.hpp"
#include "gaitrec/gait.hpp"
#include "gaitrec/lstm_predictor.hpp"

namespace gaitrec::testing {

// Brute-force soft dice: column-major accumulation in long double, written
// independently of the library's row-major double loop.
inline double dice_oracle(const GaitEnergyImage& a, const GaitEnergyImage& b) {
  long double inter = 0.0L, sum = 0.0L;
  for (std::size_t c = 0; c < kFrameWidth; ++c)
    for (std::size_t r = 0; r < kFrameHeight; ++r) {
      const long double av = a.at(r, c);
      const long double bv = b.at(r, c);
      inter += av * bv;
      sum += av + bv;
    }
  return sum == 0.0L ? 1.0 : static_cast<double>(2.0L * inter / sum);
}

// Independent per-pixel mean: per-pixel integer foreground sums.
inline GaitEnergyImage gei_oracle(const std::vector<SilhouetteFrame>& frames) {
  GaitEnergyImage gei;
  gei.values.assign(kFramePixels, 0.0);
  gei.cycle_frame_count = frames.size();
  for (std::size_t i = 0; i < kFramePixels; ++i) {
    unsigned long sum = 0;
    for (const auto& f : frames) sum += f.pixels[i];
    gei.values[i] = static_cast<double>(sum) / static_cast<double>(frames.size());
  }
  return gei;
}

// Scalar-loop LSTM predictor reference: five explicit single-cell steps with
// carried state, then the dense head. Mirrors the contract, not the code.
inline Embedding lstm_unroll_oracle(const LstmPredictor& model, const ContextWindow& ctx) {
  const std::size_t units = model.config().hidden;
  const auto cell_step = [&](const nn::LstmCell& cell, const std::vector<double>& x,
                             std::vector<double>& h, std::vector<double>& c) {
    const auto params = cell.params();
    const nn::Tensor& wx = *params[0];
    const nn::Tensor& wh = *params[1];
    const nn::Tensor& b = *params[2];
    const std::size_t in_dim = cell.input_dim();
    std::vector<double> z(4 * units);
    for (std::size_t j = 0; j < 4 * units; ++j) {
      double acc = b[j];
      for (std::size_t i = 0; i < in_dim; ++i) acc += x[i] * wx[i * 4 * units + j];
      for (std::size_t i = 0; i < units; ++i) acc += h[i] * wh[i * 4 * units + j];
      z[j] = acc;
    }
    const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    std::vector<double> h_new(units), c_new(units);
    for (std::size_t j = 0; j < units; ++j) {
      const double gi = sig(z[j]);
      const double gf = sig(z[units + j]);
      const double gg = std::tanh(z[2 * units + j]);
      const double go = sig(z[3 * units + j]);
      c_new[j] = gf * c[j] + gi * gg;
      h_new[j] = go * std::tanh(c_new[j]);
    }
    h = std::move(h_new);
    c = std::move(c_new);
  };

  // The backward model feeds succeeding embeddings nearest-frame-last.
  std::vector<std::size_t> order(kContextLength);
  for (std::size_t t = 0; t < kContextLength; ++t)
    order[t] = (model.direction() == Direction::backward && model.config().reversed_input)
                   ? kContextLength - 1 - t
                   : t;

  std::vector<double> h1(units, 0.0), c1(units, 0.0), h2(units, 0.0), c2(units, 0.0);
  for (std::size_t t = 0; t < kContextLength; ++t) {
    cell_step(model.layer1(), ctx.embeddings[order[t]].values, h1, c1);
    cell_step(model.layer2(), h1, h2, c2);
  }

  const auto head_params = model.head().params();
  const nn::Tensor& w = *head_params[0];
  const nn::Tensor& b = *head_params[1];
  std::vector<double> out(kEmbeddingDim);
  for (std::size_t j = 0; j < kEmbeddingDim; ++j) {
    double acc = b[j];
    for (std::size_t i = 0; i < units; ++i) acc += h2[i] * w[i * kEmbeddingDim + j];
    out[j] = acc;
  }
  return Embedding(std::move(out));
}

inline double hard_dice_frames(const SilhouetteFrame& a, const SilhouetteFrame& b) {
  std::size_t inter = 0, sum = 0;
  for (std::size_t i = 0; i < kFramePixels; ++i) {
    inter += static_cast<std::size_t>(a.pixels[i] & b.pixels[i]);
    sum += a.pixels[i] + b.pixels[i];
  }
  return sum == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(sum);
}

}  // namespace gaitrec::testing

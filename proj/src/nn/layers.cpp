#include "gaitrec/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "eigen_support.hpp"

namespace gaitrec::nn {

using json = nlohmann::json;

json Layer::hyperparams() const { return json::object(); }

void glorot_fill(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : t.values()) v = dist(rng);
}

namespace {

struct MapDims {
  std::size_t batch, height, width, channels;
};

MapDims map_dims(const Shape& s, const char* who) {
  require(s.size() == 4, std::string(who) + ": expected BxHxWxC input, got " + shape_str(s));
  return {s[0], s[1], s[2], s[3]};
}

// im2col for 'same' k x k stride-1 convolution on one H x W x C item.
// Row (y*W + x), column ((dy*k + dx)*C + c).
void im2col(const double* in, std::size_t h, std::size_t w, std::size_t c, std::size_t k,
            double* col) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t patch = k * k * c;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double* row = col + (y * w + x) * patch;
      for (std::size_t dy = 0; dy < k; ++dy) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + dy) - pad;
        for (std::size_t dx = 0; dx < k; ++dx) {
          const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + dx) - pad;
          double* dst = row + (dy * k + dx) * c;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h) || sx < 0 ||
              sx >= static_cast<std::ptrdiff_t>(w)) {
            std::fill(dst, dst + c, 0.0);
          } else {
            const double* src = in + (static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * c;
            std::copy(src, src + c, dst);
          }
        }
      }
    }
  }
}

// Transpose of im2col: scatter-add column gradients back onto the input grid.
void col2im_add(const double* col, std::size_t h, std::size_t w, std::size_t c, std::size_t k,
                double* out) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t patch = k * k * c;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double* row = col + (y * w + x) * patch;
      for (std::size_t dy = 0; dy < k; ++dy) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + dy) - pad;
        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t dx = 0; dx < k; ++dx) {
          const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + dx) - pad;
          if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
          const double* src = row + (dy * k + dx) * c;
          double* dst = out + (static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * c;
          for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += src[ch];
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, Rng& rng)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      weight_({kernel * kernel * in_channels, out_channels}),
      bias_({out_channels}) {
  require(kernel >= 1 && kernel % 2 == 1, "conv2d kernel must be odd and >= 1");
  require(in_channels >= 1 && out_channels >= 1, "conv2d channel counts must be >= 1");
  glorot_fill(weight_, kernel * kernel * in_channels, out_channels, rng);
}

json Conv2d::hyperparams() const {
  return {{"in_channels", in_channels_}, {"out_channels", out_channels_}, {"kernel", kernel_}};
}

Shape Conv2d::output_shape(const Shape& in) const {
  auto d = map_dims(in, "conv2d");
  require(d.channels == in_channels_, "conv2d: input has " + std::to_string(d.channels) +
                                          " channels, layer expects " + std::to_string(in_channels_));
  return {d.batch, d.height, d.width, out_channels_};
}

Tensor Conv2d::forward(const Tensor& in, Cache*, bool) const {
  auto d = map_dims(in.shape(), "conv2d");
  require(d.channels == in_channels_, "conv2d: channel mismatch");
  const std::size_t hw = d.height * d.width;
  const std::size_t patch = kernel_ * kernel_ * in_channels_;

  Tensor out({d.batch, d.height, d.width, out_channels_});
  Tensor col({hw, patch});
  auto w = as_matrix(weight_, patch, out_channels_);
  Eigen::Map<const Eigen::RowVectorXd> b(bias_.data(), static_cast<Eigen::Index>(out_channels_));
  for (std::size_t i = 0; i < d.batch; ++i) {
    im2col(in.data() + i * hw * in_channels_, d.height, d.width, in_channels_, kernel_, col.data());
    EMap o(out.data() + i * hw * out_channels_, static_cast<Eigen::Index>(hw),
           static_cast<Eigen::Index>(out_channels_));
    o.noalias() = as_matrix(col, hw, patch) * w;
    o.rowwise() += b;
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& in, const Cache&, const Tensor& upstream,
                        std::vector<Tensor>* param_grads) const {
  auto d = map_dims(in.shape(), "conv2d");
  const std::size_t hw = d.height * d.width;
  const std::size_t patch = kernel_ * kernel_ * in_channels_;

  Tensor dw({patch, out_channels_});
  Tensor db({out_channels_});
  Tensor din(in.shape());
  Tensor col({hw, patch});
  Tensor dcol({hw, patch});

  auto w = as_matrix(weight_, patch, out_channels_);
  auto dwm = as_matrix(dw, patch, out_channels_);
  Eigen::Map<Eigen::RowVectorXd> dbv(db.data(), static_cast<Eigen::Index>(out_channels_));
  for (std::size_t i = 0; i < d.batch; ++i) {
    // The column matrix is rebuilt rather than cached: it is k*k times the
    // activation size, which dwarfs the GEMM it feeds for realistic batches.
    im2col(in.data() + i * hw * in_channels_, d.height, d.width, in_channels_, kernel_, col.data());
    ECMap up(upstream.data() + i * hw * out_channels_, static_cast<Eigen::Index>(hw),
             static_cast<Eigen::Index>(out_channels_));
    dwm.noalias() += as_matrix(col, hw, patch).transpose() * up;
    dbv += up.colwise().sum();
    as_matrix(dcol, hw, patch).noalias() = up * w.transpose();
    col2im_add(dcol.data(), d.height, d.width, in_channels_, kernel_,
               din.data() + i * hw * in_channels_);
  }
  if (param_grads) {
    param_grads->push_back(std::move(dw));
    param_grads->push_back(std::move(db));
  }
  return din;
}

// ---------------------------------------------------------------------------
// MaxPool2d

Shape MaxPool2d::output_shape(const Shape& in) const {
  auto d = map_dims(in, "maxpool2d");
  return {d.batch, (d.height + 1) / 2, (d.width + 1) / 2, d.channels};
}

Tensor MaxPool2d::forward(const Tensor& in, Cache* cache, bool) const {
  auto d = map_dims(in.shape(), "maxpool2d");
  const std::size_t ho = (d.height + 1) / 2, wo = (d.width + 1) / 2;
  Tensor out({d.batch, ho, wo, d.channels});
  std::vector<std::int32_t> argmax;
  if (cache) argmax.resize(out.size());

  const std::size_t in_item = d.height * d.width * d.channels;
  const std::size_t out_item = ho * wo * d.channels;
  for (std::size_t i = 0; i < d.batch; ++i) {
    const double* src = in.data() + i * in_item;
    double* dst = out.data() + i * out_item;
    for (std::size_t y = 0; y < ho; ++y) {
      const std::size_t y1 = std::min(2 * y + 1, d.height - 1);
      for (std::size_t x = 0; x < wo; ++x) {
        const std::size_t x1 = std::min(2 * x + 1, d.width - 1);
        for (std::size_t c = 0; c < d.channels; ++c) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          for (std::size_t sy = 2 * y; sy <= y1; ++sy) {
            for (std::size_t sx = 2 * x; sx <= x1; ++sx) {
              const std::size_t idx = (sy * d.width + sx) * d.channels + c;
              if (src[idx] > best) {
                best = src[idx];
                best_idx = idx;
              }
            }
          }
          const std::size_t o = (y * wo + x) * d.channels + c;
          dst[o] = best;
          if (cache) argmax[i * out_item + o] = static_cast<std::int32_t>(best_idx);
        }
      }
    }
  }
  if (cache) cache->indices = std::move(argmax);
  return out;
}

Tensor MaxPool2d::backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                           std::vector<Tensor>*) const {
  auto d = map_dims(in.shape(), "maxpool2d");
  const std::size_t ho = (d.height + 1) / 2, wo = (d.width + 1) / 2;
  const std::size_t in_item = d.height * d.width * d.channels;
  const std::size_t out_item = ho * wo * d.channels;
  require(cache.indices.size() == upstream.size(), "maxpool2d: cache does not match upstream");

  Tensor din(in.shape());
  for (std::size_t i = 0; i < d.batch; ++i) {
    const double* up = upstream.data() + i * out_item;
    double* dst = din.data() + i * in_item;
    const std::int32_t* arg = cache.indices.data() + i * out_item;
    for (std::size_t o = 0; o < out_item; ++o) dst[arg[o]] += up[o];
  }
  return din;
}

// ---------------------------------------------------------------------------
// Upsample2dNearest

Shape Upsample2dNearest::output_shape(const Shape& in) const {
  auto d = map_dims(in, "upsample2d_nearest");
  return {d.batch, 2 * d.height, 2 * d.width, d.channels};
}

Tensor Upsample2dNearest::forward(const Tensor& in, Cache*, bool) const {
  auto d = map_dims(in.shape(), "upsample2d_nearest");
  Tensor out({d.batch, 2 * d.height, 2 * d.width, d.channels});
  const std::size_t wo = 2 * d.width;
  for (std::size_t i = 0; i < d.batch; ++i) {
    const double* src = in.data() + i * d.height * d.width * d.channels;
    double* dst = out.data() + i * 4 * d.height * d.width * d.channels;
    for (std::size_t y = 0; y < 2 * d.height; ++y) {
      const double* srow = src + (y / 2) * d.width * d.channels;
      double* drow = dst + y * wo * d.channels;
      for (std::size_t x = 0; x < wo; ++x) {
        const double* s = srow + (x / 2) * d.channels;
        std::copy(s, s + d.channels, drow + x * d.channels);
      }
    }
  }
  return out;
}

Tensor Upsample2dNearest::backward(const Tensor& in, const Cache&, const Tensor& upstream,
                                   std::vector<Tensor>*) const {
  auto d = map_dims(in.shape(), "upsample2d_nearest");
  Tensor din(in.shape());
  const std::size_t wo = 2 * d.width;
  for (std::size_t i = 0; i < d.batch; ++i) {
    const double* up = upstream.data() + i * 4 * d.height * d.width * d.channels;
    double* dst = din.data() + i * d.height * d.width * d.channels;
    for (std::size_t y = 0; y < 2 * d.height; ++y) {
      double* drow = dst + (y / 2) * d.width * d.channels;
      const double* urow = up + y * wo * d.channels;
      for (std::size_t x = 0; x < wo; ++x) {
        double* t = drow + (x / 2) * d.channels;
        const double* u = urow + x * d.channels;
        for (std::size_t c = 0; c < d.channels; ++c) t[c] += u[c];
      }
    }
  }
  return din;
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::size_t in_dim, std::size_t units, Rng& rng)
    : in_dim_(in_dim), units_(units), weight_({in_dim, units}), bias_({units}) {
  require(in_dim >= 1 && units >= 1, "dense dimensions must be >= 1");
  glorot_fill(weight_, in_dim, units, rng);
}

json Dense::hyperparams() const { return {{"in_dim", in_dim_}, {"units", units_}}; }

Shape Dense::output_shape(const Shape& in) const {
  require(in.size() == 2 && in[1] == in_dim_,
          "dense: expected BxD with D=" + std::to_string(in_dim_) + ", got " + shape_str(in));
  return {in[0], units_};
}

Tensor Dense::forward(const Tensor& in, Cache*, bool) const {
  const Shape out_shape = output_shape(in.shape());
  const std::size_t batch = in.dim(0);
  Tensor out(out_shape);
  auto o = as_matrix(out, batch, units_);
  o.noalias() = as_matrix(in, batch, in_dim_) * as_matrix(weight_, in_dim_, units_);
  o.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias_.data(), static_cast<Eigen::Index>(units_));
  return out;
}

Tensor Dense::backward(const Tensor& in, const Cache&, const Tensor& upstream,
                       std::vector<Tensor>* param_grads) const {
  const std::size_t batch = in.dim(0);
  Tensor dw({in_dim_, units_});
  Tensor db({units_});
  Tensor din(in.shape());
  auto up = as_matrix(upstream, batch, units_);
  as_matrix(dw, in_dim_, units_).noalias() = as_matrix(in, batch, in_dim_).transpose() * up;
  Eigen::Map<Eigen::RowVectorXd>(db.data(), static_cast<Eigen::Index>(units_)) = up.colwise().sum();
  as_matrix(din, batch, in_dim_).noalias() = up * as_matrix(weight_, in_dim_, units_).transpose();
  if (param_grads) {
    param_grads->push_back(std::move(dw));
    param_grads->push_back(std::move(db));
  }
  return din;
}

// ---------------------------------------------------------------------------
// Relu / Sigmoid

Tensor Relu::forward(const Tensor& in, Cache*, bool) const {
  Tensor out = in;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor Relu::backward(const Tensor& in, const Cache&, const Tensor& upstream,
                      std::vector<Tensor>*) const {
  require_same_shape(in, upstream, "relu backward");
  Tensor din(in.shape());
  const double* x = in.data();
  const double* up = upstream.data();
  double* g = din.data();
  for (std::size_t i = 0; i < din.size(); ++i) g[i] = x[i] > 0.0 ? up[i] : 0.0;
  return din;
}

Tensor Sigmoid::forward(const Tensor& in, Cache* cache, bool) const {
  Tensor out = in;
  for (double& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  if (cache) cache->tensors = {out};
  return out;
}

Tensor Sigmoid::backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                         std::vector<Tensor>*) const {
  Tensor din(in.shape());
  Tensor recomputed;
  if (cache.tensors.empty()) recomputed = forward(in, nullptr, false);
  const double* yv = cache.tensors.empty() ? recomputed.data() : cache.tensors[0].data();
  const double* up = upstream.data();
  double* g = din.data();
  for (std::size_t i = 0; i < din.size(); ++i) g[i] = up[i] * yv[i] * (1.0 - yv[i]);
  return din;
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(std::size_t channels, double eps, double momentum)
    : channels_(channels),
      eps_(eps),
      momentum_(momentum),
      gamma_(Tensor::full({channels}, 1.0)),
      beta_({channels}),
      running_mean_({channels}),
      running_var_(Tensor::full({channels}, 1.0)) {
  require(channels >= 1, "batchnorm channels must be >= 1");
}

json BatchNorm::hyperparams() const {
  return {{"channels", channels_}, {"eps", eps_}, {"momentum", momentum_}};
}

Shape BatchNorm::output_shape(const Shape& in) const {
  require(!in.empty() && in.back() == channels_,
          "batchnorm: trailing dimension must be " + std::to_string(channels_));
  return in;
}

Tensor BatchNorm::forward(const Tensor& in, Cache* cache, bool training) const {
  output_shape(in.shape());
  const std::size_t c = channels_;
  const std::size_t rows = in.size() / c;
  Tensor out(in.shape());

  Tensor mean({c}), var({c});
  if (training) {
    const double* x = in.data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) mean[j] += x[r * c + j];
    for (std::size_t j = 0; j < c; ++j) mean[j] /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) {
        const double d = x[r * c + j] - mean[j];
        var[j] += d * d;
      }
    for (std::size_t j = 0; j < c; ++j) var[j] /= static_cast<double>(rows);

    // Running stats use the unbiased variance.
    const double unbias = rows > 1 ? static_cast<double>(rows) / static_cast<double>(rows - 1) : 1.0;
    for (std::size_t j = 0; j < c; ++j) {
      running_mean_[j] = (1.0 - momentum_) * running_mean_[j] + momentum_ * mean[j];
      running_var_[j] = (1.0 - momentum_) * running_var_[j] + momentum_ * var[j] * unbias;
    }
  } else {
    mean = running_mean_;
    var = running_var_;
  }

  Tensor inv_std({c});
  for (std::size_t j = 0; j < c; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + eps_);

  Tensor xhat(in.shape());
  {
    const double* x = in.data();
    double* xh = xhat.data();
    double* y = out.data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) {
        const double v = (x[r * c + j] - mean[j]) * inv_std[j];
        xh[r * c + j] = v;
        y[r * c + j] = gamma_[j] * v + beta_[j];
      }
  }
  if (cache) {
    cache->tensors.clear();
    cache->tensors.push_back(std::move(xhat));
    cache->tensors.push_back(std::move(inv_std));
    cache->indices = {training ? 1 : 0};
  }
  return out;
}

Tensor BatchNorm::backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                           std::vector<Tensor>* param_grads) const {
  require(cache.tensors.size() == 2, "batchnorm backward needs a forward cache");
  const Tensor& xhat = cache.tensors[0];
  const Tensor& inv_std = cache.tensors[1];
  const bool trained_stats = !cache.indices.empty() && cache.indices[0] == 1;
  const std::size_t c = channels_;
  const std::size_t rows = in.size() / c;

  Tensor dgamma({c}), dbeta({c});
  const double* up = upstream.data();
  const double* xh = xhat.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < c; ++j) {
      dgamma[j] += up[r * c + j] * xh[r * c + j];
      dbeta[j] += up[r * c + j];
    }

  Tensor din(in.shape());
  double* g = din.data();
  if (trained_stats) {
    const double n = static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) {
        g[r * c + j] = gamma_[j] * inv_std[j] / n *
                       (n * up[r * c + j] - dbeta[j] - xh[r * c + j] * dgamma[j]);
      }
  } else {
    // Inference stats are constants w.r.t. the input.
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) g[r * c + j] = up[r * c + j] * gamma_[j] * inv_std[j];
  }
  if (param_grads) {
    param_grads->push_back(std::move(dgamma));
    param_grads->push_back(std::move(dbeta));
  }
  return din;
}

// ---------------------------------------------------------------------------
// ResidualBlock

ResidualBlock::ResidualBlock(std::size_t channels, Rng& rng)
    : channels_(channels),
      conv1_(channels, channels, 3, rng),
      conv2_(channels, channels, 3, rng),
      bn1_(channels),
      bn2_(channels) {}

json ResidualBlock::hyperparams() const { return {{"channels", channels_}}; }

Shape ResidualBlock::output_shape(const Shape& in) const { return conv1_.output_shape(in); }

Tensor ResidualBlock::forward(const Tensor& in, Cache* cache, bool training) const {
  Cache* sub = nullptr;
  if (cache) {
    cache->children.resize(4);
    cache->tensors.clear();
    sub = cache->children.data();
  }
  Tensor a = conv1_.forward(in, sub ? &sub[0] : nullptr, training);
  Tensor b = bn1_.forward(a, sub ? &sub[1] : nullptr, training);
  Tensor r = b;
  for (double& v : r.values()) v = v > 0.0 ? v : 0.0;
  Tensor c2 = conv2_.forward(r, sub ? &sub[2] : nullptr, training);
  Tensor out = bn2_.forward(c2, sub ? &sub[3] : nullptr, training);
  out.add_scaled(in, 1.0);  // identity skip
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  if (cache) {
    cache->tensors.push_back(std::move(a));
    cache->tensors.push_back(std::move(b));
    cache->tensors.push_back(std::move(r));
    cache->tensors.push_back(std::move(c2));
    cache->tensors.push_back(out);  // relu output doubles as the gate mask
  }
  return out;
}

Tensor ResidualBlock::backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                               std::vector<Tensor>* param_grads) const {
  require(cache.tensors.size() == 5 && cache.children.size() == 4,
          "residual_block backward needs a forward cache");
  const Tensor& a = cache.tensors[0];    // conv1 output
  const Tensor& b = cache.tensors[1];    // bn1 output
  const Tensor& r = cache.tensors[2];    // relu(bn1) = conv2 input
  const Tensor& c2 = cache.tensors[3];   // conv2 output
  const Tensor& out = cache.tensors[4];  // block output; out > 0 iff pre-relu > 0

  Tensor gated(upstream.shape());
  {
    const double* up = upstream.data();
    const double* o = out.data();
    double* g = gated.data();
    for (std::size_t i = 0; i < gated.size(); ++i) g[i] = o[i] > 0.0 ? up[i] : 0.0;
  }

  // Parameter gradient order must match params(): conv1, conv2, bn1, bn2.
  std::vector<Tensor> g_conv1, g_conv2, g_bn1, g_bn2;
  Tensor d_c2 = bn2_.backward(c2, cache.children[3], gated, &g_bn2);
  Tensor d_r = conv2_.backward(r, cache.children[2], d_c2, &g_conv2);
  Tensor d_b(d_r.shape());
  {
    const double* x = b.data();
    const double* up = d_r.data();
    double* g = d_b.data();
    for (std::size_t i = 0; i < d_b.size(); ++i) g[i] = x[i] > 0.0 ? up[i] : 0.0;
  }
  Tensor d_a = bn1_.backward(a, cache.children[1], d_b, &g_bn1);
  Tensor din = conv1_.backward(in, cache.children[0], d_a, &g_conv1);
  din.add_scaled(gated, 1.0);  // skip path

  if (param_grads) {
    for (auto& t : g_conv1) param_grads->push_back(std::move(t));
    for (auto& t : g_conv2) param_grads->push_back(std::move(t));
    for (auto& t : g_bn1) param_grads->push_back(std::move(t));
    for (auto& t : g_bn2) param_grads->push_back(std::move(t));
  }
  return din;
}

std::vector<Tensor*> ResidualBlock::params() {
  std::vector<Tensor*> out;
  for (auto* t : conv1_.params()) out.push_back(t);
  for (auto* t : conv2_.params()) out.push_back(t);
  for (auto* t : bn1_.params()) out.push_back(t);
  for (auto* t : bn2_.params()) out.push_back(t);
  return out;
}

std::vector<const Tensor*> ResidualBlock::params() const {
  std::vector<const Tensor*> out;
  for (auto* t : conv1_.params()) out.push_back(t);
  for (auto* t : conv2_.params()) out.push_back(t);
  for (auto* t : bn1_.params()) out.push_back(t);
  for (auto* t : bn2_.params()) out.push_back(t);
  return out;
}

std::vector<Tensor*> ResidualBlock::buffers() {
  std::vector<Tensor*> out;
  for (auto* t : bn1_.buffers()) out.push_back(t);
  for (auto* t : bn2_.buffers()) out.push_back(t);
  return out;
}

std::vector<const Tensor*> ResidualBlock::buffers() const {
  std::vector<const Tensor*> out;
  for (auto* t : bn1_.buffers()) out.push_back(t);
  for (auto* t : bn2_.buffers()) out.push_back(t);
  return out;
}

// ---------------------------------------------------------------------------
// CropRows

json CropRows::hyperparams() const { return {{"rows", rows_}}; }

Shape CropRows::output_shape(const Shape& in) const {
  auto d = map_dims(in, "crop_rows");
  require(d.height > 2 * rows_, "crop_rows: input height " + std::to_string(d.height) +
                                    " too small to remove " + std::to_string(rows_) +
                                    " rows from each side");
  return {d.batch, d.height - 2 * rows_, d.width, d.channels};
}

Tensor CropRows::forward(const Tensor& in, Cache*, bool) const {
  auto d = map_dims(in.shape(), "crop_rows");
  const std::size_t ho = d.height - 2 * rows_;
  Tensor out({d.batch, ho, d.width, d.channels});
  const std::size_t row_len = d.width * d.channels;
  for (std::size_t i = 0; i < d.batch; ++i) {
    const double* src = in.data() + (i * d.height + rows_) * row_len;
    double* dst = out.data() + i * ho * row_len;
    std::copy(src, src + ho * row_len, dst);
  }
  return out;
}

Tensor CropRows::backward(const Tensor& in, const Cache&, const Tensor& upstream,
                          std::vector<Tensor>*) const {
  auto d = map_dims(in.shape(), "crop_rows");
  const std::size_t ho = d.height - 2 * rows_;
  Tensor din(in.shape());
  const std::size_t row_len = d.width * d.channels;
  for (std::size_t i = 0; i < d.batch; ++i) {
    const double* src = upstream.data() + i * ho * row_len;
    double* dst = din.data() + (i * d.height + rows_) * row_len;
    std::copy(src, src + ho * row_len, dst);
  }
  return din;
}

// ---------------------------------------------------------------------------
// Flatten / Reshape

Shape Flatten::output_shape(const Shape& in) const {
  require(in.size() >= 2, "flatten: expected at least BxD input");
  std::size_t d = 1;
  for (std::size_t i = 1; i < in.size(); ++i) d *= in[i];
  return {in[0], d};
}

Tensor Flatten::forward(const Tensor& in, Cache*, bool) const {
  return in.reshaped(output_shape(in.shape()));
}

Tensor Flatten::backward(const Tensor& in, const Cache&, const Tensor& upstream,
                         std::vector<Tensor>*) const {
  return upstream.reshaped(in.shape());
}

json Reshape::hyperparams() const { return {{"item_shape", item_shape_}}; }

Shape Reshape::output_shape(const Shape& in) const {
  require(in.size() == 2, "reshape: expected BxD input");
  require(in[1] == shape_numel(item_shape_),
          "reshape: item size " + std::to_string(in[1]) + " does not match target " +
              shape_str(item_shape_));
  Shape out{in[0]};
  out.insert(out.end(), item_shape_.begin(), item_shape_.end());
  return out;
}

Tensor Reshape::forward(const Tensor& in, Cache*, bool) const {
  return in.reshaped(output_shape(in.shape()));
}

Tensor Reshape::backward(const Tensor& in, const Cache&, const Tensor& upstream,
                         std::vector<Tensor>*) const {
  return upstream.reshaped(in.shape());
}

// ---------------------------------------------------------------------------
// Sequential

Shape Sequential::output_shape(Shape in) const {
  for (const auto& l : layers_) in = l->output_shape(in);
  return in;
}

Tensor Sequential::forward(const Tensor& in, bool training) const {
  Tensor x = in;
  for (const auto& l : layers_) x = l->forward(x, nullptr, training);
  return x;
}

Tensor Sequential::forward_trace(Tensor in, Trace& trace, bool training) const {
  trace.inputs.clear();
  trace.caches.assign(layers_.size(), Cache{});
  trace.inputs.reserve(layers_.size() + 1);
  trace.inputs.push_back(std::move(in));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    trace.inputs.push_back(layers_[i]->forward(trace.inputs.back(), &trace.caches[i], training));
  }
  return trace.inputs.back();
}

Tensor Sequential::backward(const Trace& trace, Tensor upstream,
                            std::vector<Tensor>* param_grads) const {
  require(trace.inputs.size() == layers_.size() + 1, "sequential backward needs a forward trace");
  // Parameter gradients must come out in params() order (front to back), so
  // gather per-layer gradients and splice after the reverse sweep.
  std::vector<std::vector<Tensor>> per_layer(layers_.size());
  Tensor g = std::move(upstream);
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i]->backward(trace.inputs[i], trace.caches[i], g,
                             param_grads ? &per_layer[i] : nullptr);
  }
  if (param_grads) {
    for (auto& v : per_layer)
      for (auto& t : v) param_grads->push_back(std::move(t));
  }
  return g;
}

std::vector<Tensor*> Sequential::params() {
  std::vector<Tensor*> out;
  for (auto& l : layers_)
    for (auto* t : l->params()) out.push_back(t);
  return out;
}

std::vector<const Tensor*> Sequential::params() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers_)
    for (auto* t : static_cast<const Layer&>(*l).params()) out.push_back(t);
  return out;
}

std::vector<Tensor*> Sequential::buffers() {
  std::vector<Tensor*> out;
  for (auto& l : layers_)
    for (auto* t : l->buffers()) out.push_back(t);
  return out;
}

std::vector<const Tensor*> Sequential::buffers() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers_)
    for (auto* t : static_cast<const Layer&>(*l).buffers()) out.push_back(t);
  return out;
}

}  // namespace gaitrec::nn

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gaitrec/nn/tensor.hpp"

namespace gaitrec::nn {

// Scratch produced by forward() and consumed by backward(). Each layer kind
// decides what it stores; composite layers nest per-sublayer caches.
struct Cache {
  std::vector<Tensor> tensors;
  std::vector<std::int32_t> indices;
  std::vector<Cache> children;
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual nlohmann::json hyperparams() const;

  // Shape of the output for a given input shape; throws on incompatibility.
  virtual Shape output_shape(const Shape& in) const = 0;

  // `cache` may be null for pure inference. `training` switches layers with
  // train/eval behaviour (batchnorm); all others ignore it.
  virtual Tensor forward(const Tensor& in, Cache* cache, bool training) const = 0;

  // Gradient of the loss w.r.t. the layer input, given the gradient w.r.t.
  // the output. Parameter gradients are appended to `param_grads` in the same
  // order as params(). `in` must be the tensor passed to the matching forward.
  virtual Tensor backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                          std::vector<Tensor>* param_grads) const = 0;

  virtual std::vector<Tensor*> params() { return {}; }
  virtual std::vector<const Tensor*> params() const { return {}; }
  // Non-trainable state that still belongs in checkpoints (running stats).
  virtual std::vector<Tensor*> buffers() { return {}; }
  virtual std::vector<const Tensor*> buffers() const { return {}; }
};

// Glorot-style uniform init over [-limit, limit], limit = sqrt(6/(fan_in+fan_out)).
void glorot_fill(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// 3x3 'same' convolution, stride 1, on B x H x W x C tensors.
class Conv2d final : public Layer {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, Rng& rng);

  std::string kind() const override { return "conv2d"; }
  nlohmann::json hyperparams() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, Cache* cache, bool training) const override;
  Tensor backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                  std::vector<Tensor>* param_grads) const override;
  std::vector<Tensor*> params() override { return {&weight_, &bias_}; }
  std::vector<const Tensor*> params() const override { return {&weight_, &bias_}; }

  std::size_t in_channels() const { return in_channels_; }
  std::size_t out_channels() const { return out_channels_; }

 private:
  std::size_t in_channels_, out_channels_, kernel_;
  Tensor weight_;  // [kernel*kernel*in_channels, out_channels], im2col order
  Tensor bias_;    // [out_channels]
};

// 2x2 max pooling, stride 2, ceil rounding at odd extents (75 -> 38).
class MaxPool2d final : public Layer {
 public:
  MaxPool2d() = default;
  std::string kind() const override { return "maxpool2d"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, Cache* cache, bool training) const override;
  Tensor backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                  std::vector<Tensor>* param_grads) const override;
};

// Nearest-neighbour x2 upsampling.
class Upsample2dNearest final : public Layer {
 public:
  Upsample2dNearest() = default;
  std::string kind() const override { return "upsample2d_nearest"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, Cache* cache, bool training) const override;
  Tensor backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                  std::vector<Tensor>* param_grads) const override;
};

class Dense final : public Layer {
 public:
  Dense(std::size_t in_dim, std::size_t units, Rng& rng);
  std::string kind() const override { return "dense"; }
  nlohmann::json hyperparams() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, Cache* cache, bool training) const override;
  Tensor backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                  std::vector<Tensor>* param_grads) const override;
  std::vector<Tensor*> params() override { return {&weight_, &bias_}; }
  std::vector<const Tensor*> params() const override { return {&weight_, &bias_}; }

  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  std::size_t in_dim_, units_;
  Tensor weight_;  // [in_dim, units]
  Tensor bias_;    // [units]
};

class Relu final : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& in, Cache* cache, bool training) const override;
  Tensor backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                  std::vector<Tensor>* param_grads) const override;
};

class Sigmoid final : public Layer {
 public:
  std::string kind() const override { return "sigmoid"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& in, Cache* cache, bool training) const override;
  Tensor backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                  std::vector<Tensor>* param_grads) const override;
};

// Per-channel batch normalization over B x H x W x C (stats across B*H*W).
class BatchNorm final : public Layer {
 public:
  explicit BatchNorm(std::size_t channels, double eps = 1e-5, double momentum = 0.1);
  std::string kind() const override { return "batchnorm"; }
  nlohmann::json hyperparams() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, Cache* cache, bool training) const override;
  Tensor backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                  std::vector<Tensor>* param_grads) const override;
  std::vector<Tensor*> params() override { return {&gamma_, &beta_}; }
  std::vector<const Tensor*> params() const override { return {&gamma_, &beta_}; }
  std::vector<Tensor*> buffers() override { return {&running_mean_, &running_var_}; }
  std::vector<const Tensor*> buffers() const override { return {&running_mean_, &running_var_}; }

 private:
  std::size_t channels_;
  double eps_, momentum_;
  Tensor gamma_, beta_;
  // Forward in training mode updates the running stats; they are estimation
  // state, not part of the differentiable computation.
  mutable Tensor running_mean_, running_var_;
};

// conv(3x3) -> bn -> relu -> conv(3x3) -> bn, identity skip, relu.
class ResidualBlock final : public Layer {
 public:
  ResidualBlock(std::size_t channels, Rng& rng);
  std::string kind() const override { return "residual_block"; }
  nlohmann::json hyperparams() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, Cache* cache, bool training) const override;
  Tensor backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                  std::vector<Tensor>* param_grads) const override;
  std::vector<Tensor*> params() override;
  std::vector<const Tensor*> params() const override;
  std::vector<Tensor*> buffers() override;
  std::vector<const Tensor*> buffers() const override;

 private:
  std::size_t channels_;
  Conv2d conv1_, conv2_;
  BatchNorm bn1_, bn2_;
};

// Removes `rows` rows from the top and bottom of each feature map.
class CropRows final : public Layer {
 public:
  explicit CropRows(std::size_t rows) : rows_(rows) {}
  std::string kind() const override { return "crop_rows"; }
  nlohmann::json hyperparams() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, Cache* cache, bool training) const override;
  Tensor backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                  std::vector<Tensor>* param_grads) const override;

 private:
  std::size_t rows_;
};

// B x H x W x C -> B x (H*W*C). Shape plumbing only.
class Flatten final : public Layer {
 public:
  std::string kind() const override { return "flatten"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, Cache* cache, bool training) const override;
  Tensor backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                  std::vector<Tensor>* param_grads) const override;
};

// B x D -> B x h x w x c with h*w*c == D.
class Reshape final : public Layer {
 public:
  explicit Reshape(Shape item_shape) : item_shape_(std::move(item_shape)) {}
  std::string kind() const override { return "reshape"; }
  nlohmann::json hyperparams() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, Cache* cache, bool training) const override;
  Tensor backward(const Tensor& in, const Cache& cache, const Tensor& upstream,
                  std::vector<Tensor>* param_grads) const override;

 private:
  Shape item_shape_;
};

// Plain layer pipeline with shared ownership of nothing: the stack owns its
// layers, training code owns activations and caches.
class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  Shape output_shape(Shape in) const;

  // Inference path; no caches kept.
  Tensor forward(const Tensor& in, bool training = false) const;

  // Training path: records per-layer inputs and caches for backward().
  struct Trace {
    std::vector<Tensor> inputs;  // inputs[i] fed layer i; back() is the output
    std::vector<Cache> caches;
  };
  Tensor forward_trace(Tensor in, Trace& trace, bool training) const;

  // Returns gradient w.r.t. the stack input; parameter gradients are appended
  // layer by layer in params() order.
  Tensor backward(const Trace& trace, Tensor upstream, std::vector<Tensor>* param_grads) const;

  std::vector<Tensor*> params();
  std::vector<const Tensor*> params() const;
  std::vector<Tensor*> buffers();
  std::vector<const Tensor*> buffers() const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace gaitrec::nn

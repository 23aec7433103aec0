#include "gaitrec/fusion.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gaitrec/nn/checkpoint.hpp"
#include "gaitrec/nn/optimizer.hpp"

namespace gaitrec {

namespace {

constexpr char kModelKind[] = "fusion";

nn::Sequential build_fusion_net(const FusionNetwork::Config& cfg, std::uint64_t seed) {
  Rng rng(seed);
  nn::Sequential net;
  net.add(std::make_unique<nn::Conv2d>(2, cfg.width, 3, rng));
  net.add(std::make_unique<nn::Relu>());
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    net.add(std::make_unique<nn::ResidualBlock>(cfg.width, rng));
    net.add(std::make_unique<nn::Conv2d>(cfg.width, cfg.width, 3, rng));
    net.add(std::make_unique<nn::Relu>());
  }
  net.add(std::make_unique<nn::Conv2d>(cfg.width, 1, 3, rng));
  net.add(std::make_unique<nn::Sigmoid>());
  return net;
}

}  // namespace

nn::Tensor stack_frame_pair(const SilhouetteFrame& f1, const SilhouetteFrame& f2) {
  nn::Tensor t({1, kFrameHeight, kFrameWidth, 2});
  double* dst = t.data();
  for (std::size_t i = 0; i < kFramePixels; ++i) {
    *dst++ = static_cast<double>(f1.pixels[i]);
    *dst++ = static_cast<double>(f2.pixels[i]);
  }
  return t;
}

FusionNetwork::FusionNetwork(const Config& config, std::uint64_t seed)
    : config_(config), net_(build_fusion_net(config, seed)) {
  require(config.blocks >= 1 && config.width >= 1, "fusion: blocks and width must be >= 1");
  const nn::Shape out = net_.output_shape({1, kFrameHeight, kFrameWidth, 2});
  require(out == nn::Shape({1, kFrameHeight, kFrameWidth, 1}),
          "fusion: network output is " + nn::shape_str(out) + ", expected [1x150x200x1]");
}

nn::Tensor FusionNetwork::forward_soft(const nn::Tensor& pairs) const {
  require(pairs.ndim() == 4 && pairs.dim(1) == kFrameHeight && pairs.dim(2) == kFrameWidth &&
              pairs.dim(3) == 2,
          "fuse: input must be Bx150x200x2, got " + nn::shape_str(pairs.shape()));
  return net_.forward(pairs, false);
}

SilhouetteFrame FusionNetwork::fuse(const SilhouetteFrame& f1, const SilhouetteFrame& f2) const {
  nn::Tensor out = forward_soft(stack_frame_pair(f1, f2));
  SilhouetteFrame fused = SilhouetteFrame::blank(FrameStatus::reconstructed);
  for (std::size_t i = 0; i < kFramePixels; ++i) fused.pixels[i] = out[i] >= 0.5 ? 1 : 0;
  return fused;
}

TrainReport FusionNetwork::train(const std::vector<FusionTriple>& triples,
                                 const TrainConfig& config) {
  require(!triples.empty(), "train_fusion: empty training set");

  auto params = net_.params();
  nn::AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  nn::AdamState state;

  Rng shuffle_rng(mix_seed(config.seed, 23));
  std::vector<std::size_t> order(triples.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::size_t bs = stop - start;
      nn::Tensor input({bs, kFrameHeight, kFrameWidth, 2});
      nn::Tensor target({bs, kFrameHeight, kFrameWidth, 1});
      double* in = input.data();
      double* tg = target.data();
      for (std::size_t i = 0; i < bs; ++i) {
        const FusionTriple& tr = triples[order[start + i]];
        for (std::size_t p = 0; p < kFramePixels; ++p) {
          *in++ = static_cast<double>(tr.forward_prediction.pixels[p]);
          *in++ = static_cast<double>(tr.backward_prediction.pixels[p]);
          *tg++ = static_cast<double>(tr.truth.pixels[p]);
        }
      }

      nn::Sequential::Trace trace;
      nn::Tensor pred = net_.forward_trace(std::move(input), trace, true);
      epoch_loss += nn::bce_loss(pred, target);
      std::vector<nn::Tensor> grads;
      net_.backward(trace, nn::bce_loss_grad(pred, target), &grads);
      nn::adam_step(params, grads, state, adam);
    }
    report.epoch_loss.push_back(epoch_loss / static_cast<double>(triples.size()));
    report.epochs_run = epoch + 1;
  }
  return report;
}

void FusionNetwork::save(const std::filesystem::path& path) const {
  nlohmann::json meta;
  meta["blocks"] = config_.blocks;
  meta["width"] = config_.width;
  std::vector<const nn::Tensor*> tensors;
  const auto& net = net_;
  for (const auto* t : net.params()) tensors.push_back(t);
  for (const auto* t : net.buffers()) tensors.push_back(t);
  nn::save_checkpoint(path, kModelKind, meta, tensors);
}

FusionNetwork FusionNetwork::load(const std::filesystem::path& path) {
  nn::Checkpoint ck = nn::load_checkpoint(path, kModelKind);
  Config cfg;
  cfg.blocks = ck.meta.at("blocks").get<std::size_t>();
  cfg.width = ck.meta.at("width").get<std::size_t>();
  FusionNetwork model(cfg, 0);
  std::vector<nn::Tensor*> slots;
  for (auto* t : model.net_.params()) slots.push_back(t);
  for (auto* t : model.net_.buffers()) slots.push_back(t);
  require(ck.tensors.size() == slots.size(), "fusion checkpoint: tensor count mismatch");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    require(slots[i]->shape() == ck.tensors[i].shape(),
            "fusion checkpoint: tensor shape mismatch at index " + std::to_string(i));
    *slots[i] = std::move(ck.tensors[i]);
  }
  return model;
}

std::vector<FusionTriple> make_fusion_triples(const std::vector<GaitSequence>& corpus,
                                              const Autoencoder& ae, const LstmPredictor& m1,
                                              const LstmPredictor& m2) {
  require(m1.direction() == Direction::forward && m2.direction() == Direction::backward,
          "make_fusion_triples: expects (forward, backward) predictors");
  std::vector<FusionTriple> triples;
  const std::size_t dim = kEmbeddingDim;
  for (const auto& seq : corpus) {
    const std::size_t n = seq.size();
    if (n < 2 * kContextLength + 1) continue;

    std::vector<std::size_t> targets;
    for (std::size_t i = kContextLength; i + kContextLength < n; ++i) {
      bool clean = true;
      for (std::size_t t = i - kContextLength; t <= i + kContextLength; ++t)
        if (seq.frames[t].status != FrameStatus::observed) {
          clean = false;
          break;
        }
      if (clean) targets.push_back(i);
    }
    if (targets.empty()) continue;

    nn::Tensor emb = ae.encode_batch(frames_to_tensor(seq.frames));
    nn::Tensor ctx_f({targets.size(), kContextLength, dim});
    nn::Tensor ctx_b({targets.size(), kContextLength, dim});
    for (std::size_t w = 0; w < targets.size(); ++w) {
      const std::size_t i = targets[w];
      for (std::size_t t = 0; t < kContextLength; ++t) {
        std::memcpy(ctx_f.data() + (w * kContextLength + t) * dim,
                    emb.data() + (i - kContextLength + t) * dim, dim * sizeof(double));
        std::memcpy(ctx_b.data() + (w * kContextLength + t) * dim,
                    emb.data() + (i + 1 + t) * dim, dim * sizeof(double));
      }
    }
    nn::Tensor soft_f = ae.decode_batch(m1.predict_batch(ctx_f));
    nn::Tensor soft_b = ae.decode_batch(m2.predict_batch(ctx_b));
    for (std::size_t w = 0; w < targets.size(); ++w) {
      FusionTriple tr;
      tr.forward_prediction = SilhouetteFrame::blank(FrameStatus::reconstructed);
      tr.backward_prediction = SilhouetteFrame::blank(FrameStatus::reconstructed);
      for (std::size_t p = 0; p < kFramePixels; ++p) {
        tr.forward_prediction.pixels[p] = soft_f[w * kFramePixels + p] >= 0.5 ? 1 : 0;
        tr.backward_prediction.pixels[p] = soft_b[w * kFramePixels + p] >= 0.5 ? 1 : 0;
      }
      tr.truth = seq.frames[targets[w]];
      triples.push_back(std::move(tr));
    }
  }
  require(!triples.empty(), "make_fusion_triples: no fully observed 11-frame spans in corpus");
  return triples;
}

}  // namespace gaitrec

#include "gaitrec/lstm_predictor.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gaitrec/nn/checkpoint.hpp"
#include "gaitrec/nn/optimizer.hpp"

namespace gaitrec {

std::string direction_name(Direction d) {
  return d == Direction::forward ? "forward" : "backward";
}

ContextWindow::ContextWindow(Direction dir, std::vector<Embedding> embs)
    : direction(dir), embeddings(std::move(embs)) {
  require(embeddings.size() == kContextLength,
          "context window must hold exactly " + std::to_string(kContextLength) +
              " embeddings, got " + std::to_string(embeddings.size()));
}

ContextWindow ContextWindow::preceding(const std::vector<Embedding>& sequence,
                                       std::size_t target) {
  require(target >= kContextLength && target < sequence.size(),
          "preceding context needs " + std::to_string(kContextLength) +
              " frames before the target");
  std::vector<Embedding> embs(sequence.begin() + static_cast<std::ptrdiff_t>(target - kContextLength),
                              sequence.begin() + static_cast<std::ptrdiff_t>(target));
  return ContextWindow(Direction::forward, std::move(embs));
}

ContextWindow ContextWindow::succeeding(const std::vector<Embedding>& sequence,
                                        std::size_t target) {
  require(target + kContextLength < sequence.size(),
          "succeeding context needs " + std::to_string(kContextLength) +
              " frames after the target");
  std::vector<Embedding> embs(sequence.begin() + static_cast<std::ptrdiff_t>(target + 1),
                              sequence.begin() + static_cast<std::ptrdiff_t>(target + 1 + kContextLength));
  return ContextWindow(Direction::backward, std::move(embs));
}

namespace {

Rng seeded(std::uint64_t seed, std::uint64_t stream) { return Rng(mix_seed(seed, stream)); }

// Extracts step t (in feed order) from B x 5 x D contexts.
nn::Tensor slice_step(const nn::Tensor& contexts, std::size_t step, bool reversed) {
  const std::size_t batch = contexts.dim(0);
  const std::size_t dim = contexts.dim(2);
  const std::size_t src_step = reversed ? kContextLength - 1 - step : step;
  nn::Tensor out({batch, dim});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* src = contexts.data() + (b * kContextLength + src_step) * dim;
    std::memcpy(out.data() + b * dim, src, dim * sizeof(double));
  }
  return out;
}

}  // namespace

struct LstmPredictor::PassState {
  // Fixed-size storage so the step caches' borrowed pointers stay valid.
  std::vector<nn::Tensor> xs;                       // 5 step inputs
  std::vector<nn::Tensor> h1, c1, h2, c2;           // 6 states each (index 0 = zeros)
  std::vector<nn::LstmCell::StepCache> cache1, cache2;  // 5 each
};

LstmPredictor::LstmPredictor(Direction direction, const Config& config, std::uint64_t seed)
    : direction_(direction),
      config_(config),
      layer1_([&] {
        Rng rng = seeded(seed, 1);
        return nn::LstmCell(kEmbeddingDim, config.hidden, rng);
      }()),
      layer2_([&] {
        Rng rng = seeded(seed, 2);
        return nn::LstmCell(config.hidden, config.hidden, rng);
      }()),
      head_([&] {
        Rng rng = seeded(seed, 3);
        return nn::Dense(config.hidden, kEmbeddingDim, rng);
      }()) {
  require(config.hidden >= 1, "lstm predictor: hidden size must be >= 1");
}

nn::Tensor LstmPredictor::forward_pass(const nn::Tensor& contexts, PassState* state) const {
  require(contexts.ndim() == 3 && contexts.dim(1) == kContextLength &&
              contexts.dim(2) == kEmbeddingDim,
          "predict: contexts must be Bx5x15200, got " + nn::shape_str(contexts.shape()));
  const std::size_t batch = contexts.dim(0);
  const bool reversed = direction_ == Direction::backward && config_.reversed_input;

  PassState local;
  PassState& s = state ? *state : local;
  s.xs.resize(kContextLength);
  s.h1.assign(kContextLength + 1, nn::Tensor({batch, config_.hidden}));
  s.c1.assign(kContextLength + 1, nn::Tensor({batch, config_.hidden}));
  s.h2.assign(kContextLength + 1, nn::Tensor({batch, config_.hidden}));
  s.c2.assign(kContextLength + 1, nn::Tensor({batch, config_.hidden}));
  s.cache1.resize(kContextLength);
  s.cache2.resize(kContextLength);

  for (std::size_t t = 0; t < kContextLength; ++t) {
    s.xs[t] = slice_step(contexts, t, reversed);
    layer1_.step(s.xs[t], s.h1[t], s.c1[t], &s.h1[t + 1], &s.c1[t + 1],
                 state ? &s.cache1[t] : nullptr);
    layer2_.step(s.h1[t + 1], s.h2[t], s.c2[t], &s.h2[t + 1], &s.c2[t + 1],
                 state ? &s.cache2[t] : nullptr);
  }
  return head_.forward(s.h2[kContextLength], nullptr, false);
}

nn::Tensor LstmPredictor::predict_batch(const nn::Tensor& contexts) const {
  return forward_pass(contexts, nullptr);
}

Embedding LstmPredictor::predict(const ContextWindow& context) const {
  require(context.direction == direction_,
          "predict: context direction '" + direction_name(context.direction) +
              "' does not match model direction '" + direction_name(direction_) + "'");
  nn::Tensor in({1, kContextLength, kEmbeddingDim});
  for (std::size_t t = 0; t < kContextLength; ++t)
    std::memcpy(in.data() + t * kEmbeddingDim, context.embeddings[t].values.data(),
                kEmbeddingDim * sizeof(double));
  nn::Tensor out = forward_pass(in, nullptr);
  return Embedding(std::move(out.values()));
}

TrainReport LstmPredictor::train(const Dataset& data, const TrainConfig& config) {
  require(data.inputs.ndim() == 3 && data.inputs.dim(0) > 0, "train: empty dataset");
  require(data.inputs.dim(0) == data.targets.dim(0), "train: input/target count mismatch");
  const std::size_t total = data.inputs.dim(0);

  if (config.head_bias_warm_start) {
    nn::Tensor& bias = head_.bias();
    bias.fill(0.0);
    const double* t = data.targets.data();
    for (std::size_t b = 0; b < total; ++b)
      for (std::size_t j = 0; j < kEmbeddingDim; ++j) bias[j] += t[b * kEmbeddingDim + j];
    for (std::size_t j = 0; j < kEmbeddingDim; ++j) bias[j] /= static_cast<double>(total);
  }

  std::vector<nn::Tensor*> params;
  for (auto* p : layer1_.params()) params.push_back(p);
  for (auto* p : layer2_.params()) params.push_back(p);
  for (auto* p : head_.params()) params.push_back(p);

  nn::AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  adam.beta1 = config.beta1;
  adam.beta2 = config.beta2;
  nn::AdamState state;

  Rng shuffle_rng = seeded(config.seed, 11);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  const std::size_t dim = kEmbeddingDim;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < total; start += config.batch_size) {
      const std::size_t stop = std::min(total, start + config.batch_size);
      const std::size_t bs = stop - start;

      nn::Tensor contexts({bs, kContextLength, dim});
      nn::Tensor targets({bs, dim});
      for (std::size_t i = 0; i < bs; ++i) {
        const std::size_t src = order[start + i];
        std::memcpy(contexts.data() + i * kContextLength * dim,
                    data.inputs.data() + src * kContextLength * dim,
                    kContextLength * dim * sizeof(double));
        std::memcpy(targets.data() + i * dim, data.targets.data() + src * dim,
                    dim * sizeof(double));
      }

      PassState pass;
      nn::Tensor pred = forward_pass(contexts, &pass);
      epoch_loss += nn::mse_loss(pred, targets) * static_cast<double>(bs);

      // Head backward, then BPTT through layer 2, then layer 1.
      std::vector<nn::Tensor> head_grads;
      nn::Tensor d_h2_final =
          head_.backward(pass.h2[kContextLength], nn::Cache{}, nn::mse_loss_grad(pred, targets),
                         &head_grads);

      nn::LstmCell::Grads g1, g2;
      g1.init(layer1_);
      g2.init(layer2_);

      std::vector<nn::Tensor> d_h1(kContextLength);  // grads w.r.t. layer-1 outputs
      nn::Tensor dh = std::move(d_h2_final);
      nn::Tensor dc({bs, config_.hidden});
      for (std::size_t t = kContextLength; t-- > 0;) {
        nn::Tensor dh_prev, dc_prev;
        layer2_.backward_step(pass.cache2[t], dh, dc, &d_h1[t], &dh_prev, &dc_prev, &g2);
        dh = std::move(dh_prev);
        dc = std::move(dc_prev);
      }
      dh = nn::Tensor({bs, config_.hidden});
      dc = nn::Tensor({bs, config_.hidden});
      for (std::size_t t = kContextLength; t-- > 0;) {
        d_h1[t].add_scaled(dh, 1.0);
        nn::Tensor dh_prev, dc_prev;
        layer1_.backward_step(pass.cache1[t], d_h1[t], dc, nullptr, &dh_prev, &dc_prev, &g1);
        dh = std::move(dh_prev);
        dc = std::move(dc_prev);
      }

      std::vector<nn::Tensor> grads;
      grads.push_back(std::move(g1.d_wx));
      grads.push_back(std::move(g1.d_wh));
      grads.push_back(std::move(g1.d_b));
      grads.push_back(std::move(g2.d_wx));
      grads.push_back(std::move(g2.d_wh));
      grads.push_back(std::move(g2.d_b));
      for (auto& g : head_grads) grads.push_back(std::move(g));
      nn::adam_step(params, grads, state, adam);
    }
    report.epoch_loss.push_back(epoch_loss / static_cast<double>(total));
    report.epochs_run = epoch + 1;
  }
  return report;
}

void LstmPredictor::save(const std::filesystem::path& path) const {
  nlohmann::json meta;
  meta["hidden"] = config_.hidden;
  meta["reversed_input"] = config_.reversed_input;
  meta["context_length"] = kContextLength;
  meta["embedding_dim"] = kEmbeddingDim;
  std::vector<const nn::Tensor*> tensors;
  for (const auto* t : layer1_.params()) tensors.push_back(t);
  for (const auto* t : layer2_.params()) tensors.push_back(t);
  for (const auto* t : head_.params()) tensors.push_back(t);
  nn::save_checkpoint(path, std::string("lstm_") + direction_name(direction_), meta, tensors);
}

LstmPredictor LstmPredictor::load(const std::filesystem::path& path) {
  nn::Checkpoint ck = nn::load_checkpoint(path);
  Direction dir;
  if (ck.model_kind == "lstm_forward")
    dir = Direction::forward;
  else if (ck.model_kind == "lstm_backward")
    dir = Direction::backward;
  else
    throw Error("checkpoint: " + path.string() + " holds '" + ck.model_kind +
                "', expected an lstm predictor");
  Config cfg;
  cfg.hidden = ck.meta.at("hidden").get<std::size_t>();
  cfg.reversed_input = ck.meta.at("reversed_input").get<bool>();
  LstmPredictor model(dir, cfg, 0);
  std::vector<nn::Tensor*> params;
  for (auto* p : model.layer1_.params()) params.push_back(p);
  for (auto* p : model.layer2_.params()) params.push_back(p);
  for (auto* p : model.head_.params()) params.push_back(p);
  require(ck.tensors.size() == params.size(), "lstm checkpoint: tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i]->shape() == ck.tensors[i].shape(),
            "lstm checkpoint: tensor shape mismatch at index " + std::to_string(i));
    *params[i] = std::move(ck.tensors[i]);
  }
  return model;
}

LstmPredictor::Dataset build_predictor_dataset(Direction direction,
                                               const std::vector<GaitSequence>& corpus,
                                               const Autoencoder& ae) {
  // Count windows first: every run of 6 consecutive observed frames yields one.
  std::vector<std::pair<std::size_t, std::size_t>> windows;  // (sequence, start)
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto& frames = corpus[s].frames;
    if (frames.size() < kContextLength + 1) continue;
    for (std::size_t start = 0; start + kContextLength < frames.size(); ++start) {
      bool clean = true;
      for (std::size_t t = start; t <= start + kContextLength; ++t)
        if (frames[t].status == FrameStatus::occluded) {
          clean = false;
          break;
        }
      if (clean) windows.emplace_back(s, start);
    }
  }
  require(!windows.empty(), "train_predictor: no six-frame unoccluded windows in corpus");

  // Encode each sequence once.
  std::vector<nn::Tensor> encoded(corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    bool used = false;
    for (const auto& w : windows)
      if (w.first == s) {
        used = true;
        break;
      }
    if (!used) continue;
    encoded[s] = ae.encode_batch(frames_to_tensor(corpus[s].frames));
  }

  const std::size_t dim = kEmbeddingDim;
  LstmPredictor::Dataset data;
  data.inputs = nn::Tensor({windows.size(), kContextLength, dim});
  data.targets = nn::Tensor({windows.size(), dim});
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto [s, start] = windows[w];
    const double* emb = encoded[s].data();
    // Forward: inputs are the first five frames, target the sixth. Backward:
    // target is the first frame, inputs the succeeding five (natural order;
    // the model applies its own feed order).
    const std::size_t target_idx = direction == Direction::forward ? start + kContextLength : start;
    const std::size_t ctx_begin = direction == Direction::forward ? start : start + 1;
    for (std::size_t t = 0; t < kContextLength; ++t)
      std::memcpy(data.inputs.data() + (w * kContextLength + t) * dim,
                  emb + (ctx_begin + t) * dim, dim * sizeof(double));
    std::memcpy(data.targets.data() + w * dim, emb + target_idx * dim, dim * sizeof(double));
  }
  return data;
}

PredictorTrainResult train_predictor(Direction direction, const std::vector<GaitSequence>& corpus,
                                     const Autoencoder& ae,
                                     const LstmPredictor::TrainConfig& config,
                                     const LstmPredictor::Config& arch) {
  LstmPredictor::Dataset data = build_predictor_dataset(direction, corpus, ae);
  LstmPredictor model(direction, arch, mix_seed(config.seed, 101));
  TrainReport report = model.train(data, config);
  return {std::move(model), std::move(report)};
}

}  // namespace gaitrec

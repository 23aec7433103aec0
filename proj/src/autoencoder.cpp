#include "gaitrec/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gaitrec/nn/checkpoint.hpp"
#include "gaitrec/nn/optimizer.hpp"

namespace gaitrec {

namespace {
constexpr char kModelKind[] = "autoencoder";
}

SilhouetteFrame SoftFrame::binarize(FrameStatus status) const {
  SilhouetteFrame f = SilhouetteFrame::blank(status);
  for (std::size_t i = 0; i < kFramePixels; ++i) f.pixels[i] = values[i] >= 0.5 ? 1 : 0;
  return f;
}

nn::Tensor frames_to_tensor(const std::vector<const SilhouetteFrame*>& frames) {
  nn::Tensor t({frames.size(), kFrameHeight, kFrameWidth, 1});
  double* dst = t.data();
  for (const auto* f : frames)
    for (std::uint8_t p : f->pixels) *dst++ = static_cast<double>(p);
  return t;
}

nn::Tensor frames_to_tensor(const std::vector<SilhouetteFrame>& frames) {
  std::vector<const SilhouetteFrame*> ptrs;
  ptrs.reserve(frames.size());
  for (const auto& f : frames) ptrs.push_back(&f);
  return frames_to_tensor(ptrs);
}

Autoencoder::Autoencoder(std::uint64_t seed) {
  Rng rng(seed);
  encoder_.add(std::make_unique<nn::Conv2d>(1, 32, 3, rng));
  encoder_.add(std::make_unique<nn::Relu>());
  encoder_.add(std::make_unique<nn::MaxPool2d>());
  encoder_.add(std::make_unique<nn::Conv2d>(32, 8, 3, rng));
  encoder_.add(std::make_unique<nn::Relu>());
  encoder_.add(std::make_unique<nn::MaxPool2d>());
  encoder_.add(std::make_unique<nn::Flatten>());

  decoder_.add(std::make_unique<nn::Reshape>(nn::Shape{38, 50, 8}));
  decoder_.add(std::make_unique<nn::Upsample2dNearest>());
  decoder_.add(std::make_unique<nn::Conv2d>(8, 8, 3, rng));
  decoder_.add(std::make_unique<nn::Relu>());
  decoder_.add(std::make_unique<nn::Upsample2dNearest>());
  decoder_.add(std::make_unique<nn::Conv2d>(8, 32, 3, rng));
  decoder_.add(std::make_unique<nn::Relu>());
  decoder_.add(std::make_unique<nn::CropRows>(1));
  decoder_.add(std::make_unique<nn::Conv2d>(32, 1, 3, rng));
  decoder_.add(std::make_unique<nn::Sigmoid>());

  // 150x200x1 -> 75x100x32 -> 38x50x8 -> 15200, mirrored back to 150x200x1.
  const nn::Shape enc_out = encoder_.output_shape({1, kFrameHeight, kFrameWidth, 1});
  require(enc_out == nn::Shape({1, kEmbeddingDim}),
          "autoencoder: encoder output is " + nn::shape_str(enc_out) + ", expected [1x15200]");
  const nn::Shape dec_out = decoder_.output_shape({1, kEmbeddingDim});
  require(dec_out == nn::Shape({1, kFrameHeight, kFrameWidth, 1}),
          "autoencoder: decoder output is " + nn::shape_str(dec_out) +
              ", expected [1x150x200x1]");
}

Embedding Autoencoder::encode(const SilhouetteFrame& frame) const {
  std::vector<const SilhouetteFrame*> one{&frame};
  nn::Tensor out = encoder_.forward(frames_to_tensor(one), false);
  return Embedding(std::move(out.values()));
}

nn::Tensor Autoencoder::encode_batch(const nn::Tensor& frames) const {
  require(frames.ndim() == 4 && frames.dim(1) == kFrameHeight && frames.dim(2) == kFrameWidth &&
              frames.dim(3) == 1,
          "encode: frames must be Bx150x200x1");
  return encoder_.forward(frames, false);
}

SoftFrame Autoencoder::decode(const Embedding& embedding) const {
  nn::Tensor in({1, kEmbeddingDim});
  std::copy(embedding.values.begin(), embedding.values.end(), in.data());
  nn::Tensor out = decoder_.forward(in, false);
  SoftFrame soft;
  soft.values = std::move(out.values());
  return soft;
}

nn::Tensor Autoencoder::decode_batch(const nn::Tensor& embeddings) const {
  require(embeddings.ndim() == 2 && embeddings.dim(1) == kEmbeddingDim,
          "decode: embeddings must be Bx15200");
  return decoder_.forward(embeddings, false);
}

TrainReport Autoencoder::train(const std::vector<SilhouetteFrame>& corpus,
                               const TrainConfig& config) {
  require(!corpus.empty(), "train_autoencoder: empty corpus");

  // Training runs the stacked encoder+decoder; both stacks share one trace.
  std::vector<nn::Tensor*> params;
  for (auto* p : encoder_.params()) params.push_back(p);
  for (auto* p : decoder_.params()) params.push_back(p);

  nn::AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  nn::AdamState state;

  Rng shuffle_rng(mix_seed(config.seed, 17));
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  std::size_t flat_epochs = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<const SilhouetteFrame*> batch;
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&corpus[order[i]]);
      nn::Tensor input = frames_to_tensor(batch);

      nn::Sequential::Trace enc_trace, dec_trace;
      nn::Tensor code = encoder_.forward_trace(input, enc_trace, true);
      nn::Tensor recon = decoder_.forward_trace(std::move(code), dec_trace, true);

      const nn::Tensor& target = enc_trace.inputs.front();
      epoch_loss += nn::bce_loss(recon, target);

      std::vector<nn::Tensor> enc_grads, dec_grads;
      nn::Tensor up = nn::bce_loss_grad(recon, target);
      nn::Tensor d_code = decoder_.backward(dec_trace, std::move(up), &dec_grads);
      encoder_.backward(enc_trace, std::move(d_code), &enc_grads);

      std::vector<nn::Tensor> grads;
      grads.reserve(enc_grads.size() + dec_grads.size());
      for (auto& g : enc_grads) grads.push_back(std::move(g));
      for (auto& g : dec_grads) grads.push_back(std::move(g));
      nn::adam_step(params, grads, state, adam);
    }
    epoch_loss /= static_cast<double>(corpus.size());
    report.epoch_loss.push_back(epoch_loss);
    report.epochs_run = epoch + 1;

    // "Till saturation": relative improvement below tolerance for
    // `saturation_patience` consecutive epochs.
    if (report.epoch_loss.size() >= 2) {
      const double prev = report.epoch_loss[report.epoch_loss.size() - 2];
      const double rel = (prev - epoch_loss) / std::max(std::abs(prev), 1e-12);
      flat_epochs = rel < config.saturation_tolerance ? flat_epochs + 1 : 0;
      if (flat_epochs >= config.saturation_patience) {
        report.saturated = true;
        break;
      }
    }
  }
  return report;
}

void Autoencoder::save(const std::filesystem::path& path) const {
  std::vector<const nn::Tensor*> tensors;
  const auto& enc = encoder_;
  const auto& dec = decoder_;
  for (const auto* t : enc.params()) tensors.push_back(t);
  for (const auto* t : dec.params()) tensors.push_back(t);

  nlohmann::json meta;
  auto dump_stack = [](const nn::Sequential& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < s.layer_count(); ++i)
      arr.push_back({{"kind", s.layer(i).kind()}, {"hyperparams", s.layer(i).hyperparams()}});
    return arr;
  };
  meta["encoder"] = dump_stack(enc);
  meta["decoder"] = dump_stack(dec);
  meta["embedding_dim"] = kEmbeddingDim;
  nn::save_checkpoint(path, kModelKind, meta, tensors);
}

Autoencoder Autoencoder::load(const std::filesystem::path& path) {
  nn::Checkpoint ck = nn::load_checkpoint(path, kModelKind);
  Autoencoder ae(0);
  std::vector<nn::Tensor*> params;
  for (auto* p : ae.encoder_.params()) params.push_back(p);
  for (auto* p : ae.decoder_.params()) params.push_back(p);
  require(ck.tensors.size() == params.size(), "autoencoder checkpoint: tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i]->shape() == ck.tensors[i].shape(),
            "autoencoder checkpoint: tensor shape mismatch at index " + std::to_string(i));
    *params[i] = std::move(ck.tensors[i]);
  }
  return ae;
}

}  // namespace gaitrec

#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "gaitrec/nn/layers.hpp"
#include "gaitrec/silhouette.hpp"

namespace gaitrec {

inline constexpr std::size_t kEmbeddingDim = 15200;  // flattened 38x50x8

// Per-frame encoder output. Carries the invariant as a type.
struct Embedding {
  std::vector<double> values;

  Embedding() : values(kEmbeddingDim, 0.0) {}
  explicit Embedding(std::vector<double> v) : values(std::move(v)) {
    require(values.size() == kEmbeddingDim,
            "embedding must have dimension " + std::to_string(kEmbeddingDim));
  }
};

// Real-valued decoder output in (0,1), 150x200.
struct SoftFrame {
  std::vector<double> values;

  SoftFrame() : values(kFramePixels, 0.0) {}
  double at(std::size_t r, std::size_t c) const { return values[r * kFrameWidth + c]; }

  // >= 0.5 maps to foreground.
  SilhouetteFrame binarize(FrameStatus status = FrameStatus::reconstructed) const;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // per-epoch mean loss (per item)
  std::size_t epochs_run = 0;
  bool saturated = false;
};

// Two conv+pool stages down to a 38x50x8 map flattened to 15200 dims, and the
// mirror decoder (upsample+conv twice, one-pixel row crop, single-filter conv,
// sigmoid).
class Autoencoder {
 public:
  explicit Autoencoder(std::uint64_t seed);

  struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 16;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;
    // Saturation: relative epoch-mean improvement below this for 5
    // consecutive epochs stops training early.
    double saturation_tolerance = 1e-4;
    std::size_t saturation_patience = 5;
  };

  Embedding encode(const SilhouetteFrame& frame) const;
  nn::Tensor encode_batch(const nn::Tensor& frames) const;  // BxHxWx1 -> BxD
  SoftFrame decode(const Embedding& embedding) const;
  nn::Tensor decode_batch(const nn::Tensor& embeddings) const;  // BxD -> BxHxWx1

  TrainReport train(const std::vector<SilhouetteFrame>& corpus, const TrainConfig& config);

  void save(const std::filesystem::path& path) const;
  static Autoencoder load(const std::filesystem::path& path);

  nn::Sequential& encoder() { return encoder_; }
  nn::Sequential& decoder() { return decoder_; }

 private:
  nn::Sequential encoder_, decoder_;
};

nn::Tensor frames_to_tensor(const std::vector<SilhouetteFrame>& frames);
nn::Tensor frames_to_tensor(const std::vector<const SilhouetteFrame*>& frames);

}  // namespace gaitrec

#pragma once

#include <filesystem>
#include <vector>

#include "gaitrec/autoencoder.hpp"
#include "gaitrec/lstm_predictor.hpp"
#include "gaitrec/nn/layers.hpp"

namespace gaitrec {

// One training example for the fusion network: the two binarized
// single-direction predictions and the ground-truth frame.
struct FusionTriple {
  SilhouetteFrame forward_prediction;
  SilhouetteFrame backward_prediction;
  SilhouetteFrame truth;
};

// Residual fusion of the two LSTM predictions: an input conv lifts the
// stacked 2-channel frame pair to the working width, then residual blocks
// alternate with plain 3x3 convs, and a single-filter conv + sigmoid emits
// the fused frame.
class FusionNetwork {
 public:
  struct Config {
    std::size_t blocks = 3;  // residual blocks, each followed by a plain conv
    std::size_t width = 16;  // channel width of the trunk
  };

  struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 8;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;
  };

  FusionNetwork(const Config& config, std::uint64_t seed);

  const Config& config() const { return config_; }

  // Inputs must already be binary (thresholded at 0.5 upstream); the output
  // is re-thresholded at 0.5 (ties map to foreground) with
  // status = reconstructed.
  SilhouetteFrame fuse(const SilhouetteFrame& f1, const SilhouetteFrame& f2) const;

  // B x 150 x 200 x 2 -> B x 150 x 200 x 1, values in (0,1).
  nn::Tensor forward_soft(const nn::Tensor& pairs) const;

  TrainReport train(const std::vector<FusionTriple>& triples, const TrainConfig& config);

  void save(const std::filesystem::path& path) const;
  static FusionNetwork load(const std::filesystem::path& path);

 private:
  Config config_;
  nn::Sequential net_;
};

// Runs the trained predictors over fully clean stretches of the corpus to
// simulate gaps: every frame with five observed frames on each side yields a
// triple (decoded forward prediction, decoded backward prediction, truth).
std::vector<FusionTriple> make_fusion_triples(const std::vector<GaitSequence>& corpus,
                                              const Autoencoder& ae, const LstmPredictor& m1,
                                              const LstmPredictor& m2);

nn::Tensor stack_frame_pair(const SilhouetteFrame& f1, const SilhouetteFrame& f2);

}  // namespace gaitrec

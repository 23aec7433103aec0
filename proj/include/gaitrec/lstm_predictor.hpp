#pragma once

#include <filesystem>
#include <vector>

#include "gaitrec/autoencoder.hpp"
#include "gaitrec/nn/lstm_cell.hpp"
#include "gaitrec/silhouette.hpp"

namespace gaitrec {

inline constexpr std::size_t kContextLength = 5;

enum class Direction { forward, backward };

std::string direction_name(Direction d);

// Five context embeddings in natural temporal order. The factories take the
// target index and pick the window around it, so the target's own embedding
// can never appear in its context.
struct ContextWindow {
  Direction direction;
  std::vector<Embedding> embeddings;  // exactly 5, ascending frame index

  ContextWindow(Direction dir, std::vector<Embedding> embs);

  // E_{i-5} ... E_{i-1}; requires target >= 5.
  static ContextWindow preceding(const std::vector<Embedding>& sequence, std::size_t target);
  // E_{i+1} ... E_{i+5}; requires target + 5 < sequence size.
  static ContextWindow succeeding(const std::vector<Embedding>& sequence, std::size_t target);
};

// Two stacked LSTM layers unrolled over the five context steps; the second
// layer's final hidden vector feeds a dense head that emits the predicted
// embedding.
class LstmPredictor {
 public:
  struct Config {
    std::size_t hidden = 1024;
    // The backward model consumes succeeding frames nearest-frame-last
    // (E_{i+5} first). Both orders are wire-compatible.
    bool reversed_input = true;
  };

  struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 8;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    std::uint64_t seed = 0;
    // Start the head bias at the mean training target so the optimizer spends
    // its steps on dynamics rather than on locating the embedding centroid.
    bool head_bias_warm_start = true;
  };

  LstmPredictor(Direction direction, const Config& config, std::uint64_t seed);

  Direction direction() const { return direction_; }
  const Config& config() const { return config_; }

  Embedding predict(const ContextWindow& context) const;
  // contexts: B x 5 x 15200 in natural temporal order.
  nn::Tensor predict_batch(const nn::Tensor& contexts) const;

  struct Dataset {
    nn::Tensor inputs;   // B x 5 x 15200, natural temporal order
    nn::Tensor targets;  // B x 15200
  };

  TrainReport train(const Dataset& data, const TrainConfig& config);

  void save(const std::filesystem::path& path) const;
  static LstmPredictor load(const std::filesystem::path& path);

  const nn::LstmCell& layer1() const { return layer1_; }
  const nn::LstmCell& layer2() const { return layer2_; }
  const nn::Dense& head() const { return head_; }

 private:
  struct PassState;
  nn::Tensor forward_pass(const nn::Tensor& contexts, PassState* state) const;

  Direction direction_;
  Config config_;
  nn::LstmCell layer1_, layer2_;
  nn::Dense head_;
};

// Sliding six-frame windows over the unoccluded runs of the corpus: the five
// context embeddings plus the adjacent frame's embedding as target.
LstmPredictor::Dataset build_predictor_dataset(Direction direction,
                                               const std::vector<GaitSequence>& corpus,
                                               const Autoencoder& ae);

struct PredictorTrainResult {
  LstmPredictor model;
  TrainReport report;
};

PredictorTrainResult train_predictor(Direction direction, const std::vector<GaitSequence>& corpus,
                                     const Autoencoder& ae, const LstmPredictor::TrainConfig& config,
                                     const LstmPredictor::Config& arch = {});

}  // namespace gaitrec

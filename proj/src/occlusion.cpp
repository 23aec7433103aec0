#include "gaitrec/occlusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gaitrec/nn/checkpoint.hpp"
#include "gaitrec/nn/layers.hpp"
#include "gaitrec/nn/optimizer.hpp"

namespace gaitrec {

void OcclusionSpec::validate() const {
  require(band_low >= 0.0 && band_low <= band_high && band_high <= 0.5,
          "occlusion band must satisfy 0 <= low <= high <= 0.5");
}

bool OcclusionMask::contains(std::size_t i) const {
  return std::binary_search(indices.begin(), indices.end(), i);
}

OcclusionOutcome synthesize_occlusion(const GaitSequence& seq, const OcclusionSpec& spec) {
  spec.validate();
  const std::size_t n = seq.size();
  require(n >= 11, "synthesize_occlusion: sequence too short (need N >= 11, got " +
                       std::to_string(n) + ")");

  OcclusionOutcome out;
  out.sequence = seq;

  Rng rng(spec.rng_seed);
  double p = spec.band_low;
  if (spec.band_high > spec.band_low)
    p = std::uniform_real_distribution<double>(spec.band_low, spec.band_high)(rng);
  const auto k = static_cast<std::size_t>(std::lround(p * static_cast<double>(n)));
  if (k == 0) {
    out.band_degenerate = true;  // degenerate band; caller may warn
    return out;
  }

  std::vector<std::size_t> chosen;
  if (spec.placement == OcclusionSpec::Placement::contiguous) {
    const std::size_t start =
        std::uniform_int_distribution<std::size_t>(0, n - k)(rng);
    chosen.resize(k);
    std::iota(chosen.begin(), chosen.end(), start);
  } else {
    // Partial Fisher-Yates: first k entries of a random permutation.
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(i, n - 1)(rng);
      std::swap(pool[i], pool[j]);
    }
    chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());
  }

  for (std::size_t idx : chosen) {
    out.sequence.frames[idx] = SilhouetteFrame::blank(FrameStatus::occluded);
  }
  out.mask.indices = std::move(chosen);
  return out;
}

OcclusionMask HeuristicOcclusionDetector::detect(const GaitSequence& seq) const {
  OcclusionMask mask;
  if (seq.frames.empty()) return mask;

  std::vector<double> counts;
  counts.reserve(seq.size());
  for (const auto& f : seq.frames) counts.push_back(static_cast<double>(f.foreground_count()));

  std::vector<double> sorted = counts;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median =
      n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  for (std::size_t i = 0; i < counts.size(); ++i) {
    const bool too_small = counts[i] < static_cast<double>(abs_threshold_);
    const bool deviates = median > 0.0 && std::abs(counts[i] - median) > rel_threshold_ * median;
    if (too_small || deviates) mask.indices.push_back(i);
  }
  return mask;
}

OcclusionMask detect_occluded_frames(const GaitSequence& seq, const OcclusionDetector& detector) {
  return detector.detect(seq);
}

// ---------------------------------------------------------------------------
// CNN detector

namespace {

constexpr char kDetectorKind[] = "occlusion_cnn";

nn::Sequential build_detector_net(std::uint64_t seed) {
  Rng rng(seed);
  nn::Sequential net;
  net.add(std::make_unique<nn::Conv2d>(1, 4, 3, rng));
  net.add(std::make_unique<nn::Relu>());
  net.add(std::make_unique<nn::MaxPool2d>());
  net.add(std::make_unique<nn::Conv2d>(4, 8, 3, rng));
  net.add(std::make_unique<nn::Relu>());
  net.add(std::make_unique<nn::MaxPool2d>());
  net.add(std::make_unique<nn::Flatten>());
  net.add(std::make_unique<nn::Dense>(38 * 50 * 8, 1, rng));
  net.add(std::make_unique<nn::Sigmoid>());
  return net;
}

nn::Tensor frames_to_tensor(const std::vector<const SilhouetteFrame*>& frames) {
  nn::Tensor t({frames.size(), kFrameHeight, kFrameWidth, 1});
  double* dst = t.data();
  for (const auto* f : frames) {
    for (std::uint8_t p : f->pixels) *dst++ = static_cast<double>(p);
  }
  return t;
}

}  // namespace

CnnOcclusionDetector::CnnOcclusionDetector() : net_(std::make_unique<nn::Sequential>()) {}
CnnOcclusionDetector::CnnOcclusionDetector(CnnOcclusionDetector&&) noexcept = default;
CnnOcclusionDetector& CnnOcclusionDetector::operator=(CnnOcclusionDetector&&) noexcept = default;
CnnOcclusionDetector::~CnnOcclusionDetector() = default;

CnnOcclusionDetector CnnOcclusionDetector::train(
    const std::vector<std::pair<SilhouetteFrame, bool>>& labeled, const TrainConfig& config) {
  require(!labeled.empty(), "train_occlusion_detector: empty training set");
  std::size_t positives = 0;
  for (const auto& [frame, is_occ] : labeled) positives += is_occ ? 1 : 0;
  require(positives > 0 && positives < labeled.size(),
          "train_occlusion_detector: both classes must be present");

  CnnOcclusionDetector det;
  *det.net_ = build_detector_net(mix_seed(config.seed, 0));

  Rng shuffle_rng(mix_seed(config.seed, 1));
  std::vector<std::size_t> order(labeled.size());
  std::iota(order.begin(), order.end(), 0);

  auto params = det.net_->params();
  nn::AdamState state;
  nn::AdamConfig adam;
  adam.learning_rate = config.learning_rate;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<const SilhouetteFrame*> batch;
      nn::Tensor target({stop - start, 1});
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(&labeled[order[i]].first);
        target[i - start] = labeled[order[i]].second ? 1.0 : 0.0;
      }
      nn::Sequential::Trace trace;
      nn::Tensor pred = det.net_->forward_trace(frames_to_tensor(batch), trace, true);
      nn::Tensor up = nn::bce_loss_grad(pred, target);
      std::vector<nn::Tensor> grads;
      det.net_->backward(trace, std::move(up), &grads);
      nn::adam_step(params, grads, state, adam);
    }
  }
  return det;
}

double CnnOcclusionDetector::score(const SilhouetteFrame& frame) const {
  std::vector<const SilhouetteFrame*> one{&frame};
  nn::Tensor out = net_->forward(frames_to_tensor(one), false);
  return out[0];
}

OcclusionMask CnnOcclusionDetector::detect(const GaitSequence& seq) const {
  OcclusionMask mask;
  if (seq.frames.empty()) return mask;
  std::vector<const SilhouetteFrame*> all;
  for (const auto& f : seq.frames) all.push_back(&f);
  nn::Tensor out = net_->forward(frames_to_tensor(all), false);
  for (std::size_t i = 0; i < seq.size(); ++i)
    if (out[i] >= 0.5) mask.indices.push_back(i);
  return mask;
}

void CnnOcclusionDetector::save(const std::filesystem::path& path) const {
  std::vector<const nn::Tensor*> tensors;
  for (const auto* t : static_cast<const nn::Sequential&>(*net_).params()) tensors.push_back(t);
  for (const auto* t : static_cast<const nn::Sequential&>(*net_).buffers()) tensors.push_back(t);
  nlohmann::json meta;
  meta["layers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < net_->layer_count(); ++i) {
    meta["layers"].push_back(
        {{"kind", net_->layer(i).kind()}, {"hyperparams", net_->layer(i).hyperparams()}});
  }
  nn::save_checkpoint(path, kDetectorKind, meta, tensors);
}

CnnOcclusionDetector CnnOcclusionDetector::load(const std::filesystem::path& path) {
  nn::Checkpoint ck = nn::load_checkpoint(path, kDetectorKind);
  CnnOcclusionDetector det;
  *det.net_ = build_detector_net(0);
  auto params = det.net_->params();
  auto buffers = det.net_->buffers();
  require(ck.tensors.size() == params.size() + buffers.size(),
          "occlusion_cnn checkpoint: tensor count mismatch");
  std::size_t i = 0;
  for (auto* p : params) *p = ck.tensors[i++];
  for (auto* b : buffers) *b = ck.tensors[i++];
  return det;
}

}  // namespace gaitrec

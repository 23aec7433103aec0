#pragma once

#include <filesystem>
#include <memory>
#include <utility>
#include <vector>

#include "gaitrec/silhouette.hpp"

namespace gaitrec {

namespace nn {
class Sequential;
}

// Synthetic occlusion protocol: a fraction p drawn uniformly from the band,
// k = round(p*N) frames blackened (all-zero pixels, status = occluded).
struct OcclusionSpec {
  double band_low = 0.0;
  double band_high = 0.0;
  enum class Mode { blacken_full_frame } mode = Mode::blacken_full_frame;
  enum class Placement { scattered, contiguous } placement = Placement::scattered;
  std::uint64_t rng_seed = 0;

  void validate() const;  // 0 <= low <= high <= 0.5
};

struct OcclusionMask {
  std::vector<std::size_t> indices;  // sorted, unique

  bool contains(std::size_t i) const;
};

struct OcclusionOutcome {
  GaitSequence sequence;
  OcclusionMask mask;
  bool band_degenerate = false;  // k rounded to zero; sequence returned unchanged
};

// Requires N >= 11 so at least one frame has full five-frame context on each
// side. Deterministic given (sequence, spec).
OcclusionOutcome synthesize_occlusion(const GaitSequence& seq, const OcclusionSpec& spec);

class OcclusionDetector {
 public:
  virtual ~OcclusionDetector() = default;
  virtual OcclusionMask detect(const GaitSequence& seq) const = 0;
};

// Flags frame i when its foreground count drops below abs_threshold, or
// deviates from the sequence's median foreground count by more than
// rel_threshold * median. Exact for the blackening protocol.
class HeuristicOcclusionDetector final : public OcclusionDetector {
 public:
  explicit HeuristicOcclusionDetector(std::size_t abs_threshold = 50, double rel_threshold = 0.5)
      : abs_threshold_(abs_threshold), rel_threshold_(rel_threshold) {}
  OcclusionMask detect(const GaitSequence& seq) const override;

 private:
  std::size_t abs_threshold_;
  double rel_threshold_;
};

// Small trainable frame classifier: two conv+pool blocks and a sigmoid head.
// Opt-in alternative to the heuristic, mirroring detector-network usage at
// desk scale.
class CnnOcclusionDetector final : public OcclusionDetector {
 public:
  struct TrainConfig {
    std::size_t epochs = 12;
    std::size_t batch_size = 16;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;
  };

  // labeled: (frame, is_occluded). Requires both classes present.
  static CnnOcclusionDetector train(
      const std::vector<std::pair<SilhouetteFrame, bool>>& labeled, const TrainConfig& config);

  OcclusionMask detect(const GaitSequence& seq) const override;
  double score(const SilhouetteFrame& frame) const;  // P(occluded)

  void save(const std::filesystem::path& path) const;
  static CnnOcclusionDetector load(const std::filesystem::path& path);

  CnnOcclusionDetector(CnnOcclusionDetector&&) noexcept;
  CnnOcclusionDetector& operator=(CnnOcclusionDetector&&) noexcept;
  ~CnnOcclusionDetector();

 private:
  CnnOcclusionDetector();
  std::unique_ptr<nn::Sequential> net_;
};

OcclusionMask detect_occluded_frames(const GaitSequence& seq, const OcclusionDetector& detector);

}  // namespace gaitrec

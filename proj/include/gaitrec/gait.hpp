#pragma once

#include <span>
#include <vector>

#include "gaitrec/silhouette.hpp"

namespace gaitrec {

// Per-pixel mean of a cycle's binary frames; values in [0,1].
struct GaitEnergyImage {
  std::vector<double> values;  // 150x200 row-major
  std::size_t cycle_frame_count = 0;

  double at(std::size_t r, std::size_t c) const { return values[r * kFrameWidth + c]; }
};

GaitEnergyImage compute_gei(std::span<const SilhouetteFrame> frames);
GaitEnergyImage compute_gei(const std::vector<SilhouetteFrame>& frames);

enum class OccludedFramePolicy { skip, include_blank };

// GEI over [start, end), honouring the occluded-frame policy (default: skip).
GaitEnergyImage compute_cycle_gei(const GaitSequence& seq, CycleBounds cycle,
                                  OccludedFramePolicy policy = OccludedFramePolicy::skip);

struct CycleSegmentation {
  std::vector<CycleBounds> cycles;
  bool heuristic = false;  // true when detected (or fallen back), not manifest-given
};

// Manifest-provided boundaries are authoritative; otherwise the cycle length
// is estimated from the autocorrelation of the lower-half foreground-width
// signal. A sequence without detectable periodicity falls back to one cycle
// spanning the whole sequence, flagged heuristic.
CycleSegmentation segment_cycles(const GaitSequence& seq);

// Fixed 4x4 block-mean downsample of a GEI to 38x50, flattened to 1900 dims:
// the forest's feature representation.
inline constexpr std::size_t kGeiFeatureRows = 38;
inline constexpr std::size_t kGeiFeatureCols = 50;
inline constexpr std::size_t kGeiFeatureDim = kGeiFeatureRows * kGeiFeatureCols;

std::vector<double> gei_feature_vector(const GaitEnergyImage& gei);

}  // namespace gaitrec

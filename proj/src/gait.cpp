#include "gaitrec/gait.hpp"

#include <algorithm>
#include <cmath>

namespace gaitrec {

GaitEnergyImage compute_gei(std::span<const SilhouetteFrame> frames) {
  require(!frames.empty(), "compute_gei: empty frame list");
  GaitEnergyImage gei;
  gei.values.assign(kFramePixels, 0.0);
  gei.cycle_frame_count = frames.size();
  for (const auto& f : frames)
    for (std::size_t i = 0; i < kFramePixels; ++i) gei.values[i] += static_cast<double>(f.pixels[i]);
  const double inv = 1.0 / static_cast<double>(frames.size());
  for (double& v : gei.values) v *= inv;
  return gei;
}

GaitEnergyImage compute_gei(const std::vector<SilhouetteFrame>& frames) {
  return compute_gei(std::span<const SilhouetteFrame>(frames.data(), frames.size()));
}

GaitEnergyImage compute_cycle_gei(const GaitSequence& seq, CycleBounds cycle,
                                  OccludedFramePolicy policy) {
  require(cycle.start < cycle.end && cycle.end <= seq.size(), "compute_cycle_gei: bad bounds");
  std::vector<SilhouetteFrame> used;
  for (std::size_t i = cycle.start; i < cycle.end; ++i) {
    if (policy == OccludedFramePolicy::skip && seq.frames[i].status == FrameStatus::occluded)
      continue;
    used.push_back(seq.frames[i]);
  }
  require(!used.empty(), "compute_cycle_gei: cycle has no usable frames");
  return compute_gei(used);
}

namespace {

// Lower-half foreground extent signal. Plain width (rightmost - leftmost) is
// ambiguous across half-cycles because the two legs swap roles; weighting the
// front extent keeps the full two-step period observable.
double lower_half_extent(const SilhouetteFrame& f) {
  std::size_t lo = kFrameWidth, hi = 0;
  for (std::size_t r = kFrameHeight / 2; r < kFrameHeight; ++r)
    for (std::size_t c = 0; c < kFrameWidth; ++c)
      if (f.at(r, c)) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
  if (lo > hi) return 0.0;
  const double width = static_cast<double>(hi - lo + 1);
  const double front = static_cast<double>(hi);
  return width + 2.0 * front;
}

}  // namespace

CycleSegmentation segment_cycles(const GaitSequence& seq) {
  CycleSegmentation out;
  if (!seq.cycle_boundaries.empty()) {
    out.cycles = seq.cycle_boundaries;
    return out;
  }

  out.heuristic = true;
  const std::size_t n = seq.size();
  require(n > 0, "segment_cycles: empty sequence");
  const CycleBounds whole{0, n};

  std::vector<double> signal(n);
  for (std::size_t i = 0; i < n; ++i) signal[i] = lower_half_extent(seq.frames[i]);
  double mean = 0.0;
  for (double v : signal) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double& v : signal) {
    v -= mean;
    var += v * v;
  }
  var /= static_cast<double>(n);
  if (var < 1e-9 || n < 8) {  // constant pose or too short: no periodicity
    out.cycles = {whole};
    return out;
  }

  // Normalized autocorrelation over plausible lags; the fundamental period is
  // the smallest lag scoring within 5% of the best (multiples tie otherwise).
  std::vector<double> score(n / 2 + 1, 0.0);
  double best_score = 0.0;
  for (std::size_t lag = 4; lag <= n / 2; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += signal[i] * signal[i + lag];
    score[lag] = acc / (static_cast<double>(n - lag) * var);
    best_score = std::max(best_score, score[lag]);
  }
  if (best_score < 0.25) {
    out.cycles = {whole};
    return out;
  }
  std::size_t best_lag = 0;
  for (std::size_t lag = 4; lag <= n / 2; ++lag)
    if (score[lag] >= 0.95 * best_score) {
      best_lag = lag;
      break;
    }

  // Anchor cycles at the strongest peak within the first period.
  std::size_t anchor = 0;
  double peak = -1e300;
  for (std::size_t i = 0; i < std::min(best_lag, n); ++i)
    if (signal[i] > peak) {
      peak = signal[i];
      anchor = i;
    }
  for (std::size_t start = anchor; start + best_lag <= n; start += best_lag)
    out.cycles.push_back({start, start + best_lag});
  if (out.cycles.empty()) out.cycles = {whole};
  return out;
}

std::vector<double> gei_feature_vector(const GaitEnergyImage& gei) {
  require(gei.values.size() == kFramePixels, "gei_feature_vector: malformed GEI");
  std::vector<double> feat(kGeiFeatureDim, 0.0);
  for (std::size_t br = 0; br < kGeiFeatureRows; ++br) {
    const std::size_t r0 = br * 4;
    const std::size_t r1 = std::min(r0 + 4, kFrameHeight);
    for (std::size_t bc = 0; bc < kGeiFeatureCols; ++bc) {
      const std::size_t c0 = bc * 4;
      const std::size_t c1 = std::min(c0 + 4, kFrameWidth);
      double sum = 0.0;
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) sum += gei.at(r, c);
      feat[br * kGeiFeatureCols + bc] =
          sum / static_cast<double>((r1 - r0) * (c1 - c0));
    }
  }
  return feat;
}

}  // namespace gaitrec

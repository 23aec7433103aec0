#pragma once

#include <vector>

#include "gaitrec/silhouette.hpp"

namespace gaitrec {

// Procedural side-view walker corpus. Each subject gets its own body
// geometry (torso width, leg length, stride amplitude, limb thickness, ...)
// drawn from a per-subject seed stream, and one sequence of
// cycles_per_subject * period frames with recorded cycle boundaries.
// Identical config (including seed) reproduces the corpus bit-exactly.
struct SynthConfig {
  std::size_t subjects = 10;
  std::size_t cycles_per_subject = 4;
  std::size_t period = 12;  // frames per gait cycle
  std::uint64_t seed = 1;
  double jitter = 0.015;  // per-cycle phase/amplitude perturbation
};

std::vector<GaitSequence> synth_corpus(const SynthConfig& config);

}  // namespace gaitrec

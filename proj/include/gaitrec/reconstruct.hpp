#pragma once

#include <vector>

#include "gaitrec/fusion.hpp"
#include "gaitrec/occlusion.hpp"

namespace gaitrec {

enum class ReconstructionSource { both, forward_only, backward_only, unreconstructable };

enum class ReconstructionMode { fused, forward_only, backward_only };

// Which occluded frames can be reconstructed, and from which direction(s).
// Availability propagates: a frame reconstructed earlier in a sweep extends
// the context for later frames in the same sweep, and the two sweeps never
// see each other's outputs.
struct ReconstructionPlan {
  struct Entry {
    std::size_t index;
    ReconstructionSource sources;
  };
  std::vector<Entry> entries;  // one per occluded index, ascending

  ReconstructionSource sources_for(std::size_t index) const;
};

ReconstructionPlan plan_reconstruction(std::size_t frame_count,
                                       const std::vector<std::size_t>& occluded,
                                       ReconstructionMode mode = ReconstructionMode::fused);

struct ReconstructOptions {
  ReconstructionMode mode = ReconstructionMode::fused;
  // Context propagation: re-encode the binarized decoded frame (default) or
  // reuse the predicted embedding directly.
  bool propagate_embeddings = false;
};

struct ReconstructionResult {
  GaitSequence sequence;
  ReconstructionPlan plan;
  std::vector<std::size_t> unreconstructable;  // still status = occluded
};

// Forward sweep (ascending) through M1, independent backward sweep
// (descending) through M2, then per-frame fusion where both predictions
// exist. Observed frames pass through bit-identically.
ReconstructionResult reconstruct_sequence(const GaitSequence& seq, const OcclusionMask& mask,
                                          const Autoencoder& ae, const LstmPredictor& m1,
                                          const LstmPredictor& m2, const FusionNetwork& fusion,
                                          const ReconstructOptions& options = {});

// Convenience: derive the mask from the sequence's occluded statuses.
ReconstructionResult reconstruct_sequence(const GaitSequence& seq, const Autoencoder& ae,
                                          const LstmPredictor& m1, const LstmPredictor& m2,
                                          const FusionNetwork& fusion,
                                          const ReconstructOptions& options = {});

}  // namespace gaitrec

#include "gaitrec/reconstruct.hpp"

#include <algorithm>

namespace gaitrec {

ReconstructionSource ReconstructionPlan::sources_for(std::size_t index) const {
  for (const auto& e : entries)
    if (e.index == index) return e.sources;
  throw Error("reconstruction plan has no entry for index " + std::to_string(index));
}

ReconstructionPlan plan_reconstruction(std::size_t frame_count,
                                       const std::vector<std::size_t>& occluded,
                                       ReconstructionMode mode) {
  std::vector<bool> is_occluded(frame_count, false);
  for (std::size_t i : occluded) {
    require(i < frame_count, "plan_reconstruction: occluded index out of range");
    is_occluded[i] = true;
  }

  // Forward availability: observed, or occluded with five available
  // predecessors at its turn in the ascending sweep.
  std::vector<bool> avail_f(frame_count, false), has_f(frame_count, false);
  for (std::size_t i = 0; i < frame_count; ++i) {
    if (!is_occluded[i]) {
      avail_f[i] = true;
      continue;
    }
    if (i < kContextLength) continue;
    bool ok = true;
    for (std::size_t t = i - kContextLength; t < i; ++t)
      if (!avail_f[t]) {
        ok = false;
        break;
      }
    if (ok) avail_f[i] = has_f[i] = true;
  }

  std::vector<bool> avail_b(frame_count, false), has_b(frame_count, false);
  for (std::size_t i = frame_count; i-- > 0;) {
    if (!is_occluded[i]) {
      avail_b[i] = true;
      continue;
    }
    if (i + kContextLength >= frame_count) continue;
    bool ok = true;
    for (std::size_t t = i + 1; t <= i + kContextLength; ++t)
      if (!avail_b[t]) {
        ok = false;
        break;
      }
    if (ok) avail_b[i] = has_b[i] = true;
  }

  ReconstructionPlan plan;
  for (std::size_t i = 0; i < frame_count; ++i) {
    if (!is_occluded[i]) continue;
    const bool f = has_f[i] && mode != ReconstructionMode::backward_only;
    const bool b = has_b[i] && mode != ReconstructionMode::forward_only;
    ReconstructionSource src = ReconstructionSource::unreconstructable;
    if (f && b)
      src = ReconstructionSource::both;
    else if (f)
      src = ReconstructionSource::forward_only;
    else if (b)
      src = ReconstructionSource::backward_only;
    plan.entries.push_back({i, src});
  }
  return plan;
}

namespace {

// Per-sweep context state: embeddings for frames that are available to this
// sweep (observed, or reconstructed by this sweep).
struct SweepContext {
  std::vector<Embedding> embeddings;
  std::vector<bool> valid;

  explicit SweepContext(std::size_t n) : embeddings(n), valid(n, false) {}
};

}  // namespace

ReconstructionResult reconstruct_sequence(const GaitSequence& seq, const OcclusionMask& mask,
                                          const Autoencoder& ae, const LstmPredictor& m1,
                                          const LstmPredictor& m2, const FusionNetwork& fusion,
                                          const ReconstructOptions& options) {
  require(m1.direction() == Direction::forward, "reconstruct: m1 must be the forward predictor");
  require(m2.direction() == Direction::backward, "reconstruct: m2 must be the backward predictor");

  const std::size_t n = seq.size();
  {
    // The mask is authoritative and must agree with the frame statuses.
    auto statuses = seq.occluded_indices();
    require(statuses == mask.indices,
            "reconstruct: mask does not match the sequence's occluded statuses");
  }

  ReconstructionResult result;
  result.sequence = seq;
  result.plan = plan_reconstruction(n, mask.indices, options.mode);
  if (mask.indices.empty()) return result;

  // Shared embeddings of observed frames, computed lazily once per frame.
  std::vector<Embedding> observed_emb(n);
  std::vector<bool> observed_emb_valid(n, false);
  auto observed_embedding = [&](std::size_t i) -> const Embedding& {
    if (!observed_emb_valid[i]) {
      observed_emb[i] = ae.encode(seq.frames[i]);
      observed_emb_valid[i] = true;
    }
    return observed_emb[i];
  };

  const bool want_forward = options.mode != ReconstructionMode::backward_only;
  const bool want_backward = options.mode != ReconstructionMode::forward_only;

  std::vector<SilhouetteFrame> fhat1(n), fhat2(n);
  std::vector<bool> have1(n, false), have2(n, false);

  if (want_forward) {
    SweepContext ctx(n);
    for (std::size_t i = 0; i < n; ++i)
      if (seq.frames[i].status != FrameStatus::occluded) ctx.valid[i] = true;
    for (const auto& entry : result.plan.entries) {
      if (entry.sources != ReconstructionSource::both &&
          entry.sources != ReconstructionSource::forward_only)
        continue;
      const std::size_t i = entry.index;
      std::vector<Embedding> window;
      window.reserve(kContextLength);
      for (std::size_t t = i - kContextLength; t < i; ++t) {
        require(ctx.valid[t], "reconstruct: forward context not available at frame " +
                                  std::to_string(t));
        window.push_back(seq.frames[t].status != FrameStatus::occluded ? observed_embedding(t)
                                                                       : ctx.embeddings[t]);
      }
      Embedding predicted = m1.predict(ContextWindow(Direction::forward, std::move(window)));
      SoftFrame soft = ae.decode(predicted);
      fhat1[i] = soft.binarize();
      have1[i] = true;
      ctx.embeddings[i] =
          options.propagate_embeddings ? std::move(predicted) : ae.encode(fhat1[i]);
      ctx.valid[i] = true;
    }
  }

  if (want_backward) {
    SweepContext ctx(n);
    for (std::size_t i = 0; i < n; ++i)
      if (seq.frames[i].status != FrameStatus::occluded) ctx.valid[i] = true;
    for (auto it = result.plan.entries.rbegin(); it != result.plan.entries.rend(); ++it) {
      if (it->sources != ReconstructionSource::both &&
          it->sources != ReconstructionSource::backward_only)
        continue;
      const std::size_t i = it->index;
      std::vector<Embedding> window;
      window.reserve(kContextLength);
      for (std::size_t t = i + 1; t <= i + kContextLength; ++t) {
        require(ctx.valid[t], "reconstruct: backward context not available at frame " +
                                  std::to_string(t));
        window.push_back(seq.frames[t].status != FrameStatus::occluded ? observed_embedding(t)
                                                                       : ctx.embeddings[t]);
      }
      Embedding predicted = m2.predict(ContextWindow(Direction::backward, std::move(window)));
      SoftFrame soft = ae.decode(predicted);
      fhat2[i] = soft.binarize();
      have2[i] = true;
      ctx.embeddings[i] =
          options.propagate_embeddings ? std::move(predicted) : ae.encode(fhat2[i]);
      ctx.valid[i] = true;
    }
  }

  for (const auto& entry : result.plan.entries) {
    const std::size_t i = entry.index;
    switch (entry.sources) {
      case ReconstructionSource::both:
        require(have1[i] && have2[i], "reconstruct: planned predictions missing");
        result.sequence.frames[i] = fusion.fuse(fhat1[i], fhat2[i]);
        break;
      case ReconstructionSource::forward_only:
        require(have1[i], "reconstruct: planned forward prediction missing");
        result.sequence.frames[i] = fhat1[i];
        break;
      case ReconstructionSource::backward_only:
        require(have2[i], "reconstruct: planned backward prediction missing");
        result.sequence.frames[i] = fhat2[i];
        break;
      case ReconstructionSource::unreconstructable:
        result.unreconstructable.push_back(i);
        break;
    }
  }
  return result;
}

ReconstructionResult reconstruct_sequence(const GaitSequence& seq, const Autoencoder& ae,
                                          const LstmPredictor& m1, const LstmPredictor& m2,
                                          const FusionNetwork& fusion,
                                          const ReconstructOptions& options) {
  OcclusionMask mask;
  mask.indices = seq.occluded_indices();
  return reconstruct_sequence(seq, mask, ae, m1, m2, fusion, options);
}

}  // namespace gaitrec

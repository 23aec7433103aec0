#include <doctest.h>

#include "gaitrec/reconstruct.hpp"
#include "gaitrec/synth.hpp"

using namespace gaitrec;

namespace {

struct TinyModels {
  Autoencoder ae{71};
  LstmPredictor m1{Direction::forward, {.hidden = 8, .reversed_input = true}, 72};
  LstmPredictor m2{Direction::backward, {.hidden = 8, .reversed_input = true}, 73};
  FusionNetwork fusion{{.blocks = 1, .width = 4}, 74};
};

}  // namespace

TEST_CASE("plan: interior frame with clean context on both sides") {
  const auto plan = plan_reconstruction(20, {10});
  REQUIRE(plan.entries.size() == 1);
  CHECK(plan.entries[0].index == 10);
  CHECK(plan.entries[0].sources == ReconstructionSource::both);
}

TEST_CASE("plan: frame near the start is backward-only") {
  const auto plan = plan_reconstruction(12, {1});
  CHECK(plan.sources_for(1) == ReconstructionSource::backward_only);
}

TEST_CASE("plan: frame near the end is forward-only") {
  const auto plan = plan_reconstruction(12, {10});
  CHECK(plan.sources_for(10) == ReconstructionSource::forward_only);
}

TEST_CASE("plan: availability propagates through already-planned frames") {
  // 6 consecutive occlusions: the forward sweep chains through its own
  // outputs, the backward sweep likewise from the other side.
  const auto plan = plan_reconstruction(22, {5, 6, 7, 8, 9, 10});
  for (std::size_t i = 5; i <= 10; ++i) CHECK(plan.sources_for(i) == ReconstructionSource::both);
}

TEST_CASE("plan: mutually blocking occlusions are unreconstructable") {
  const auto plan = plan_reconstruction(11, {0, 5, 10});
  CHECK(plan.sources_for(0) == ReconstructionSource::unreconstructable);
  CHECK(plan.sources_for(5) == ReconstructionSource::unreconstructable);
  CHECK(plan.sources_for(10) == ReconstructionSource::unreconstructable);
}

TEST_CASE("plan: single-direction modes ignore the other sweep") {
  const auto fwd = plan_reconstruction(20, {10}, ReconstructionMode::forward_only);
  CHECK(fwd.sources_for(10) == ReconstructionSource::forward_only);
  const auto bwd = plan_reconstruction(20, {10}, ReconstructionMode::backward_only);
  CHECK(bwd.sources_for(10) == ReconstructionSource::backward_only);
  const auto blocked = plan_reconstruction(12, {1}, ReconstructionMode::forward_only);
  CHECK(blocked.sources_for(1) == ReconstructionSource::unreconstructable);
}

TEST_CASE("reconstruct: clean sequences pass through bit-identically") {
  const TinyModels m;
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 2, .period = 10, .seed = 81};
  const auto seq = synth_corpus(cfg)[0];
  const auto result = reconstruct_sequence(seq, m.ae, m.m1, m.m2, m.fusion);
  REQUIRE(result.sequence.size() == seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(result.sequence.frames[i].pixels == seq.frames[i].pixels);
    CHECK(result.sequence.frames[i].status == seq.frames[i].status);
  }
  CHECK(result.unreconstructable.empty());
}

TEST_CASE("reconstruct: observed frames are never modified; statuses update") {
  const TinyModels m;
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 2, .period = 10, .seed = 82};
  const auto clean = synth_corpus(cfg)[0];

  OcclusionSpec spec;
  spec.band_low = 0.1;
  spec.band_high = 0.3;
  spec.rng_seed = 7;
  const auto occluded = synthesize_occlusion(clean, spec);

  const auto result =
      reconstruct_sequence(occluded.sequence, occluded.mask, m.ae, m.m1, m.m2, m.fusion);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (!occluded.mask.contains(i)) {
      CHECK(result.sequence.frames[i].pixels == clean.frames[i].pixels);
      CHECK(result.sequence.frames[i].status == FrameStatus::observed);
    } else {
      const auto src = result.plan.sources_for(i);
      if (src == ReconstructionSource::unreconstructable) {
        CHECK(result.sequence.frames[i].status == FrameStatus::occluded);
      } else {
        CHECK(result.sequence.frames[i].status == FrameStatus::reconstructed);
      }
    }
  }
}

TEST_CASE("reconstruct: mask must match the sequence statuses") {
  const TinyModels m;
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 2, .period = 10, .seed = 83};
  const auto seq = synth_corpus(cfg)[0];
  OcclusionMask bogus;
  bogus.indices = {4};
  CHECK_THROWS_WITH_AS(reconstruct_sequence(seq, bogus, m.ae, m.m1, m.m2, m.fusion),
                       doctest::Contains("mask"), Error);
}

TEST_CASE("fusion: deterministic fuse and shape checks") {
  const TinyModels m;
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 1, .period = 10, .seed = 84};
  const auto seq = synth_corpus(cfg)[0];
  const auto a = m.fusion.fuse(seq.frames[0], seq.frames[1]);
  const auto b = m.fusion.fuse(seq.frames[0], seq.frames[1]);
  CHECK(a.pixels == b.pixels);
  CHECK(a.status == FrameStatus::reconstructed);
  CHECK_THROWS_AS(m.fusion.forward_soft(nn::Tensor({1, 10, 10, 2})), Error);
}

TEST_CASE("fusion: zero-epoch training leaves parameters unchanged") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 1, .period = 10, .seed = 85};
  const auto seq = synth_corpus(cfg)[0];
  FusionNetwork net({.blocks = 1, .width = 4}, 86);
  const auto before = net.fuse(seq.frames[0], seq.frames[1]);

  std::vector<FusionTriple> triples{{seq.frames[0], seq.frames[1], seq.frames[2]}};
  FusionNetwork::TrainConfig tc;
  tc.epochs = 0;
  const TrainReport report = net.train(triples, tc);
  CHECK(report.epochs_run == 0);
  CHECK(net.fuse(seq.frames[0], seq.frames[1]).pixels == before.pixels);
}

TEST_CASE("fusion: training reduces BCE on a toy set") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 2, .period = 10, .seed = 87};
  const auto seq = synth_corpus(cfg)[0];
  std::vector<FusionTriple> triples;
  for (std::size_t i = 0; i + 2 < seq.size(); i += 2)
    triples.push_back({seq.frames[i], seq.frames[i + 1], seq.frames[i + 1]});

  FusionNetwork net({.blocks = 1, .width = 4}, 88);
  FusionNetwork::TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 4;
  tc.seed = 89;
  const TrainReport report = net.train(triples, tc);
  CHECK(report.epoch_loss.back() < report.epoch_loss.front());
  CHECK_THROWS_AS(net.train({}, tc), Error);
}

TEST_CASE("fusion checkpoints round-trip") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 1, .period = 10, .seed = 90};
  const auto seq = synth_corpus(cfg)[0];
  FusionNetwork net({.blocks = 2, .width = 4}, 91);
  const auto path = std::filesystem::temp_directory_path() / "gaitrec_fusion_test.ckpt";
  net.save(path);
  const FusionNetwork loaded = FusionNetwork::load(path);
  CHECK(loaded.config().blocks == 2);
  CHECK(loaded.fuse(seq.frames[0], seq.frames[1]).pixels ==
        net.fuse(seq.frames[0], seq.frames[1]).pixels);
  std::filesystem::remove(path);
}

TEST_CASE("make_fusion_triples uses fully observed spans only") {
  const TinyModels m;
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 2, .period = 10, .seed = 92};
  auto corpus = synth_corpus(cfg);
  corpus.resize(1);
  const auto triples = make_fusion_triples(corpus, m.ae, m.m1, m.m2);
  CHECK(triples.size() == 10);  // N=20 -> targets 5..14

  corpus[0].frames[7].status = FrameStatus::occluded;
  const auto fewer = make_fusion_triples(corpus, m.ae, m.m1, m.m2);
  CHECK(fewer.size() < triples.size());
}

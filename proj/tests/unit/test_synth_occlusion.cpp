#include <doctest.h>

#include "gaitrec/occlusion.hpp"
#include "gaitrec/synth.hpp"

#include "support/oracles.hpp"

using namespace gaitrec;

TEST_CASE("synth: generator contract (counts, boundaries, determinism)") {
  const SynthConfig cfg{.subjects = 10, .cycles_per_subject = 4, .period = 12, .seed = 3};
  const auto corpus = synth_corpus(cfg);
  REQUIRE(corpus.size() == 10);
  for (const auto& seq : corpus) {
    CHECK(seq.size() == 48);
    REQUIRE(seq.cycle_boundaries.size() == 4);
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(seq.cycle_boundaries[c].start == c * 12);
      CHECK(seq.cycle_boundaries[c].end == (c + 1) * 12);
    }
    for (const auto& f : seq.frames) CHECK(f.foreground_count() > 500);
  }

  const auto again = synth_corpus(cfg);
  for (std::size_t s = 0; s < corpus.size(); ++s)
    for (std::size_t i = 0; i < corpus[s].size(); ++i)
      CHECK(corpus[s].frames[i].pixels == again[s].frames[i].pixels);
}

TEST_CASE("synth: subjects are separable by clean-cycle GEI") {
  const SynthConfig cfg{.subjects = 6, .cycles_per_subject = 1, .period = 12, .seed = 4};
  const auto corpus = synth_corpus(cfg);
  std::vector<GaitEnergyImage> geis;
  for (const auto& seq : corpus) geis.push_back(compute_gei(seq.frames));
  for (std::size_t a = 0; a < geis.size(); ++a)
    for (std::size_t b = a + 1; b < geis.size(); ++b)
      CHECK(testing::dice_oracle(geis[a], geis[b]) < 0.98);
}

TEST_CASE("synth: parameter validation") {
  CHECK_THROWS_AS(synth_corpus({.subjects = 1}), Error);
  CHECK_THROWS_AS(synth_corpus({.subjects = 2, .cycles_per_subject = 1, .period = 4}), Error);
}

TEST_CASE("occlude: draws k = round(p*N) frames inside the band") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 2, .period = 10, .seed = 6};
  const auto corpus = synth_corpus(cfg);  // N = 20
  OcclusionSpec spec;
  spec.band_low = 0.40;
  spec.band_high = 0.50;

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    spec.rng_seed = seed;
    const auto out = synthesize_occlusion(corpus[0], spec);
    // round(p*20) for p in [0.4, 0.5] can only be 8, 9 or 10
    CHECK(out.mask.indices.size() >= 8);
    CHECK(out.mask.indices.size() <= 10);
    std::size_t blank = 0;
    for (std::size_t i = 0; i < out.sequence.size(); ++i) {
      const auto& f = out.sequence.frames[i];
      if (f.status == FrameStatus::occluded) {
        CHECK(f.foreground_count() == 0);
        CHECK(out.mask.contains(i));
        ++blank;
      } else {
        CHECK(f.pixels == corpus[0].frames[i].pixels);  // untouched frames bit-identical
      }
    }
    CHECK(blank == out.mask.indices.size());
  }
}

TEST_CASE("occlude: degenerate band returns an unchanged copy and empty mask") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 2, .period = 10, .seed = 7};
  const auto corpus = synth_corpus(cfg);
  OcclusionSpec spec;  // band (0, 0)
  const auto out = synthesize_occlusion(corpus[0], spec);
  CHECK(out.band_degenerate);
  CHECK(out.mask.indices.empty());
  for (std::size_t i = 0; i < corpus[0].size(); ++i)
    CHECK(out.sequence.frames[i].pixels == corpus[0].frames[i].pixels);
}

TEST_CASE("occlude: deterministic per seed; too-short sequences rejected") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 2, .period = 10, .seed = 8};
  const auto corpus = synth_corpus(cfg);
  OcclusionSpec spec;
  spec.band_low = 0.2;
  spec.band_high = 0.3;
  spec.rng_seed = 42;
  CHECK(synthesize_occlusion(corpus[0], spec).mask.indices ==
        synthesize_occlusion(corpus[0], spec).mask.indices);

  GaitSequence stub;
  stub.frames.assign(10, SilhouetteFrame::blank());
  CHECK_THROWS_WITH_AS(synthesize_occlusion(stub, spec), doctest::Contains("too short"), Error);

  OcclusionSpec bad;
  bad.band_low = 0.3;
  bad.band_high = 0.6;
  CHECK_THROWS_AS(synthesize_occlusion(corpus[0], bad), Error);
}

TEST_CASE("occlude: contiguous placement yields one run") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 3, .period = 10, .seed = 9};
  const auto corpus = synth_corpus(cfg);
  OcclusionSpec spec;
  spec.band_low = 0.2;
  spec.band_high = 0.3;
  spec.placement = OcclusionSpec::Placement::contiguous;
  spec.rng_seed = 5;
  const auto out = synthesize_occlusion(corpus[0], spec);
  REQUIRE(!out.mask.indices.empty());
  for (std::size_t i = 1; i < out.mask.indices.size(); ++i)
    CHECK(out.mask.indices[i] == out.mask.indices[i - 1] + 1);
}

TEST_CASE("detector: all-zero frames are flagged exactly") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 2, .period = 10, .seed = 10};
  auto seq = synth_corpus(cfg)[0];
  seq.frames[3] = SilhouetteFrame::blank(FrameStatus::observed);
  seq.frames[7] = SilhouetteFrame::blank(FrameStatus::observed);
  const HeuristicOcclusionDetector det;
  CHECK(det.detect(seq).indices == std::vector<std::size_t>({3, 7}));
}

TEST_CASE("detector: clean synthetic corpus has zero false positives") {
  const SynthConfig cfg{.subjects = 6, .cycles_per_subject = 3, .period = 12, .seed = 11};
  const HeuristicOcclusionDetector det;
  for (const auto& seq : synth_corpus(cfg)) CHECK(det.detect(seq).indices.empty());
}

TEST_CASE("detector: fully blank sequence flags every index") {
  GaitSequence seq;
  seq.frames.assign(12, SilhouetteFrame::blank());
  const HeuristicOcclusionDetector det;
  CHECK(det.detect(seq).indices.size() == 12);
}

TEST_CASE("detector recovers synthesized masks exactly (blacken protocol)") {
  const SynthConfig cfg{.subjects = 4, .cycles_per_subject = 3, .period = 12, .seed = 12};
  const auto corpus = synth_corpus(cfg);
  const HeuristicOcclusionDetector det;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (const auto& seq : corpus) {
      OcclusionSpec spec;
      spec.band_low = 0.1;
      spec.band_high = 0.4;
      spec.rng_seed = mix_seed(seed, 99);
      const auto out = synthesize_occlusion(seq, spec);
      CHECK(det.detect(out.sequence).indices == out.mask.indices);
    }
  }
}

TEST_CASE("cnn detector learns blackened-vs-clean and checkpoints") {
  const SynthConfig cfg{.subjects = 4, .cycles_per_subject = 2, .period = 12, .seed = 13};
  const auto corpus = synth_corpus(cfg);
  std::vector<std::pair<SilhouetteFrame, bool>> labeled;
  std::vector<std::pair<SilhouetteFrame, bool>> heldout;
  std::size_t count = 0;
  for (const auto& seq : corpus)
    for (const auto& f : seq.frames) {
      auto& sink = (count % 4 == 3) ? heldout : labeled;
      sink.emplace_back(f, false);
      sink.emplace_back(SilhouetteFrame::blank(FrameStatus::occluded), true);
      ++count;
    }

  CnnOcclusionDetector::TrainConfig tc;
  tc.epochs = 4;
  tc.seed = 17;
  const auto det = CnnOcclusionDetector::train(labeled, tc);

  const auto accuracy = [&](const std::vector<std::pair<SilhouetteFrame, bool>>& set) {
    std::size_t hit = 0;
    for (const auto& [frame, label] : set) hit += ((det.score(frame) >= 0.5) == label) ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(set.size());
  };
  CHECK(accuracy(labeled) >= 0.99);   // memorization check
  CHECK(accuracy(heldout) >= 0.99);   // held-out blackened-vs-clean split

  const auto path = std::filesystem::temp_directory_path() / "gaitrec_cnn_det.ckpt";
  det.save(path);
  const auto loaded = CnnOcclusionDetector::load(path);
  for (const auto& [frame, label] : heldout)
    CHECK(loaded.score(frame) == doctest::Approx(det.score(frame)).epsilon(1e-12));
  std::filesystem::remove(path);
}

TEST_CASE("cnn detector training rejects degenerate label sets") {
  CHECK_THROWS_AS(CnnOcclusionDetector::train({}, {}), Error);
  std::vector<std::pair<SilhouetteFrame, bool>> one_class(
      4, {SilhouetteFrame::blank(), false});
  CHECK_THROWS_AS(CnnOcclusionDetector::train(one_class, {}), Error);
}

#include <doctest.h>

#include "gaitrec/forest.hpp"
#include "gaitrec/synth.hpp"

#include "support/oracles.hpp"

using namespace gaitrec;

TEST_CASE("gei: constant sequence reproduces the frame") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 1, .period = 10, .seed = 30};
  const auto frame = synth_corpus(cfg)[0].frames[0];
  const auto gei = compute_gei(std::vector<SilhouetteFrame>(5, frame));
  for (std::size_t i = 0; i < kFramePixels; ++i)
    CHECK(gei.values[i] == static_cast<double>(frame.pixels[i]));
}

TEST_CASE("gei: two-frame mean of all-ones and all-zeros is 0.5 everywhere") {
  SilhouetteFrame ones = SilhouetteFrame::blank();
  std::fill(ones.pixels.begin(), ones.pixels.end(), 1);
  const auto gei = compute_gei(std::vector<SilhouetteFrame>{ones, SilhouetteFrame::blank()});
  for (double v : gei.values) CHECK(v == 0.5);
}

TEST_CASE("gei: random frames match the pixel-sum oracle to 1e-12") {
  Rng rng(31);
  std::bernoulli_distribution bit(0.3);
  std::vector<SilhouetteFrame> frames(4, SilhouetteFrame::blank());
  for (auto& f : frames)
    for (auto& p : f.pixels) p = bit(rng) ? 1 : 0;
  const auto gei = compute_gei(frames);
  const auto want = testing::gei_oracle(frames);
  for (std::size_t i = 0; i < kFramePixels; ++i)
    CHECK(std::abs(gei.values[i] - want.values[i]) <= 1e-12);
  CHECK_THROWS_AS(compute_gei(std::vector<SilhouetteFrame>{}), Error);
}

TEST_CASE("gei linearity: concatenation of equal-length lists averages the GEIs") {
  Rng rng(32);
  std::bernoulli_distribution bit(0.4);
  std::vector<SilhouetteFrame> a(3, SilhouetteFrame::blank()), b(3, SilhouetteFrame::blank());
  for (auto* list : {&a, &b})
    for (auto& f : *list)
      for (auto& p : f.pixels) p = bit(rng) ? 1 : 0;
  std::vector<SilhouetteFrame> both = a;
  both.insert(both.end(), b.begin(), b.end());
  const auto gei_both = compute_gei(both);
  const auto gei_a = compute_gei(a);
  const auto gei_b = compute_gei(b);
  for (std::size_t i = 0; i < kFramePixels; ++i)
    CHECK(gei_both.values[i] ==
          doctest::Approx(0.5 * (gei_a.values[i] + gei_b.values[i])).epsilon(1e-12));
}

TEST_CASE("cycle gei honours the occluded-frame policy") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 1, .period = 10, .seed = 33};
  auto seq = synth_corpus(cfg)[0];
  seq.frames[4] = SilhouetteFrame::blank(FrameStatus::occluded);
  const auto skipped = compute_cycle_gei(seq, {0, 10}, OccludedFramePolicy::skip);
  CHECK(skipped.cycle_frame_count == 9);
  const auto blanks = compute_cycle_gei(seq, {0, 10}, OccludedFramePolicy::include_blank);
  CHECK(blanks.cycle_frame_count == 10);
  double mass_skipped = 0.0, mass_blank = 0.0;
  for (std::size_t i = 0; i < kFramePixels; ++i) {
    mass_skipped += skipped.values[i];
    mass_blank += blanks.values[i];
  }
  CHECK(mass_blank < mass_skipped);
}

TEST_CASE("segment_cycles: manifest boundaries pass through verbatim") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 3, .period = 12, .seed = 34};
  const auto seq = synth_corpus(cfg)[0];
  const auto segmentation = segment_cycles(seq);
  CHECK(!segmentation.heuristic);
  REQUIRE(segmentation.cycles.size() == 3);
  CHECK(segmentation.cycles[1].start == 12);
}

TEST_CASE("segment_cycles: detects the generator's period from pixels alone") {
  const SynthConfig cfg{
      .subjects = 4, .cycles_per_subject = 4, .period = 12, .seed = 35, .jitter = 0.0};
  for (auto seq : synth_corpus(cfg)) {
    seq.cycle_boundaries.clear();  // force detection
    const auto segmentation = segment_cycles(seq);
    CHECK(segmentation.heuristic);
    REQUIRE(!segmentation.cycles.empty());
    const double len = static_cast<double>(segmentation.cycles[0].end -
                                           segmentation.cycles[0].start);
    CHECK(len >= 11.0);
    CHECK(len <= 13.0);
  }
}

TEST_CASE("segment_cycles: static pose falls back to one heuristic span") {
  const SynthConfig cfg{.subjects = 2, .cycles_per_subject = 1, .period = 10, .seed = 36};
  GaitSequence seq;
  seq.frames.assign(15, synth_corpus(cfg)[0].frames[0]);
  const auto segmentation = segment_cycles(seq);
  CHECK(segmentation.heuristic);
  REQUIRE(segmentation.cycles.size() == 1);
  CHECK(segmentation.cycles[0].start == 0);
  CHECK(segmentation.cycles[0].end == 15);
}

TEST_CASE("gei feature vector is the fixed 4x4 block mean") {
  GaitEnergyImage gei;
  gei.values.assign(kFramePixels, 0.25);
  const auto feat = gaitrec::gei_feature_vector(gei);
  REQUIRE(feat.size() == kGeiFeatureDim);
  for (double v : feat) CHECK(v == doctest::Approx(0.25));

  // Hand check one interior block.
  GaitEnergyImage g2;
  g2.values.assign(kFramePixels, 0.0);
  for (std::size_t r = 4; r < 8; ++r)
    for (std::size_t c = 8; c < 12; ++c) g2.values[r * kFrameWidth + c] = 1.0;
  const auto f2 = gaitrec::gei_feature_vector(g2);
  CHECK(f2[1 * kGeiFeatureCols + 2] == doctest::Approx(1.0));
  CHECK(f2[0] == doctest::Approx(0.0));
}

namespace {
std::vector<std::pair<GaitEnergyImage, std::string>> gallery_examples(std::uint64_t seed,
                                                                      std::size_t subjects,
                                                                      std::size_t cycles = 2) {
  const SynthConfig cfg{
      .subjects = subjects, .cycles_per_subject = cycles, .period = 12, .seed = seed};
  std::vector<std::pair<GaitEnergyImage, std::string>> examples;
  for (const auto& seq : synth_corpus(cfg))
    for (const auto& cycle : seq.cycle_boundaries)
      examples.emplace_back(compute_cycle_gei(seq, cycle), seq.subject_id);
  return examples;
}
}  // namespace

TEST_CASE("forest: two GEIs per subject reach 0.95 training accuracy") {
  const auto examples = gallery_examples(40, 10);
  RandomForest::Config cfg;
  cfg.seed = 41;
  const RandomForest forest = RandomForest::train(examples, cfg);
  CHECK(forest.tree_count() == 100);

  std::size_t correct = 0;
  for (const auto& [gei, subject] : examples) {
    const auto ranked = forest.classify(gei);
    REQUIRE(ranked.size() == forest.classes().size());
    correct += ranked.front().first == subject ? 1 : 0;
    double sum = 0.0;
    for (const auto& [id, score] : ranked) sum += score;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    for (std::size_t k = 1; k < ranked.size(); ++k)
      CHECK(ranked[k - 1].second >= ranked[k].second);
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(examples.size()) >= 0.95);
}

TEST_CASE("forest: training GEIs rank first with a dominant vote share") {
  // A training example is out-of-bag for ~36% of trees; those trees can only
  // vote for it through same-subject siblings, so the vote-share check uses
  // four cycles per subject.
  const auto examples = gallery_examples(40, 10, 4);
  RandomForest::Config cfg;
  cfg.seed = 41;
  const RandomForest forest = RandomForest::train(examples, cfg);
  for (const auto& [gei, subject] : examples) {
    const auto ranked = forest.classify(gei);
    CHECK(ranked.front().first == subject);
    CHECK(ranked.front().second >= 0.9);
  }
}

TEST_CASE("forest: rejects degenerate training sets") {
  CHECK_THROWS_AS(RandomForest::train({}, {}), Error);
  auto examples = gallery_examples(42, 2);
  examples.resize(2);
  for (auto& [gei, subject] : examples) subject = "only";
  CHECK_THROWS_WITH_AS(RandomForest::train(examples, {}), doctest::Contains("two classes"),
                       Error);
}

TEST_CASE("forest: identical seeds give bit-identical predictions") {
  const auto examples = gallery_examples(43, 5);
  RandomForest::Config cfg;
  cfg.seed = 44;
  const RandomForest a = RandomForest::train(examples, cfg);
  const RandomForest b = RandomForest::train(examples, cfg);
  for (const auto& [gei, subject] : examples) {
    const auto ra = a.classify(gei);
    const auto rb = b.classify(gei);
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
      CHECK(ra[i].first == rb[i].first);
      CHECK(ra[i].second == rb[i].second);
    }
  }
}

TEST_CASE("forest checkpoints round-trip") {
  const auto examples = gallery_examples(45, 4);
  RandomForest::Config cfg;
  cfg.tree_count = 25;
  cfg.seed = 46;
  const RandomForest forest = RandomForest::train(examples, cfg);
  const auto path = std::filesystem::temp_directory_path() / "gaitrec_forest_test.ckpt";
  forest.save(path);
  const RandomForest loaded = RandomForest::load(path);
  CHECK(loaded.classes() == forest.classes());
  CHECK(loaded.tree_count() == 25);
  for (const auto& [gei, subject] : examples) {
    const auto ra = forest.classify(gei);
    const auto rb = loaded.classify(gei);
    for (std::size_t i = 0; i < ra.size(); ++i) {
      CHECK(ra[i].first == rb[i].first);
      CHECK(ra[i].second == rb[i].second);
    }
  }
  std::filesystem::remove(path);
}

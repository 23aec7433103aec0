#include <doctest.h>

#include <fstream>

#include "gaitrec/evaluation.hpp"
#include "gaitrec/synth.hpp"

#include "support/oracles.hpp"

using namespace gaitrec;

namespace {

GaitEnergyImage gei_of(std::initializer_list<std::pair<std::size_t, double>> pixels) {
  GaitEnergyImage g;
  g.values.assign(kFramePixels, 0.0);
  for (const auto& [idx, v] : pixels) g.values[idx] = v;
  return g;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)), {});
}

}  // namespace

TEST_CASE("dice: identity, disjoint and hand-counted cases") {
  const auto a = gei_of({{0, 1.0}, {1, 1.0}});
  CHECK(dice(a, a).score == doctest::Approx(1.0));

  const auto b = gei_of({{5, 1.0}});
  CHECK(dice(a, b).score == doctest::Approx(0.0));

  // 2 fg pixels vs 1 fg pixel with 1 overlapping: 2*1/(2+1)
  const auto c = gei_of({{0, 1.0}});
  CHECK(dice(a, c).score == doctest::Approx(2.0 / 3.0));

  const auto empty = gei_of({});
  CHECK(dice(empty, empty).score == doctest::Approx(1.0));

  GaitEnergyImage wrong;
  wrong.values.assign(10, 0.0);
  CHECK_THROWS_AS(dice(a, wrong), Error);
}

TEST_CASE("dice: symmetric, bounded, matches the brute-force oracle to 1e-12") {
  Rng rng(55);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    GaitEnergyImage a, b;
    a.values.resize(kFramePixels);
    b.values.resize(kFramePixels);
    for (auto& v : a.values) v = dist(rng);
    for (auto& v : b.values) v = dist(rng);
    const double ab = dice(a, b).score;
    const double ba = dice(b, a).score;
    CHECK(ab == ba);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(std::abs(ab - testing::dice_oracle(a, b)) <= 1e-12);
  }
}

TEST_CASE("dice: hard mode binarizes at 0.5 before counting") {
  const auto a = gei_of({{0, 0.6}, {1, 0.4}});
  const auto b = gei_of({{0, 0.9}});
  const auto hard = dice(a, b, DiceMode::hard);
  CHECK(hard.mode == DiceMode::hard);
  CHECK(hard.score == doctest::Approx(1.0));  // 0.4 drops out, overlap is exact
}

TEST_CASE("cmc: hand-counted series and endpoint") {
  using Query = std::pair<std::vector<std::string>, std::string>;
  const std::vector<Query> qs = {
      {{"a", "b", "c", "d"}, "a"},  // rank 1
      {{"b", "a", "c", "d"}, "a"},  // rank 2
      {{"b", "c", "d", "a"}, "a"},  // rank 4
  };
  const CmcSeries series = compute_cmc(qs, 4);
  REQUIRE(series.accuracies.size() == 4);
  CHECK(series.accuracies[0] == doctest::Approx(1.0 / 3.0));
  CHECK(series.accuracies[1] == doctest::Approx(2.0 / 3.0));
  CHECK(series.accuracies[2] == doctest::Approx(2.0 / 3.0));
  CHECK(series.accuracies[3] == doctest::Approx(1.0));
  for (std::size_t k = 1; k < series.accuracies.size(); ++k)
    CHECK(series.accuracies[k] >= series.accuracies[k - 1]);

  const std::vector<Query> perfect = {{{"a", "b"}, "a"}, {{"b", "a"}, "b"}};
  const CmcSeries all1 = compute_cmc(perfect, 2);
  CHECK(all1.accuracies[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(compute_cmc({}, 3), Error);
  CHECK_THROWS_AS(compute_cmc(qs, 9), Error);
}

TEST_CASE("emit_report writes deterministic bytes and rejects empty reports") {
  EvaluationReport report;
  report.seed = 7;
  report.corpus_hash = "abc123";
  report.checkpoints["ae"] = "deadbeef";
  report.cmc_max_rank = 3;
  for (int b = 0; b < 2; ++b) {
    BandRow row;
    row.band_low = 0.05 + 0.05 * b;
    row.band_high = 0.10 + 0.10 * b;
    row.mean_dice = 0.9 - 0.1 * b;
    row.rank1_accuracy = 0.95 - 0.05 * b;
    row.cmc.accuracies = {row.rank1_accuracy, 0.97, 1.0};
    row.query_count = 60;
    report.bands.push_back(row);
  }
  report.ablation.push_back({"m1", 0.82});
  report.ablation.push_back({"m2", 0.87});
  report.ablation.push_back({"fused", 0.90});

  const auto dir = std::filesystem::temp_directory_path() / "gaitrec_report_test";
  std::filesystem::remove_all(dir);
  emit_report(report, dir);
  for (const char* name : {"results.json", "report.md", "cmc.png", "dice.png"})
    CHECK(std::filesystem::exists(dir / name));

  std::map<std::string, std::string> first;
  for (const char* name : {"results.json", "report.md", "cmc.png", "dice.png"})
    first[name] = slurp(dir / name);
  emit_report(report, dir);
  for (const auto& [name, bytes] : first) CHECK(slurp(dir / name) == bytes);

  // PNG signature sanity.
  CHECK(first["cmc.png"].substr(1, 3) == "PNG");

  EvaluationReport empty;
  CHECK_THROWS_AS(emit_report(empty, dir), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("band sweep: degenerate (0,0) band reproduces clean-data results") {
  // Untrained tiny models: the zero band never invokes them, so dice must be
  // exactly 1 and rank-1 must match classifying the clean GEIs.
  const SynthConfig cfg{.subjects = 3, .cycles_per_subject = 2, .period = 12, .seed = 60};
  const auto corpus = synth_corpus(cfg);

  const Autoencoder ae(61);
  const LstmPredictor m1(Direction::forward, {.hidden = 8, .reversed_input = true}, 62);
  const LstmPredictor m2(Direction::backward, {.hidden = 8, .reversed_input = true}, 63);
  const FusionNetwork fusion({.blocks = 1, .width = 4}, 64);

  std::vector<std::pair<GaitEnergyImage, std::string>> examples;
  for (const auto& seq : corpus)
    for (const auto& cycle : seq.cycle_boundaries)
      examples.emplace_back(compute_cycle_gei(seq, cycle), seq.subject_id);
  RandomForest::Config fc;
  fc.seed = 65;
  const RandomForest forest = RandomForest::train(examples, fc);

  EvalModels models;
  models.ae = &ae;
  models.m1 = &m1;
  models.m2 = &m2;
  models.fusion = &fusion;
  models.forest = &forest;

  BandSweepOptions opts;
  opts.bands = {{0.0, 0.0}};
  opts.seed = 66;
  opts.cmc_max_rank = 3;
  const EvaluationReport report = run_band_sweep(corpus, models, opts);
  REQUIRE(report.bands.size() == 1);
  CHECK(report.bands[0].mean_dice == doctest::Approx(1.0));

  // Clean-data rank-1 for comparison.
  std::size_t hit = 0, total = 0;
  for (const auto& seq : corpus)
    for (const auto& cycle : seq.cycle_boundaries) {
      const auto ranked = forest.classify(compute_cycle_gei(seq, cycle));
      hit += ranked.front().first == seq.subject_id ? 1 : 0;
      ++total;
    }
  CHECK(report.bands[0].rank1_accuracy ==
        doctest::Approx(static_cast<double>(hit) / static_cast<double>(total)));
}

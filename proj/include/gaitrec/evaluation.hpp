#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gaitrec/forest.hpp"
#include "gaitrec/gait.hpp"
#include "gaitrec/reconstruct.hpp"

namespace gaitrec {

enum class DiceMode { soft, hard };

struct DiceResult {
  double score = 0.0;
  DiceMode mode = DiceMode::soft;
};

// soft: 2*sum(a.b) / (sum(a) + sum(b)); hard: binarize both at 0.5 first.
// Empty-vs-empty is defined as 1 (perfect agreement on "no foreground").
DiceResult dice(const GaitEnergyImage& a, const GaitEnergyImage& b,
                DiceMode mode = DiceMode::soft);

struct CmcSeries {
  std::vector<double> accuracies;  // accuracies[k-1] = top-k hit rate, k = 1..K
};

// ranked_predictions: (ranked subject ids, true subject) per query.
CmcSeries compute_cmc(
    const std::vector<std::pair<std::vector<std::string>, std::string>>& ranked_predictions,
    std::size_t max_rank);

struct BandRow {
  double band_low = 0.0;
  double band_high = 0.0;
  double mean_dice = 0.0;
  double rank1_accuracy = 0.0;
  CmcSeries cmc;
  std::size_t query_count = 0;
  std::size_t unreconstructable_frames = 0;
};

struct AblationRow {
  std::string model;  // "m1", "m2", "fused"
  double mean_dice = 0.0;
};

struct EvaluationReport {
  std::vector<BandRow> bands;
  std::vector<AblationRow> ablation;

  std::uint64_t seed = 0;
  std::string corpus_hash;                          // hex fingerprint
  std::map<std::string, std::string> checkpoints;   // name -> content hash
  std::size_t cmc_max_rank = 5;
};

struct EvalModels {
  const Autoencoder* ae = nullptr;
  const LstmPredictor* m1 = nullptr;
  const LstmPredictor* m2 = nullptr;
  const FusionNetwork* fusion = nullptr;
  const RandomForest* forest = nullptr;
};

struct BandSweepOptions {
  std::vector<std::pair<double, double>> bands = {
      {0.05, 0.10}, {0.10, 0.20}, {0.20, 0.30}, {0.30, 0.40}, {0.40, 0.50}};
  std::uint64_t seed = 0;
  std::size_t cmc_max_rank = 5;
  // When set, also reconstruct at this band with each of m1-only, m2-only and
  // the fused model, reporting mean GEI dice per variant.
  std::optional<std::pair<double, double>> ablation_band;
};

// Occlude -> reconstruct -> per-cycle GEI dice vs the clean GEI, and
// classify -> rank-k, per band. Test sequences must be clean (ground truth).
EvaluationReport run_band_sweep(const std::vector<GaitSequence>& test_corpus,
                                const EvalModels& models, const BandSweepOptions& options);

// results.json (versioned), report.md, and CMC/Dice PNG plots. Re-emitting
// the same report produces byte-identical files.
void emit_report(const EvaluationReport& report, const std::filesystem::path& out_dir);

}  // namespace gaitrec

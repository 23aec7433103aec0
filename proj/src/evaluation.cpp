#include "gaitrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "png_plot.hpp"

namespace gaitrec {

using json = nlohmann::ordered_json;

DiceResult dice(const GaitEnergyImage& a, const GaitEnergyImage& b, DiceMode mode) {
  require(a.values.size() == b.values.size(), "dice: shape mismatch");
  double inter = 0.0, sum_a = 0.0, sum_b = 0.0;
  if (mode == DiceMode::soft) {
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      inter += a.values[i] * b.values[i];
      sum_a += a.values[i];
      sum_b += b.values[i];
    }
  } else {
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      const double av = a.values[i] >= 0.5 ? 1.0 : 0.0;
      const double bv = b.values[i] >= 0.5 ? 1.0 : 0.0;
      inter += av * bv;
      sum_a += av;
      sum_b += bv;
    }
  }
  DiceResult result;
  result.mode = mode;
  result.score = (sum_a + sum_b) == 0.0 ? 1.0 : 2.0 * inter / (sum_a + sum_b);
  return result;
}

CmcSeries compute_cmc(
    const std::vector<std::pair<std::vector<std::string>, std::string>>& ranked_predictions,
    std::size_t max_rank) {
  require(!ranked_predictions.empty(), "compute_cmc: empty prediction list");
  for (const auto& [ranked, truth] : ranked_predictions)
    require(max_rank <= ranked.size(),
            "compute_cmc: max_rank exceeds ranked list length " + std::to_string(ranked.size()));

  CmcSeries series;
  series.accuracies.assign(max_rank, 0.0);
  for (const auto& [ranked, truth] : ranked_predictions) {
    for (std::size_t k = 0; k < max_rank; ++k) {
      if (ranked[k] == truth) {
        for (std::size_t j = k; j < max_rank; ++j) series.accuracies[j] += 1.0;
        break;
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(ranked_predictions.size());
  for (double& a : series.accuracies) a *= inv;
  return series;
}

namespace {

struct BandOutcome {
  double mean_dice = 0.0;
  double rank1 = 0.0;
  CmcSeries cmc;
  std::size_t queries = 0;
  std::size_t unreconstructable = 0;
};

// One occlude -> reconstruct -> score pass over the corpus.
BandOutcome evaluate_band(const std::vector<GaitSequence>& corpus, const EvalModels& models,
                          std::pair<double, double> band, std::uint64_t band_seed,
                          ReconstructionMode mode, std::size_t cmc_max_rank, bool classify) {
  BandOutcome out;
  double dice_sum = 0.0;
  std::size_t dice_count = 0;
  std::vector<std::pair<std::vector<std::string>, std::string>> predictions;

  for (std::size_t si = 0; si < corpus.size(); ++si) {
    const GaitSequence& clean = corpus[si];
    require(clean.occluded_indices().empty(),
            "run_band_sweep: test corpus must be clean ground truth");

    OcclusionSpec spec;
    spec.band_low = band.first;
    spec.band_high = band.second;
    spec.rng_seed = mix_seed(band_seed, si);
    OcclusionOutcome occluded = synthesize_occlusion(clean, spec);

    ReconstructOptions opts;
    opts.mode = mode;
    ReconstructionResult recon = reconstruct_sequence(
        occluded.sequence, occluded.mask, *models.ae, *models.m1, *models.m2, *models.fusion,
        opts);
    out.unreconstructable += recon.unreconstructable.size();

    const auto cycles = segment_cycles(clean).cycles;
    for (const auto& cycle : cycles) {
      const GaitEnergyImage truth_gei = compute_cycle_gei(clean, cycle);
      bool usable = false;
      for (std::size_t i = cycle.start; i < cycle.end; ++i)
        if (recon.sequence.frames[i].status != FrameStatus::occluded) usable = true;
      if (!usable) continue;  // a fully unreconstructable cycle has no GEI
      const GaitEnergyImage recon_gei = compute_cycle_gei(recon.sequence, cycle);
      dice_sum += dice(recon_gei, truth_gei, DiceMode::soft).score;
      ++dice_count;
      if (classify) {
        auto ranked = models.forest->classify(recon_gei);
        std::vector<std::string> ids;
        ids.reserve(ranked.size());
        for (const auto& [id, score] : ranked) ids.push_back(id);
        predictions.emplace_back(std::move(ids), clean.subject_id);
      }
    }
  }

  out.mean_dice = dice_count ? dice_sum / static_cast<double>(dice_count) : 0.0;
  out.queries = predictions.size();
  if (classify && !predictions.empty()) {
    out.cmc = compute_cmc(predictions, cmc_max_rank);
    out.rank1 = out.cmc.accuracies.front();
  }
  return out;
}

}  // namespace

EvaluationReport run_band_sweep(const std::vector<GaitSequence>& test_corpus,
                                const EvalModels& models, const BandSweepOptions& options) {
  require(models.ae && models.m1 && models.m2 && models.fusion && models.forest,
          "run_band_sweep: all models must be provided");
  require(!test_corpus.empty(), "run_band_sweep: empty test corpus");
  require(!options.bands.empty(), "run_band_sweep: no bands");

  EvaluationReport report;
  report.seed = options.seed;
  report.cmc_max_rank = options.cmc_max_rank;

  for (std::size_t bi = 0; bi < options.bands.size(); ++bi) {
    const auto band = options.bands[bi];
    const BandOutcome outcome =
        evaluate_band(test_corpus, models, band, mix_seed(options.seed, 1000 + bi),
                      ReconstructionMode::fused, options.cmc_max_rank, true);
    BandRow row;
    row.band_low = band.first;
    row.band_high = band.second;
    row.mean_dice = outcome.mean_dice;
    row.rank1_accuracy = outcome.rank1;
    row.cmc = outcome.cmc;
    row.query_count = outcome.queries;
    row.unreconstructable_frames = outcome.unreconstructable;
    report.bands.push_back(std::move(row));
  }

  if (options.ablation_band) {
    const auto band = *options.ablation_band;
    const std::uint64_t seed = mix_seed(options.seed, 777);
    const struct {
      const char* name;
      ReconstructionMode mode;
    } variants[] = {{"m1", ReconstructionMode::forward_only},
                    {"m2", ReconstructionMode::backward_only},
                    {"fused", ReconstructionMode::fused}};
    for (const auto& v : variants) {
      const BandOutcome outcome = evaluate_band(test_corpus, models, band, seed, v.mode,
                                                options.cmc_max_rank, false);
      report.ablation.push_back({v.name, outcome.mean_dice});
    }
  }
  return report;
}

namespace {

json report_to_json(const EvaluationReport& report) {
  json j;
  j["version"] = 1;
  j["seed"] = report.seed;
  j["corpus_hash"] = report.corpus_hash;
  j["checkpoints"] = report.checkpoints;
  j["cmc_max_rank"] = report.cmc_max_rank;
  j["bands"] = json::array();
  for (const auto& row : report.bands) {
    json jr;
    jr["band"] = {row.band_low, row.band_high};
    jr["mean_dice"] = row.mean_dice;
    jr["rank1_accuracy"] = row.rank1_accuracy;
    jr["cmc"] = row.cmc.accuracies;
    jr["query_count"] = row.query_count;
    jr["unreconstructable_frames"] = row.unreconstructable_frames;
    j["bands"].push_back(std::move(jr));
  }
  j["ablation"] = json::array();
  for (const auto& row : report.ablation)
    j["ablation"].push_back({{"model", row.model}, {"mean_dice", row.mean_dice}});
  return j;
}

std::string band_label(double lo, double hi) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%g-%g%%", lo * 100.0, hi * 100.0);
  return buf;
}

}  // namespace

void emit_report(const EvaluationReport& report, const std::filesystem::path& out_dir) {
  require(!report.bands.empty(), "emit_report: report has no band rows");
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream os(out_dir / "results.json", std::ios::trunc);
    require(static_cast<bool>(os), "emit_report: cannot write results.json");
    os << report_to_json(report).dump(2) << "\n";
  }

  {
    std::ofstream os(out_dir / "report.md", std::ios::trunc);
    require(static_cast<bool>(os), "emit_report: cannot write report.md");
    os << "# Occlusion reconstruction evaluation\n\n";
    os << "Seed: " << report.seed << "\n\n";
    if (!report.corpus_hash.empty()) os << "Corpus hash: `" << report.corpus_hash << "`\n\n";
    if (!report.checkpoints.empty()) {
      os << "Checkpoints:\n\n";
      for (const auto& [name, hash] : report.checkpoints)
        os << "- " << name << ": `" << hash << "`\n";
      os << "\n";
    }
    os << "## Reconstruction quality and identification per occlusion band\n\n";
    os << "| Occlusion | Mean GEI Dice | Rank-1 accuracy | Queries | Unreconstructable |\n";
    os << "|---|---|---|---|---|\n";
    char buf[64];
    for (const auto& row : report.bands) {
      std::snprintf(buf, sizeof(buf), "| %s | %.4f | %.2f%% | %zu | %zu |\n",
                    band_label(row.band_low, row.band_high).c_str(), row.mean_dice,
                    row.rank1_accuracy * 100.0, row.query_count, row.unreconstructable_frames);
      os << buf;
    }
    os << "\n## CMC\n\n| Occlusion |";
    for (std::size_t k = 1; k <= report.cmc_max_rank; ++k) os << " Rank-" << k << " |";
    os << "\n|---|";
    for (std::size_t k = 1; k <= report.cmc_max_rank; ++k) os << "---|";
    os << "\n";
    for (const auto& row : report.bands) {
      os << "| " << band_label(row.band_low, row.band_high) << " |";
      for (double a : row.cmc.accuracies) {
        std::snprintf(buf, sizeof(buf), " %.2f%% |", a * 100.0);
        os << buf;
      }
      os << "\n";
    }
    if (!report.ablation.empty()) {
      os << "\n## Ablation (mean GEI Dice)\n\n| Model | Mean Dice |\n|---|---|\n";
      for (const auto& row : report.ablation) {
        std::snprintf(buf, sizeof(buf), "| %s | %.4f |\n", row.model.c_str(), row.mean_dice);
        os << buf;
      }
    }
  }

  {
    std::vector<plot::Series> cmc_series;
    for (const auto& row : report.bands) {
      plot::Series s;
      s.label = band_label(row.band_low, row.band_high);
      for (std::size_t k = 0; k < row.cmc.accuracies.size(); ++k) {
        s.x.push_back(static_cast<double>(k + 1));
        s.y.push_back(row.cmc.accuracies[k]);
      }
      cmc_series.push_back(std::move(s));
    }
    plot::ChartSpec spec;
    spec.title = "CMC BY OCCLUSION BAND";
    spec.x_label = "RANK";
    spec.y_label = "ACC";
    plot::write_line_chart(out_dir / "cmc.png", spec, cmc_series);
  }

  {
    plot::Series dice_series, rank1_series;
    dice_series.label = "MEAN DICE";
    rank1_series.label = "RANK-1";
    for (const auto& row : report.bands) {
      const double mid = 50.0 * (row.band_low + row.band_high);
      dice_series.x.push_back(mid);
      dice_series.y.push_back(row.mean_dice);
      rank1_series.x.push_back(mid);
      rank1_series.y.push_back(row.rank1_accuracy);
    }
    plot::ChartSpec spec;
    spec.title = "RECONSTRUCTION QUALITY VS OCCLUSION";
    spec.x_label = "OCCLUSION %";
    spec.y_label = "SCORE";
    plot::write_line_chart(out_dir / "dice.png", spec, {dice_series, rank1_series});
  }
}

}  // namespace gaitrec

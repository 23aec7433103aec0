#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gaitrec/evaluation.hpp"
#include "gaitrec/manifest.hpp"
#include "gaitrec/pipeline.hpp"
#include "gaitrec/pgm.hpp"
#include "gaitrec/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::pair<double, double> parse_band(const std::string& s) {
  const auto colon = s.find(':');
  gaitrec::require(colon != std::string::npos, "band must be LOW:HIGH, got '" + s + "'");
  return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
}

std::vector<std::pair<double, double>> parse_bands(const std::string& s) {
  std::vector<std::pair<double, double>> bands;
  std::size_t start = 0;
  while (start < s.size()) {
    auto comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    bands.push_back(parse_band(s.substr(start, comma - start)));
    start = comma + 1;
  }
  gaitrec::require(!bands.empty(), "no bands given");
  return bands;
}

// Writes a manifest whose sequences are already on disk elsewhere: frames are
// re-exported so the output directory is self-contained.
void export_sequences(const std::vector<gaitrec::GaitSequence>& seqs, const fs::path& out_dir) {
  gaitrec::save_sequences(seqs, out_dir);
}

int cmd_synth(std::size_t subjects, std::size_t cycles, std::size_t period, double jitter,
              std::uint64_t seed, const std::string& out) {
  gaitrec::SynthConfig cfg;
  cfg.subjects = subjects;
  cfg.cycles_per_subject = cycles;
  cfg.period = period;
  cfg.jitter = jitter;
  cfg.seed = seed;
  export_sequences(gaitrec::synth_corpus(cfg), out);
  std::cout << "wrote " << subjects << " sequences to " << out << "/manifest.json\n";
  return 0;
}

int cmd_occlude(const std::string& in, const std::string& band, std::uint64_t seed,
                bool contiguous, const std::string& out) {
  const auto manifest = gaitrec::read_manifest(in);
  const auto [lo, hi] = parse_band(band);
  std::vector<gaitrec::GaitSequence> occluded;
  std::size_t stream = 0;
  for (const auto& entry : manifest.entries) {
    gaitrec::OcclusionSpec spec;
    spec.band_low = lo;
    spec.band_high = hi;
    spec.placement = contiguous ? gaitrec::OcclusionSpec::Placement::contiguous
                                : gaitrec::OcclusionSpec::Placement::scattered;
    spec.rng_seed = gaitrec::mix_seed(seed, stream++);
    auto outcome = gaitrec::synthesize_occlusion(gaitrec::load_sequence(manifest, entry), spec);
    if (outcome.band_degenerate)
      std::cerr << "warning: band degenerate for " << entry.sequence_id
                << ", sequence returned unchanged\n";
    occluded.push_back(std::move(outcome.sequence));
  }
  export_sequences(occluded, out);
  std::cout << "wrote occluded corpus to " << out << "/manifest.json\n";
  return 0;
}

int cmd_detect(const std::string& in, const std::string& detector, const std::string& out) {
  auto manifest = gaitrec::read_manifest(in);
  std::unique_ptr<gaitrec::OcclusionDetector> det;
  if (detector == "heuristic") {
    det = std::make_unique<gaitrec::HeuristicOcclusionDetector>();
  } else if (detector.rfind("cnn:", 0) == 0) {
    det = std::make_unique<gaitrec::CnnOcclusionDetector>(
        gaitrec::CnnOcclusionDetector::load(detector.substr(4)));
  } else {
    throw gaitrec::Error("unknown detector '" + detector + "' (use heuristic or cnn:PATH)");
  }
  std::size_t flagged = 0;
  for (auto& entry : manifest.entries) {
    // Detection runs on pixels alone; prior status markers are discarded.
    gaitrec::ManifestEntry probe = entry;
    probe.occluded_indices.clear();
    probe.reconstructed_indices.clear();
    const auto seq = gaitrec::load_sequence(manifest, probe);
    const auto mask = det->detect(seq);
    entry.occluded_indices = mask.indices;
    flagged += mask.indices.size();
  }
  gaitrec::write_manifest(manifest, out);
  std::cout << "flagged " << flagged << " frames; wrote " << out << "\n";
  return 0;
}

int cmd_train_detector(const std::string& corpus, std::size_t epochs, std::uint64_t seed,
                       const std::string& out) {
  const auto manifest = gaitrec::read_manifest(corpus);
  std::vector<std::pair<gaitrec::SilhouetteFrame, bool>> labeled;
  for (const auto& entry : manifest.entries) {
    const auto seq = gaitrec::load_sequence(manifest, entry);
    for (const auto& f : seq.frames)
      labeled.emplace_back(f, f.status == gaitrec::FrameStatus::occluded);
  }
  gaitrec::CnnOcclusionDetector::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = seed;
  gaitrec::CnnOcclusionDetector::train(labeled, cfg).save(out);
  std::cout << "wrote detector to " << out << "\n";
  return 0;
}

int cmd_train_ae(const std::string& corpus, std::size_t epochs, std::size_t batch, double lr,
                 std::uint64_t seed, const std::string& out) {
  const auto manifest = gaitrec::read_manifest(corpus);
  std::vector<gaitrec::SilhouetteFrame> frames;
  for (const auto& entry : manifest.entries) {
    const auto seq = gaitrec::load_sequence(manifest, entry);
    for (const auto& f : seq.frames)
      if (f.status == gaitrec::FrameStatus::observed) frames.push_back(f);
  }
  gaitrec::Autoencoder ae(gaitrec::mix_seed(seed, 2));
  gaitrec::Autoencoder::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.learning_rate = lr;
  cfg.seed = gaitrec::mix_seed(seed, 3);
  const auto report = ae.train(frames, cfg);
  ae.save(out);
  std::cout << "trained on " << frames.size() << " frames for " << report.epochs_run
            << " epochs (mean BCE/frame " << report.epoch_loss.back() << "); wrote " << out
            << "\n";
  return 0;
}

int cmd_train_lstm(const std::string& direction, const std::string& corpus, const std::string& ae_path,
                   std::size_t epochs, std::size_t batch, double lr, std::size_t hidden,
                   std::uint64_t seed, const std::string& out) {
  gaitrec::require(direction == "forward" || direction == "backward",
                   "--direction must be forward or backward");
  const auto dir =
      direction == "forward" ? gaitrec::Direction::forward : gaitrec::Direction::backward;
  const auto manifest = gaitrec::read_manifest(corpus);
  const auto sequences = gaitrec::load_all_sequences(manifest);
  const auto ae = gaitrec::Autoencoder::load(ae_path);
  gaitrec::LstmPredictor::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.learning_rate = lr;
  cfg.seed = gaitrec::mix_seed(seed, dir == gaitrec::Direction::forward ? 4 : 5);
  gaitrec::LstmPredictor::Config arch;
  arch.hidden = hidden;
  auto result = gaitrec::train_predictor(dir, sequences, ae, cfg, arch);
  result.model.save(out);
  std::cout << "final embedding MSE " << result.report.epoch_loss.back() << "; wrote " << out
            << "\n";
  return 0;
}

int cmd_train_fusion(const std::string& corpus, const std::string& ae_path,
                     const std::string& m1_path, const std::string& m2_path, std::size_t epochs,
                     std::size_t batch, double lr, std::size_t blocks, std::size_t width,
                     std::uint64_t seed, const std::string& out) {
  const auto manifest = gaitrec::read_manifest(corpus);
  const auto sequences = gaitrec::load_all_sequences(manifest);
  const auto ae = gaitrec::Autoencoder::load(ae_path);
  const auto m1 = gaitrec::LstmPredictor::load(m1_path);
  const auto m2 = gaitrec::LstmPredictor::load(m2_path);
  const auto triples = gaitrec::make_fusion_triples(sequences, ae, m1, m2);
  gaitrec::FusionNetwork::Config fc;
  fc.blocks = blocks;
  fc.width = width;
  gaitrec::FusionNetwork net(fc, gaitrec::mix_seed(seed, 6));
  gaitrec::FusionNetwork::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.learning_rate = lr;
  cfg.seed = gaitrec::mix_seed(seed, 7);
  const auto report = net.train(triples, cfg);
  net.save(out);
  std::cout << "trained on " << triples.size() << " triples (final BCE "
            << report.epoch_loss.back() << "); wrote " << out << "\n";
  return 0;
}

int cmd_reconstruct(const std::string& in, const std::string& ae_path, const std::string& m1_path,
                    const std::string& m2_path, const std::string& fusion_path,
                    const std::string& single_direction, bool propagate_embeddings,
                    const std::string& out) {
  const auto manifest = gaitrec::read_manifest(in);
  const auto ae = gaitrec::Autoencoder::load(ae_path);
  const auto m1 = gaitrec::LstmPredictor::load(m1_path);
  const auto m2 = gaitrec::LstmPredictor::load(m2_path);
  const auto fusion = gaitrec::FusionNetwork::load(fusion_path);

  gaitrec::ReconstructOptions opts;
  opts.propagate_embeddings = propagate_embeddings;
  if (single_direction == "forward")
    opts.mode = gaitrec::ReconstructionMode::forward_only;
  else if (single_direction == "backward")
    opts.mode = gaitrec::ReconstructionMode::backward_only;
  else
    gaitrec::require(single_direction.empty(), "--single-direction must be forward or backward");

  std::vector<gaitrec::GaitSequence> reconstructed;
  std::size_t failed = 0;
  for (const auto& entry : manifest.entries) {
    auto result =
        gaitrec::reconstruct_sequence(gaitrec::load_sequence(manifest, entry), ae, m1, m2, fusion,
                                      opts);
    failed += result.unreconstructable.size();
    reconstructed.push_back(std::move(result.sequence));
  }
  export_sequences(reconstructed, out);
  if (failed > 0)
    std::cerr << "warning: " << failed << " frames unreconstructable (still marked occluded)\n";
  std::cout << "wrote reconstructed corpus to " << out << "/manifest.json\n";
  return 0;
}

int cmd_gei(const std::string& in, bool include_occluded, const std::string& out) {
  const auto manifest = gaitrec::read_manifest(in);
  fs::create_directories(out);
  ordered_json index;
  index["version"] = 1;
  index["entries"] = ordered_json::array();
  const auto policy = include_occluded ? gaitrec::OccludedFramePolicy::include_blank
                                       : gaitrec::OccludedFramePolicy::skip;
  for (const auto& entry : manifest.entries) {
    const auto seq = gaitrec::load_sequence(manifest, entry);
    const auto segmentation = gaitrec::segment_cycles(seq);
    for (std::size_t c = 0; c < segmentation.cycles.size(); ++c) {
      const auto gei = gaitrec::compute_cycle_gei(seq, segmentation.cycles[c], policy);
      char name[128];
      std::snprintf(name, sizeof(name), "%s_%s_c%02zu.pgm", entry.subject_id.c_str(),
                    entry.sequence_id.c_str(), c);
      gaitrec::write_pgm16(fs::path(out) / name, gei.values, gaitrec::kFrameHeight,
                           gaitrec::kFrameWidth);
      index["entries"].push_back({{"subject_id", entry.subject_id},
                                  {"sequence_id", entry.sequence_id},
                                  {"cycle", c},
                                  {"path", name},
                                  {"frames", gei.cycle_frame_count},
                                  {"heuristic_cycles", segmentation.heuristic}});
    }
  }
  std::ofstream os(fs::path(out) / "gei.json");
  os << index.dump(2) << "\n";
  std::cout << "wrote GEIs to " << out << "\n";
  return 0;
}

int cmd_train_forest(const std::string& corpus, std::size_t trees, std::uint64_t seed,
                     const std::string& out) {
  const auto manifest = gaitrec::read_manifest(corpus);
  std::vector<std::pair<gaitrec::GaitEnergyImage, std::string>> examples;
  for (const auto& entry : manifest.entries) {
    const auto seq = gaitrec::load_sequence(manifest, entry);
    for (const auto& cycle : gaitrec::segment_cycles(seq).cycles)
      examples.emplace_back(gaitrec::compute_cycle_gei(seq, cycle), entry.subject_id);
  }
  gaitrec::RandomForest::Config cfg;
  cfg.tree_count = trees;
  cfg.seed = gaitrec::mix_seed(seed, 8);
  gaitrec::RandomForest::train(examples, cfg).save(out);
  std::cout << "trained " << trees << " trees on " << examples.size() << " GEIs; wrote " << out
            << "\n";
  return 0;
}

int cmd_classify(const std::string& forest_path, const std::string& in, std::size_t top,
                 const std::string& out) {
  const auto forest = gaitrec::RandomForest::load(forest_path);
  const auto manifest = gaitrec::read_manifest(in);
  ordered_json results;
  results["version"] = 1;
  results["queries"] = ordered_json::array();
  for (const auto& entry : manifest.entries) {
    const auto seq = gaitrec::load_sequence(manifest, entry);
    for (const auto& cycle : gaitrec::segment_cycles(seq).cycles) {
      const auto ranked = forest.classify(gaitrec::compute_cycle_gei(seq, cycle));
      ordered_json jr;
      jr["subject_id"] = entry.subject_id;
      jr["sequence_id"] = entry.sequence_id;
      jr["ranking"] = ordered_json::array();
      for (std::size_t k = 0; k < std::min(top, ranked.size()); ++k)
        jr["ranking"].push_back({{"subject_id", ranked[k].first}, {"score", ranked[k].second}});
      results["queries"].push_back(std::move(jr));
    }
  }
  std::ofstream os(out);
  gaitrec::require(static_cast<bool>(os), "cannot write " + out);
  os << results.dump(2) << "\n";
  std::cout << "wrote rankings to " << out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& corpus, const std::string& bands_str,
                 const std::string& models_dir, std::string ae_path, std::string m1_path,
                 std::string m2_path, std::string fusion_path, std::string forest_path,
                 const std::string& ablation_band, std::size_t cmc_rank, std::uint64_t seed,
                 const std::string& out) {
  const auto resolve = [&](std::string& path, const char* name) {
    if (path.empty()) {
      gaitrec::require(!models_dir.empty(),
                       std::string("missing --") + name + " (or provide --models DIR)");
      path = (fs::path(models_dir) / (std::string(name) + ".ckpt")).string();
    }
  };
  resolve(ae_path, "ae");
  resolve(m1_path, "m1");
  resolve(m2_path, "m2");
  resolve(fusion_path, "fusion");
  resolve(forest_path, "forest");

  const auto manifest = gaitrec::read_manifest(corpus);
  const auto sequences = gaitrec::load_all_sequences(manifest);
  const auto ae = gaitrec::Autoencoder::load(ae_path);
  const auto m1 = gaitrec::LstmPredictor::load(m1_path);
  const auto m2 = gaitrec::LstmPredictor::load(m2_path);
  const auto fusion = gaitrec::FusionNetwork::load(fusion_path);
  const auto forest = gaitrec::RandomForest::load(forest_path);

  gaitrec::EvalModels models;
  models.ae = &ae;
  models.m1 = &m1;
  models.m2 = &m2;
  models.fusion = &fusion;
  models.forest = &forest;

  gaitrec::BandSweepOptions opts;
  opts.bands = parse_bands(bands_str);
  opts.seed = seed;
  opts.cmc_max_rank = cmc_rank;
  if (!ablation_band.empty()) opts.ablation_band = parse_band(ablation_band);

  auto report = gaitrec::run_band_sweep(sequences, models, opts);
  report.corpus_hash = gaitrec::to_hex(gaitrec::manifest_content_hash(manifest));
  gaitrec::emit_report(report, out);
  std::cout << "wrote evaluation to " << out << "\n";
  return 0;
}

int cmd_report(const std::string& results, const std::string& out) {
  std::ifstream is(results);
  gaitrec::require(static_cast<bool>(is), "cannot open " + results);
  ordered_json j;
  is >> j;
  gaitrec::EvaluationReport report;
  report.seed = j.at("seed").get<std::uint64_t>();
  report.corpus_hash = j.value("corpus_hash", "");
  if (j.contains("checkpoints"))
    report.checkpoints = j["checkpoints"].get<std::map<std::string, std::string>>();
  report.cmc_max_rank = j.at("cmc_max_rank").get<std::size_t>();
  for (const auto& jr : j.at("bands")) {
    gaitrec::BandRow row;
    row.band_low = jr.at("band")[0].get<double>();
    row.band_high = jr.at("band")[1].get<double>();
    row.mean_dice = jr.at("mean_dice").get<double>();
    row.rank1_accuracy = jr.at("rank1_accuracy").get<double>();
    row.cmc.accuracies = jr.at("cmc").get<std::vector<double>>();
    row.query_count = jr.at("query_count").get<std::size_t>();
    row.unreconstructable_frames = jr.at("unreconstructable_frames").get<std::size_t>();
    report.bands.push_back(std::move(row));
  }
  if (j.contains("ablation"))
    for (const auto& jr : j["ablation"])
      report.ablation.push_back(
          {jr.at("model").get<std::string>(), jr.at("mean_dice").get<double>()});
  gaitrec::emit_report(report, out);
  std::cout << "re-emitted report to " << out << "\n";
  return 0;
}

int cmd_pipeline(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_override, bool no_cache) {
  gaitrec::RunConfig config;
  if (!config_path.empty()) config = gaitrec::load_run_config(config_path);
  if (seed) config.seed = *seed;
  if (!out_override.empty()) config.out_dir = out_override;
  if (no_cache) config.cache_stages = false;
  if (const char* root = std::getenv("GAITREC_OUT_ROOT"); root && config.out_dir.is_relative())
    config.out_dir = fs::path(root) / config.out_dir;

  const auto report = gaitrec::run_pipeline(config, std::cout);
  std::cout << "pipeline complete; results under "
            << (config.out_dir / "results").generic_string() << "\n";
  for (const auto& row : report.bands)
    std::cout << "  band " << row.band_low << "-" << row.band_high << ": mean dice "
              << row.mean_dice << ", rank-1 " << row.rank1_accuracy << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gait silhouette occlusion reconstruction and identification"};
  app.require_subcommand(1);

  // synth
  std::size_t subjects = 10, cycles = 4, period = 12;
  double jitter = 0.015;
  std::uint64_t seed = 1;
  std::string out, in, band = "0.20:0.30";
  {
    auto* c = app.add_subcommand("synth", "Generate a procedural walker corpus");
    c->add_option("--subjects", subjects, "Number of subjects (>= 2)");
    c->add_option("--cycles", cycles, "Gait cycles per subject");
    c->add_option("--period", period, "Frames per cycle (>= 8)");
    c->add_option("--jitter", jitter, "Per-cycle phase/amplitude noise");
    c->add_option("--seed", seed, "RNG seed");
    c->add_option("--out", out, "Output directory")->required();
  }

  // occlude
  std::uint64_t occ_seed = 1;
  bool contiguous = false;
  {
    auto* c = app.add_subcommand("occlude", "Blacken random frames at a given degree");
    c->add_option("--in", in, "Input manifest.json")->required();
    c->add_option("--band", band, "Occlusion fraction band LOW:HIGH");
    c->add_option("--seed", occ_seed, "RNG seed");
    c->add_flag("--contiguous", contiguous, "Occlude one contiguous run instead of scattered frames");
    c->add_option("--out", out, "Output directory")->required();
  }

  // detect
  std::string detector = "heuristic", detect_out;
  {
    auto* c = app.add_subcommand("detect", "Detect occluded frames and rewrite the manifest");
    c->add_option("--in", in, "Input manifest.json")->required();
    c->add_option("--detector", detector, "heuristic or cnn:PATH");
    c->add_option("--out", detect_out, "Output manifest path")->required();
  }

  // train-detector
  std::string det_corpus, det_out;
  std::size_t det_epochs = 12;
  std::uint64_t det_seed = 1;
  {
    auto* c = app.add_subcommand("train-detector",
                                 "Train the CNN occlusion detector on a labelled corpus");
    c->add_option("--corpus", det_corpus, "Manifest with occluded_indices as labels")->required();
    c->add_option("--epochs", det_epochs, "Training epochs");
    c->add_option("--seed", det_seed, "RNG seed");
    c->add_option("--out", det_out, "Output checkpoint")->required();
  }

  // train-ae
  std::string ae_corpus, ae_out;
  std::size_t ae_epochs = 100, ae_batch = 16;
  double ae_lr = 0.001;
  std::uint64_t ae_seed = 1;
  {
    auto* c = app.add_subcommand("train-ae", "Train the convolutional autoencoder");
    c->add_option("--corpus", ae_corpus, "Training manifest")->required();
    c->add_option("--epochs", ae_epochs, "Max epochs (stops early at saturation)");
    c->add_option("--batch", ae_batch, "Batch size");
    c->add_option("--lr", ae_lr, "Adam learning rate");
    c->add_option("--seed", ae_seed, "RNG seed");
    c->add_option("--out", ae_out, "Output checkpoint")->required();
  }

  // train-lstm
  std::string lstm_direction, lstm_corpus, lstm_ae, lstm_out;
  std::size_t lstm_epochs = 30, lstm_batch = 8, lstm_hidden = 1024;
  double lstm_lr = 0.001;
  std::uint64_t lstm_seed = 1;
  {
    auto* c = app.add_subcommand("train-lstm", "Train a forward or backward embedding predictor");
    c->add_option("--direction", lstm_direction, "forward or backward")->required();
    c->add_option("--corpus", lstm_corpus, "Training manifest (clean sequences)")->required();
    c->add_option("--ae", lstm_ae, "Autoencoder checkpoint")->required();
    c->add_option("--epochs", lstm_epochs, "Epochs");
    c->add_option("--batch", lstm_batch, "Batch size");
    c->add_option("--lr", lstm_lr, "Adam learning rate");
    c->add_option("--hidden", lstm_hidden, "Hidden units per LSTM layer");
    c->add_option("--seed", lstm_seed, "RNG seed");
    c->add_option("--out", lstm_out, "Output checkpoint")->required();
  }

  // train-fusion
  std::string fu_corpus, fu_ae, fu_m1, fu_m2, fu_out;
  std::size_t fu_epochs = 10, fu_batch = 8, fu_blocks = 3, fu_width = 16;
  double fu_lr = 0.001;
  std::uint64_t fu_seed = 1;
  {
    auto* c = app.add_subcommand("train-fusion", "Train the residual fusion network");
    c->add_option("--corpus", fu_corpus, "Training manifest (clean sequences)")->required();
    c->add_option("--ae", fu_ae, "Autoencoder checkpoint")->required();
    c->add_option("--m1", fu_m1, "Forward predictor checkpoint")->required();
    c->add_option("--m2", fu_m2, "Backward predictor checkpoint")->required();
    c->add_option("--epochs", fu_epochs, "Epochs");
    c->add_option("--batch", fu_batch, "Batch size");
    c->add_option("--lr", fu_lr, "Adam learning rate");
    c->add_option("--blocks", fu_blocks, "Residual blocks");
    c->add_option("--width", fu_width, "Channel width");
    c->add_option("--seed", fu_seed, "RNG seed");
    c->add_option("--out", fu_out, "Output checkpoint")->required();
  }

  // reconstruct
  std::string re_in, re_ae, re_m1, re_m2, re_fusion, re_single, re_out;
  bool re_propagate = false;
  {
    auto* c = app.add_subcommand("reconstruct", "Reconstruct occluded frames in a corpus");
    c->add_option("--in", re_in, "Occluded manifest")->required();
    c->add_option("--ae", re_ae, "Autoencoder checkpoint")->required();
    c->add_option("--m1", re_m1, "Forward predictor checkpoint")->required();
    c->add_option("--m2", re_m2, "Backward predictor checkpoint")->required();
    c->add_option("--fusion", re_fusion, "Fusion checkpoint")->required();
    c->add_option("--single-direction", re_single, "forward or backward (ablation)");
    c->add_flag("--propagate-embeddings", re_propagate,
                "Reuse predicted embeddings as context instead of re-encoding frames");
    c->add_option("--out", re_out, "Output directory")->required();
  }

  // gei
  std::string gei_in, gei_out;
  bool gei_include_occluded = false;
  {
    auto* c = app.add_subcommand("gei", "Write per-cycle gait energy images");
    c->add_option("--in", gei_in, "Input manifest")->required();
    c->add_flag("--include-occluded", gei_include_occluded,
                "Average occluded frames as blanks instead of skipping them");
    c->add_option("--out", gei_out, "Output directory")->required();
  }

  // train-forest
  std::string rf_corpus, rf_out;
  std::size_t rf_trees = 100;
  std::uint64_t rf_seed = 1;
  {
    auto* c = app.add_subcommand("train-forest", "Train the bagged decision forest on GEIs");
    c->add_option("--corpus", rf_corpus, "Gallery manifest")->required();
    c->add_option("--trees", rf_trees, "Tree count");
    c->add_option("--seed", rf_seed, "RNG seed");
    c->add_option("--out", rf_out, "Output checkpoint")->required();
  }

  // classify
  std::string cl_forest, cl_in, cl_out;
  std::size_t cl_top = 5;
  {
    auto* c = app.add_subcommand("classify", "Rank subjects for each cycle in a corpus");
    c->add_option("--forest", cl_forest, "Forest checkpoint")->required();
    c->add_option("--in", cl_in, "Query manifest")->required();
    c->add_option("--top", cl_top, "Ranks to keep per query");
    c->add_option("--out", cl_out, "Output JSON path")->required();
  }

  // evaluate
  std::string ev_corpus, ev_bands = "0.05:0.10,0.10:0.20,0.20:0.30,0.30:0.40,0.40:0.50";
  std::string ev_models, ev_ae, ev_m1, ev_m2, ev_fusion, ev_forest, ev_ablation, ev_out;
  std::size_t ev_cmc = 5;
  std::uint64_t ev_seed = 1;
  {
    auto* c = app.add_subcommand("evaluate", "Occlusion band sweep with Dice and rank-k");
    c->add_option("--corpus", ev_corpus, "Clean ground-truth manifest")->required();
    c->add_option("--bands", ev_bands, "Comma-separated LOW:HIGH bands");
    c->add_option("--models", ev_models, "Directory holding ae/m1/m2/fusion/forest.ckpt");
    c->add_option("--ae", ev_ae, "Autoencoder checkpoint (overrides --models)");
    c->add_option("--m1", ev_m1, "Forward predictor checkpoint");
    c->add_option("--m2", ev_m2, "Backward predictor checkpoint");
    c->add_option("--fusion", ev_fusion, "Fusion checkpoint");
    c->add_option("--forest", ev_forest, "Forest checkpoint");
    c->add_option("--ablation-band", ev_ablation, "Band for the m1/m2/fused ablation");
    c->add_option("--cmc-rank", ev_cmc, "Max CMC rank");
    c->add_option("--seed", ev_seed, "RNG seed");
    c->add_option("--out", ev_out, "Output directory")->required();
  }

  // report
  std::string rp_results, rp_out;
  {
    auto* c = app.add_subcommand("report", "Re-emit tables and plots from results.json");
    c->add_option("--results", rp_results, "results.json path")->required();
    c->add_option("--out", rp_out, "Output directory")->required();
  }

  // pipeline
  std::string pl_config, pl_out;
  std::uint64_t pl_seed = 0;
  bool pl_seed_set = false, pl_no_cache = false;
  {
    auto* c = app.add_subcommand("pipeline", "Run the full train/occlude/reconstruct/evaluate flow");
    c->add_option("--config", pl_config, "JSON config file (flags override)");
    c->add_option("--seed", pl_seed, "Seed override")->trigger_on_parse();
    c->add_option("--out", pl_out, "Output directory override");
    c->add_flag("--no-cache", pl_no_cache, "Recompute every stage");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("synth"))
      return cmd_synth(subjects, cycles, period, jitter, seed, out);
    if (app.got_subcommand("occlude")) return cmd_occlude(in, band, occ_seed, contiguous, out);
    if (app.got_subcommand("detect")) return cmd_detect(in, detector, detect_out);
    if (app.got_subcommand("train-detector"))
      return cmd_train_detector(det_corpus, det_epochs, det_seed, det_out);
    if (app.got_subcommand("train-ae"))
      return cmd_train_ae(ae_corpus, ae_epochs, ae_batch, ae_lr, ae_seed, ae_out);
    if (app.got_subcommand("train-lstm"))
      return cmd_train_lstm(lstm_direction, lstm_corpus, lstm_ae, lstm_epochs, lstm_batch, lstm_lr,
                            lstm_hidden, lstm_seed, lstm_out);
    if (app.got_subcommand("train-fusion"))
      return cmd_train_fusion(fu_corpus, fu_ae, fu_m1, fu_m2, fu_epochs, fu_batch, fu_lr,
                              fu_blocks, fu_width, fu_seed, fu_out);
    if (app.got_subcommand("reconstruct"))
      return cmd_reconstruct(re_in, re_ae, re_m1, re_m2, re_fusion, re_single, re_propagate,
                             re_out);
    if (app.got_subcommand("gei")) return cmd_gei(gei_in, gei_include_occluded, gei_out);
    if (app.got_subcommand("train-forest"))
      return cmd_train_forest(rf_corpus, rf_trees, rf_seed, rf_out);
    if (app.got_subcommand("classify")) return cmd_classify(cl_forest, cl_in, cl_top, cl_out);
    if (app.got_subcommand("evaluate"))
      return cmd_evaluate(ev_corpus, ev_bands, ev_models, ev_ae, ev_m1, ev_m2, ev_fusion,
                          ev_forest, ev_ablation, ev_cmc, ev_seed, ev_out);
    if (app.got_subcommand("report")) return cmd_report(rp_results, rp_out);
    if (app.got_subcommand("pipeline")) {
      const auto* sub = app.get_subcommand("pipeline");
      pl_seed_set = sub->count("--seed") > 0;
      return cmd_pipeline(pl_config,
                          pl_seed_set ? std::optional<std::uint64_t>(pl_seed) : std::nullopt,
                          pl_out, pl_no_cache);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

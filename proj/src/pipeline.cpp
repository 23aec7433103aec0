#include "gaitrec/pipeline.hpp"

#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gaitrec/manifest.hpp"

namespace gaitrec {

using json = nlohmann::ordered_json;

namespace {

std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "hash: cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[8192];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(is.gcount()), h);
  return h;
}

// A stage is skipped when its stamp key matches and all recorded outputs
// still exist with their recorded content hashes.
class StageRunner {
 public:
  StageRunner(const RunConfig& config, std::ostream& log) : config_(config), log_(log) {}

  template <typename Fn>
  void run(const std::string& name, std::uint64_t key,
           const std::vector<std::filesystem::path>& outputs, Fn&& body) {
    const auto stamp_path = config_.out_dir / (name + ".stamp.json");
    if (config_.cache_stages && is_fresh(stamp_path, key, outputs)) {
      if (config_.verbosity > 0) log_ << "[pipeline] " << name << ": cached, skipping\n";
      return;
    }
    if (config_.verbosity > 0) log_ << "[pipeline] " << name << ": running\n";
    std::error_code ec;
    std::filesystem::remove(stamp_path, ec);  // invalidate while work is in flight
    try {
      body();
    } catch (const std::exception& e) {
      throw Error("stage " + name + ": " + e.what());
    }
    json stamp;
    stamp["key"] = to_hex(key);
    stamp["outputs"] = json::array();
    for (const auto& out : outputs) {
      require(std::filesystem::exists(out),
              "stage " + name + ": expected output missing: " + out.string());
      stamp["outputs"].push_back({{"path", std::filesystem::relative(out, config_.out_dir).generic_string()},
                                  {"hash", to_hex(file_hash(out))}});
    }
    std::ofstream os(stamp_path, std::ios::trunc);
    require(static_cast<bool>(os), "stage " + name + ": cannot write stamp");
    os << stamp.dump(2) << "\n";
  }

 private:
  bool is_fresh(const std::filesystem::path& stamp_path, std::uint64_t key,
                const std::vector<std::filesystem::path>& outputs) const {
    std::ifstream is(stamp_path);
    if (!is) return false;
    json stamp;
    try {
      is >> stamp;
    } catch (const json::exception&) {
      return false;
    }
    if (!stamp.contains("key") || stamp["key"] != to_hex(key)) return false;
    if (!stamp.contains("outputs")) return false;
    for (const auto& out : stamp["outputs"]) {
      const auto path = config_.out_dir / out.at("path").get<std::string>();
      if (!std::filesystem::exists(path)) return false;
      if (to_hex(file_hash(path)) != out.at("hash").get<std::string>()) return false;
    }
    // Recorded outputs must cover everything the stage promises now.
    for (const auto& expected : outputs) {
      const auto rel = std::filesystem::relative(expected, config_.out_dir).generic_string();
      bool found = false;
      for (const auto& out : stamp["outputs"])
        if (out.at("path").get<std::string>() == rel) found = true;
      if (!found) return false;
    }
    return true;
  }

  const RunConfig& config_;
  std::ostream& log_;
};

std::uint64_t json_hash(const json& j) { return fnv1a64(j.dump()); }

json synth_config_json(const SynthConfig& s) {
  return {{"subjects", s.subjects},
          {"cycles_per_subject", s.cycles_per_subject},
          {"period", s.period},
          {"seed", s.seed},
          {"jitter", s.jitter}};
}

// Splits one clean sequence into gallery (first k cycles) and test (rest).
struct Split {
  std::vector<GaitSequence> gallery;
  std::vector<GaitSequence> test;
};

GaitSequence slice_sequence(const GaitSequence& seq, std::size_t start_cycle,
                            std::size_t end_cycle, const std::string& suffix) {
  GaitSequence out;
  out.subject_id = seq.subject_id;
  out.sequence_id = seq.sequence_id + suffix;
  const std::size_t f0 = seq.cycle_boundaries[start_cycle].start;
  const std::size_t f1 = seq.cycle_boundaries[end_cycle - 1].end;
  out.frames.assign(seq.frames.begin() + static_cast<std::ptrdiff_t>(f0),
                    seq.frames.begin() + static_cast<std::ptrdiff_t>(f1));
  for (std::size_t c = start_cycle; c < end_cycle; ++c)
    out.cycle_boundaries.push_back(
        {seq.cycle_boundaries[c].start - f0, seq.cycle_boundaries[c].end - f0});
  return out;
}

Split split_corpus(const std::vector<GaitSequence>& corpus, std::size_t gallery_cycles) {
  Split split;
  for (const auto& seq : corpus) {
    require(seq.cycle_boundaries.size() > gallery_cycles,
            "pipeline: sequence " + seq.subject_id + "/" + seq.sequence_id + " has " +
                std::to_string(seq.cycle_boundaries.size()) +
                " cycles; need more than the " + std::to_string(gallery_cycles) +
                " gallery cycles");
    split.gallery.push_back(slice_sequence(seq, 0, gallery_cycles, "-gallery"));
    split.test.push_back(
        slice_sequence(seq, gallery_cycles, seq.cycle_boundaries.size(), "-test"));
  }
  return split;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& config_path) {
  std::ifstream is(config_path);
  require(static_cast<bool>(is), "config: cannot open " + config_path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw Error("config: invalid JSON: " + std::string(e.what()));
  }
  require(j.value("version", 0) == 1, "config: unsupported or missing version (expected 1)");

  RunConfig c;
  c.seed = j.value("seed", c.seed);
  if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("corpus")) {
    const auto& jc = j["corpus"];
    if (jc.contains("external_manifest") && !jc["external_manifest"].is_null())
      c.external_manifest = jc["external_manifest"].get<std::string>();
    c.synth.subjects = jc.value("subjects", c.synth.subjects);
    c.synth.cycles_per_subject = jc.value("cycles_per_subject", c.synth.cycles_per_subject);
    c.synth.period = jc.value("period", c.synth.period);
    c.synth.jitter = jc.value("jitter", c.synth.jitter);
  }
  c.gallery_cycles = j.value("gallery_cycles", c.gallery_cycles);
  if (j.contains("ae")) {
    c.ae.epochs = j["ae"].value("epochs", c.ae.epochs);
    c.ae.batch_size = j["ae"].value("batch_size", c.ae.batch_size);
    c.ae.learning_rate = j["ae"].value("learning_rate", c.ae.learning_rate);
    c.ae.max_frames = j["ae"].value("max_frames", c.ae.max_frames);
  }
  if (j.contains("lstm")) {
    c.lstm.epochs = j["lstm"].value("epochs", c.lstm.epochs);
    c.lstm.batch_size = j["lstm"].value("batch_size", c.lstm.batch_size);
    c.lstm.learning_rate = j["lstm"].value("learning_rate", c.lstm.learning_rate);
    c.lstm.hidden = j["lstm"].value("hidden", c.lstm.hidden);
  }
  if (j.contains("fusion")) {
    c.fusion.epochs = j["fusion"].value("epochs", c.fusion.epochs);
    c.fusion.batch_size = j["fusion"].value("batch_size", c.fusion.batch_size);
    c.fusion.learning_rate = j["fusion"].value("learning_rate", c.fusion.learning_rate);
    c.fusion.blocks = j["fusion"].value("blocks", c.fusion.blocks);
    c.fusion.width = j["fusion"].value("width", c.fusion.width);
  }
  if (j.contains("forest")) c.forest.trees = j["forest"].value("trees", c.forest.trees);
  if (j.contains("bands")) {
    c.bands.clear();
    for (const auto& jb : j["bands"]) {
      require(jb.is_array() && jb.size() == 2, "config: band must be [low, high]");
      c.bands.emplace_back(jb[0].get<double>(), jb[1].get<double>());
    }
  }
  if (j.contains("ablation_band")) {
    if (j["ablation_band"].is_null())
      c.ablation_band.reset();
    else
      c.ablation_band =
          std::make_pair(j["ablation_band"][0].get<double>(), j["ablation_band"][1].get<double>());
  }
  c.cmc_max_rank = j.value("cmc_max_rank", c.cmc_max_rank);
  c.cache_stages = j.value("cache_stages", c.cache_stages);
  c.verbosity = j.value("verbosity", c.verbosity);
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json j;
  j["version"] = 1;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir.generic_string();
  json jc = synth_config_json(c.synth);
  jc.erase("seed");  // the corpus stream derives from the top-level seed
  jc["external_manifest"] =
      c.external_manifest ? json(c.external_manifest->generic_string()) : json(nullptr);
  j["corpus"] = jc;
  j["gallery_cycles"] = c.gallery_cycles;
  j["ae"] = {{"epochs", c.ae.epochs},
             {"batch_size", c.ae.batch_size},
             {"learning_rate", c.ae.learning_rate},
             {"max_frames", c.ae.max_frames}};
  j["lstm"] = {{"epochs", c.lstm.epochs},
               {"batch_size", c.lstm.batch_size},
               {"learning_rate", c.lstm.learning_rate},
               {"hidden", c.lstm.hidden}};
  j["fusion"] = {{"epochs", c.fusion.epochs},
                 {"batch_size", c.fusion.batch_size},
                 {"learning_rate", c.fusion.learning_rate},
                 {"blocks", c.fusion.blocks},
                 {"width", c.fusion.width}};
  j["forest"] = {{"trees", c.forest.trees}};
  j["bands"] = json::array();
  for (const auto& [lo, hi] : c.bands) j["bands"].push_back({lo, hi});
  j["ablation_band"] = c.ablation_band
                           ? json({c.ablation_band->first, c.ablation_band->second})
                           : json(nullptr);
  j["cmc_max_rank"] = c.cmc_max_rank;
  j["cache_stages"] = c.cache_stages;
  j["verbosity"] = c.verbosity;
  return j;
}

EvaluationReport run_pipeline(const RunConfig& config, std::ostream& log) {
  require(!config.bands.empty(), "pipeline: no occlusion bands configured");
  std::filesystem::create_directories(config.out_dir);
  {
    std::ofstream os(config.out_dir / "config.resolved.json", std::ios::trunc);
    require(static_cast<bool>(os), "pipeline: cannot stamp resolved config");
    os << run_config_to_json(config).dump(2) << "\n";
  }

  StageRunner stages(config, log);
  const json config_json = run_config_to_json(config);

  // --- corpus ---------------------------------------------------------
  const auto corpus_dir = config.out_dir / "corpus";
  const auto corpus_manifest_path =
      config.external_manifest ? *config.external_manifest : corpus_dir / "manifest.json";
  if (!config.external_manifest) {
    json key;
    key["synth"] = synth_config_json(config.synth);
    key["seed"] = config.seed;
    stages.run("synth", json_hash(key), {corpus_manifest_path}, [&] {
      SynthConfig sc = config.synth;
      sc.seed = mix_seed(config.seed, 1);
      save_sequences(synth_corpus(sc), corpus_dir);
    });
  } else {
    require(std::filesystem::exists(corpus_manifest_path),
            "stage load-corpus: missing corpus manifest " + corpus_manifest_path.string());
  }

  const SequenceManifest manifest = read_manifest(corpus_manifest_path);
  const std::uint64_t corpus_hash = manifest_content_hash(manifest);
  const std::vector<GaitSequence> corpus = load_all_sequences(manifest);
  for (const auto& seq : corpus)
    require(seq.occluded_indices().empty(),
            "pipeline: corpus must be clean ground truth, found occluded frames in " +
                seq.subject_id + "/" + seq.sequence_id);
  const Split split = split_corpus(corpus, config.gallery_cycles);

  // --- autoencoder ------------------------------------------------------
  const auto ae_path = config.out_dir / "ae.ckpt";
  {
    json key{{"corpus", to_hex(corpus_hash)},
             {"seed", config.seed},
             {"gallery_cycles", config.gallery_cycles},
             {"ae", config_json["ae"]}};
    stages.run("train-ae", json_hash(key), {ae_path}, [&] {
      std::vector<SilhouetteFrame> frames;
      for (const auto& seq : split.gallery)
        for (const auto& f : seq.frames) frames.push_back(f);
      if (frames.size() > config.ae.max_frames) {
        // Even subsample across the gallery for pose coverage.
        std::vector<SilhouetteFrame> picked;
        const double step = static_cast<double>(frames.size()) /
                            static_cast<double>(config.ae.max_frames);
        for (std::size_t i = 0; i < config.ae.max_frames; ++i)
          picked.push_back(frames[static_cast<std::size_t>(i * step)]);
        frames = std::move(picked);
      }
      Autoencoder ae(mix_seed(config.seed, 2));
      Autoencoder::TrainConfig tc;
      tc.epochs = config.ae.epochs;
      tc.batch_size = config.ae.batch_size;
      tc.learning_rate = config.ae.learning_rate;
      tc.seed = mix_seed(config.seed, 3);
      const TrainReport tr = ae.train(frames, tc);
      if (config.verbosity > 0)
        log << "[pipeline] train-ae: " << tr.epochs_run << " epochs, mean BCE/frame "
            << (tr.epoch_loss.empty() ? 0.0 : tr.epoch_loss.back()) << "\n";
      ae.save(ae_path);
    });
  }
  const Autoencoder ae = Autoencoder::load(ae_path);

  // --- predictors -------------------------------------------------------
  const auto m1_path = config.out_dir / "m1.ckpt";
  const auto m2_path = config.out_dir / "m2.ckpt";
  const std::uint64_t ae_hash = file_hash(ae_path);
  for (const Direction dir : {Direction::forward, Direction::backward}) {
    const auto& path = dir == Direction::forward ? m1_path : m2_path;
    json key{{"corpus", to_hex(corpus_hash)},
             {"ae", to_hex(ae_hash)},
             {"seed", config.seed},
             {"direction", direction_name(dir)},
             {"lstm", config_json["lstm"]}};
    stages.run("train-" + std::string(dir == Direction::forward ? "m1" : "m2"), json_hash(key),
               {path}, [&] {
                 LstmPredictor::TrainConfig tc;
                 tc.epochs = config.lstm.epochs;
                 tc.batch_size = config.lstm.batch_size;
                 tc.learning_rate = config.lstm.learning_rate;
                 tc.seed = mix_seed(config.seed, dir == Direction::forward ? 4 : 5);
                 LstmPredictor::Config arch;
                 arch.hidden = config.lstm.hidden;
                 PredictorTrainResult result = train_predictor(dir, split.gallery, ae, tc, arch);
                 if (config.verbosity > 0)
                   log << "[pipeline] train-" << (dir == Direction::forward ? "m1" : "m2")
                       << ": final MSE " << result.report.epoch_loss.back() << "\n";
                 result.model.save(path);
               });
  }
  const LstmPredictor m1 = LstmPredictor::load(m1_path);
  const LstmPredictor m2 = LstmPredictor::load(m2_path);

  // --- fusion -----------------------------------------------------------
  const auto fusion_path = config.out_dir / "fusion.ckpt";
  {
    json key{{"corpus", to_hex(corpus_hash)},
             {"ae", to_hex(ae_hash)},
             {"m1", to_hex(file_hash(m1_path))},
             {"m2", to_hex(file_hash(m2_path))},
             {"seed", config.seed},
             {"fusion", config_json["fusion"]}};
    stages.run("train-fusion", json_hash(key), {fusion_path}, [&] {
      const auto triples = make_fusion_triples(split.gallery, ae, m1, m2);
      FusionNetwork::Config fc;
      fc.blocks = config.fusion.blocks;
      fc.width = config.fusion.width;
      FusionNetwork net(fc, mix_seed(config.seed, 6));
      FusionNetwork::TrainConfig tc;
      tc.epochs = config.fusion.epochs;
      tc.batch_size = config.fusion.batch_size;
      tc.learning_rate = config.fusion.learning_rate;
      tc.seed = mix_seed(config.seed, 7);
      const TrainReport tr = net.train(triples, tc);
      if (config.verbosity > 0)
        log << "[pipeline] train-fusion: " << triples.size() << " triples, final BCE "
            << tr.epoch_loss.back() << "\n";
      net.save(fusion_path);
    });
  }
  const FusionNetwork fusion = FusionNetwork::load(fusion_path);

  // --- recognition gallery ------------------------------------------------
  const auto forest_path = config.out_dir / "forest.ckpt";
  {
    json key{{"corpus", to_hex(corpus_hash)},
             {"seed", config.seed},
             {"gallery_cycles", config.gallery_cycles},
             {"forest", config_json["forest"]}};
    stages.run("train-forest", json_hash(key), {forest_path}, [&] {
      std::vector<std::pair<GaitEnergyImage, std::string>> examples;
      for (const auto& seq : split.gallery)
        for (const auto& cycle : seq.cycle_boundaries)
          examples.emplace_back(compute_cycle_gei(seq, cycle), seq.subject_id);
      RandomForest::Config fc;
      fc.tree_count = config.forest.trees;
      fc.seed = mix_seed(config.seed, 8);
      RandomForest::train(examples, fc).save(forest_path);
    });
  }
  const RandomForest forest = RandomForest::load(forest_path);

  // --- sweep + report -----------------------------------------------------
  const auto results_dir = config.out_dir / "results";
  {
    json key{{"corpus", to_hex(corpus_hash)},
             {"ae", to_hex(file_hash(ae_path))},
             {"m1", to_hex(file_hash(m1_path))},
             {"m2", to_hex(file_hash(m2_path))},
             {"fusion", to_hex(file_hash(fusion_path))},
             {"forest", to_hex(file_hash(forest_path))},
             {"seed", config.seed},
             {"bands", config_json["bands"]},
             {"ablation_band", config_json["ablation_band"]},
             {"cmc_max_rank", config.cmc_max_rank}};
    stages.run("evaluate", json_hash(key),
               {results_dir / "results.json", results_dir / "report.md",
                results_dir / "cmc.png", results_dir / "dice.png"},
               [&] {
                 EvalModels models;
                 models.ae = &ae;
                 models.m1 = &m1;
                 models.m2 = &m2;
                 models.fusion = &fusion;
                 models.forest = &forest;
                 BandSweepOptions opts;
                 opts.bands = config.bands;
                 opts.seed = mix_seed(config.seed, 9);
                 opts.cmc_max_rank = config.cmc_max_rank;
                 opts.ablation_band = config.ablation_band;
                 EvaluationReport report = run_band_sweep(split.test, models, opts);
                 report.corpus_hash = to_hex(corpus_hash);
                 report.checkpoints["ae"] = to_hex(file_hash(ae_path));
                 report.checkpoints["m1"] = to_hex(file_hash(m1_path));
                 report.checkpoints["m2"] = to_hex(file_hash(m2_path));
                 report.checkpoints["fusion"] = to_hex(file_hash(fusion_path));
                 report.checkpoints["forest"] = to_hex(file_hash(forest_path));
                 emit_report(report, results_dir);
               });
  }

  // Reload so cached runs return the same report object as fresh ones.
  std::ifstream is(results_dir / "results.json");
  require(static_cast<bool>(is), "pipeline: results.json missing after evaluate stage");
  json j;
  is >> j;
  EvaluationReport report;
  report.seed = j.at("seed").get<std::uint64_t>();
  report.corpus_hash = j.at("corpus_hash").get<std::string>();
  report.checkpoints = j.at("checkpoints").get<std::map<std::string, std::string>>();
  report.cmc_max_rank = j.at("cmc_max_rank").get<std::size_t>();
  for (const auto& jr : j.at("bands")) {
    BandRow row;
    row.band_low = jr.at("band")[0].get<double>();
    row.band_high = jr.at("band")[1].get<double>();
    row.mean_dice = jr.at("mean_dice").get<double>();
    row.rank1_accuracy = jr.at("rank1_accuracy").get<double>();
    row.cmc.accuracies = jr.at("cmc").get<std::vector<double>>();
    row.query_count = jr.at("query_count").get<std::size_t>();
    row.unreconstructable_frames = jr.at("unreconstructable_frames").get<std::size_t>();
    report.bands.push_back(std::move(row));
  }
  for (const auto& jr : j.at("ablation"))
    report.ablation.push_back(
        {jr.at("model").get<std::string>(), jr.at("mean_dice").get<double>()});
  return report;
}

}  // namespace gaitrec

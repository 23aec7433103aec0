#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>
#include <iosfwd>
#include <optional>

#include "gaitrec/evaluation.hpp"
#include "gaitrec/synth.hpp"

namespace gaitrec {

// Full-run configuration. The JSON config file mirrors these fields; CLI
// flags override the file. Every run stamps its resolved config into the
// output directory.
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "run";

  // Corpus: procedural walkers by default, or an externally prepared clean
  // manifest. The first `gallery_cycles` cycles of every sequence train the
  // models; the rest are held out for the occlusion sweep.
  std::optional<std::filesystem::path> external_manifest;
  SynthConfig synth;
  std::size_t gallery_cycles = 2;

  struct {
    std::size_t epochs = 40;
    std::size_t batch_size = 16;
    double learning_rate = 0.001;
    std::size_t max_frames = 120;  // AE training frames sampled from the gallery
  } ae;

  struct {
    std::size_t epochs = 18;
    std::size_t batch_size = 8;
    double learning_rate = 0.001;
    std::size_t hidden = 1024;
  } lstm;

  struct {
    std::size_t epochs = 6;
    std::size_t batch_size = 8;
    double learning_rate = 0.001;
    std::size_t blocks = 3;
    std::size_t width = 16;
  } fusion;

  struct {
    std::size_t trees = 100;
  } forest;

  std::vector<std::pair<double, double>> bands = {
      {0.05, 0.10}, {0.10, 0.20}, {0.20, 0.30}, {0.30, 0.40}, {0.40, 0.50}};
  std::optional<std::pair<double, double>> ablation_band = std::make_pair(0.20, 0.30);
  std::size_t cmc_max_rank = 5;
  bool cache_stages = true;
  int verbosity = 1;
};

RunConfig load_run_config(const std::filesystem::path& config_path);
nlohmann::ordered_json run_config_to_json(const RunConfig& config);

// synth (or load) -> train-ae -> train-lstm x2 -> train-fusion -> train-forest
// -> band sweep -> report. Stages completed by an earlier run with matching
// input hashes are skipped. Stage failures carry the stage name.
EvaluationReport run_pipeline(const RunConfig& config, std::ostream& log);

}  // namespace gaitrec

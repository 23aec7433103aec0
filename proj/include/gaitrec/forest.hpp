#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gaitrec/gait.hpp"

namespace gaitrec {

// Bagged decision forest over downsampled GEI features. Each tree trains on
// a bootstrap resample with Gini splits over a random feature subset per
// node; classification is one vote per tree.
class RandomForest {
 public:
  struct Config {
    std::size_t tree_count = 100;
    std::size_t max_features = 0;  // 0 = floor(sqrt(feature_dim))
    std::size_t min_samples_split = 2;
    std::uint64_t seed = 0;
  };

  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;   // child offsets within the tree's node array
    std::int32_t right = -1;
    std::vector<std::uint32_t> class_counts;  // populated at leaves
  };

  struct Tree {
    std::vector<Node> nodes;
  };

  static RandomForest train(const std::vector<std::pair<GaitEnergyImage, std::string>>& examples,
                            const Config& config);

  // All classes ranked by vote fraction (descending), ties broken by stable
  // class order; fractions sum to 1.
  std::vector<std::pair<std::string, double>> classify(const GaitEnergyImage& gei) const;
  std::vector<std::pair<std::string, double>> classify_features(
      const std::vector<double>& features) const;

  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t tree_count() const { return trees_.size(); }

  void save(const std::filesystem::path& path) const;
  static RandomForest load(const std::filesystem::path& path);

 private:
  std::vector<std::string> classes_;  // sorted; index is the class id
  std::size_t feature_dim_ = 0;
  std::vector<Tree> trees_;
};

}  // namespace gaitrec

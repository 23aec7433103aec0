#include "gaitrec/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gaitrec/nn/checkpoint.hpp"

namespace gaitrec {

namespace {

constexpr char kModelKind[] = "forest";

struct TreeBuilder {
  const std::vector<std::vector<double>>& features;  // per example
  const std::vector<std::size_t>& labels;            // class ids
  std::size_t n_classes;
  std::size_t max_features;
  std::size_t min_samples_split;
  Rng rng;
  std::vector<RandomForest::Node> nodes;

  static double gini(const std::vector<std::uint32_t>& counts, double total) {
    double g = 1.0;
    for (std::uint32_t c : counts) {
      const double p = static_cast<double>(c) / total;
      g -= p * p;
    }
    return g;
  }

  std::int32_t build(std::vector<std::size_t>& sample) {
    std::vector<std::uint32_t> counts(n_classes, 0);
    for (std::size_t idx : sample) counts[labels[idx]]++;
    const std::size_t n = sample.size();
    const std::size_t present =
        static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(),
                                               [](std::uint32_t c) { return c > 0; }));

    const auto make_leaf = [&]() -> std::int32_t {
      RandomForest::Node leaf;
      leaf.class_counts = counts;
      nodes.push_back(std::move(leaf));
      return static_cast<std::int32_t>(nodes.size() - 1);
    };
    if (present <= 1 || n < min_samples_split) return make_leaf();

    // Random feature subset, chosen without replacement.
    const std::size_t d = features[sample[0]].size();
    std::vector<std::size_t> feat_pool(d);
    std::iota(feat_pool.begin(), feat_pool.end(), 0);
    const std::size_t m = std::min(max_features, d);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(i, d - 1)(rng);
      std::swap(feat_pool[i], feat_pool[j]);
    }

    double best_score = gini(counts, static_cast<double>(n));
    std::int32_t best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order(sample);
    for (std::size_t fi = 0; fi < m; ++fi) {
      const std::size_t f = feat_pool[fi];
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = features[a][f], vb = features[b][f];
        return va != vb ? va < vb : a < b;
      });
      std::vector<std::uint32_t> left_counts(n_classes, 0);
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_counts[labels[order[i]]]++;
        const double v0 = features[order[i]][f];
        const double v1 = features[order[i + 1]][f];
        if (v0 == v1) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(n - i - 1);
        std::vector<std::uint32_t> right_counts(n_classes);
        for (std::size_t c = 0; c < n_classes; ++c) right_counts[c] = counts[c] - left_counts[c];
        const double score =
            (nl * gini(left_counts, nl) + nr * gini(right_counts, nr)) / static_cast<double>(n);
        if (score + 1e-12 < best_score) {
          best_score = score;
          best_feature = static_cast<std::int32_t>(f);
          best_threshold = 0.5 * (v0 + v1);
        }
      }
    }
    if (best_feature < 0) return make_leaf();

    std::vector<std::size_t> left_sample, right_sample;
    for (std::size_t idx : sample)
      (features[idx][static_cast<std::size_t>(best_feature)] <= best_threshold ? left_sample
                                                                               : right_sample)
          .push_back(idx);
    if (left_sample.empty() || right_sample.empty()) return make_leaf();

    RandomForest::Node node;
    node.feature = best_feature;
    node.threshold = best_threshold;
    nodes.push_back(std::move(node));
    const auto self = static_cast<std::int32_t>(nodes.size() - 1);
    const std::int32_t left = build(left_sample);
    const std::int32_t right = build(right_sample);
    nodes[static_cast<std::size_t>(self)].left = left;
    nodes[static_cast<std::size_t>(self)].right = right;
    return self;
  }
};

std::size_t leaf_vote(const RandomForest::Tree& tree, const std::vector<double>& x) {
  std::int32_t at = 0;
  while (tree.nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const auto& node = tree.nodes[static_cast<std::size_t>(at)];
    at = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  const auto& counts = tree.nodes[static_cast<std::size_t>(at)].class_counts;
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[best]) best = c;
  return best;
}

}  // namespace

RandomForest RandomForest::train(
    const std::vector<std::pair<GaitEnergyImage, std::string>>& examples, const Config& config) {
  require(!examples.empty(), "train_forest: empty training set");
  require(config.tree_count >= 1, "train_forest: tree_count must be >= 1");

  RandomForest forest;
  {
    std::map<std::string, std::size_t> ids;
    for (const auto& [gei, subject] : examples) ids.emplace(subject, 0);
    require(ids.size() >= 2, "train_forest: need at least two classes, got " +
                                 std::to_string(ids.size()));
    for (auto& [name, id] : ids) {
      id = forest.classes_.size();
      forest.classes_.push_back(name);
    }
    forest.feature_dim_ = kGeiFeatureDim;

    std::vector<std::vector<double>> features;
    std::vector<std::size_t> labels;
    features.reserve(examples.size());
    for (const auto& [gei, subject] : examples) {
      features.push_back(gei_feature_vector(gei));
      labels.push_back(ids[subject]);
    }

    const std::size_t m = config.max_features
                              ? config.max_features
                              : static_cast<std::size_t>(std::sqrt(static_cast<double>(
                                    forest.feature_dim_)));
    forest.trees_.resize(config.tree_count);
    for (std::size_t t = 0; t < config.tree_count; ++t) {
      TreeBuilder builder{features,
                          labels,
                          forest.classes_.size(),
                          std::max<std::size_t>(1, m),
                          config.min_samples_split,
                          Rng(mix_seed(config.seed, t)),
                          {}};
      // Bootstrap resample, n draws with replacement.
      std::vector<std::size_t> sample(examples.size());
      for (auto& idx : sample)
        idx = std::uniform_int_distribution<std::size_t>(0, examples.size() - 1)(builder.rng);
      builder.build(sample);
      forest.trees_[t].nodes = std::move(builder.nodes);
    }
  }
  return forest;
}

std::vector<std::pair<std::string, double>> RandomForest::classify_features(
    const std::vector<double>& features) const {
  require(!trees_.empty(), "classify: forest is not trained");
  require(features.size() == feature_dim_, "classify: feature vector has dimension " +
                                               std::to_string(features.size()) + ", expected " +
                                               std::to_string(feature_dim_));
  std::vector<double> votes(classes_.size(), 0.0);
  for (const auto& tree : trees_) votes[leaf_vote(tree, features)] += 1.0;

  std::vector<std::size_t> order(classes_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return votes[a] > votes[b]; });
  std::vector<std::pair<std::string, double>> ranked;
  ranked.reserve(classes_.size());
  const double inv = 1.0 / static_cast<double>(trees_.size());
  for (std::size_t c : order) ranked.emplace_back(classes_[c], votes[c] * inv);
  return ranked;
}

std::vector<std::pair<std::string, double>> RandomForest::classify(
    const GaitEnergyImage& gei) const {
  return classify_features(gei_feature_vector(gei));
}

void RandomForest::save(const std::filesystem::path& path) const {
  nlohmann::json meta;
  meta["classes"] = classes_;
  meta["feature_dim"] = feature_dim_;
  meta["tree_count"] = trees_.size();

  // Each tree as one node-array tensor: feature, threshold, left, right,
  // then per-class leaf counts.
  std::vector<nn::Tensor> storage;
  storage.reserve(trees_.size());
  const std::size_t cols = 4 + classes_.size();
  for (const auto& tree : trees_) {
    nn::Tensor t({tree.nodes.size(), cols});
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const Node& node = tree.nodes[i];
      double* row = t.data() + i * cols;
      row[0] = node.feature;
      row[1] = node.threshold;
      row[2] = node.left;
      row[3] = node.right;
      for (std::size_t c = 0; c < classes_.size(); ++c)
        row[4 + c] = node.class_counts.empty() ? 0.0 : node.class_counts[c];
    }
    storage.push_back(std::move(t));
  }
  std::vector<const nn::Tensor*> tensors;
  for (const auto& t : storage) tensors.push_back(&t);
  nn::save_checkpoint(path, kModelKind, meta, tensors);
}

RandomForest RandomForest::load(const std::filesystem::path& path) {
  nn::Checkpoint ck = nn::load_checkpoint(path, kModelKind);
  RandomForest forest;
  forest.classes_ = ck.meta.at("classes").get<std::vector<std::string>>();
  forest.feature_dim_ = ck.meta.at("feature_dim").get<std::size_t>();
  const auto tree_count = ck.meta.at("tree_count").get<std::size_t>();
  require(ck.tensors.size() == tree_count, "forest checkpoint: tree count mismatch");
  const std::size_t cols = 4 + forest.classes_.size();
  forest.trees_.resize(tree_count);
  for (std::size_t t = 0; t < tree_count; ++t) {
    const nn::Tensor& m = ck.tensors[t];
    require(m.ndim() == 2 && m.dim(1) == cols, "forest checkpoint: malformed node array");
    auto& nodes = forest.trees_[t].nodes;
    nodes.resize(m.dim(0));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double* row = m.data() + i * cols;
      nodes[i].feature = static_cast<std::int32_t>(row[0]);
      nodes[i].threshold = row[1];
      nodes[i].left = static_cast<std::int32_t>(row[2]);
      nodes[i].right = static_cast<std::int32_t>(row[3]);
      if (nodes[i].feature < 0) {
        nodes[i].class_counts.resize(forest.classes_.size());
        for (std::size_t c = 0; c < forest.classes_.size(); ++c)
          nodes[i].class_counts[c] = static_cast<std::uint32_t>(row[4 + c]);
      }
    }
  }
  return forest;
}

}  // namespace gaitrec

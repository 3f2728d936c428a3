#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "isachar/classify/matrix.hpp"
#include "isachar/rng.hpp"

namespace isachar::classify {

/// CART classification tree with Gini impurity and no depth limit. A node
/// is split while it is impure, holds at least two samples and some
/// feature is non-constant on it. Among equally good splits the lowest
/// feature index wins, then the lowest threshold.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    ClassIndex label = 0;
  };

  /// `max_features` > 0 enables per-node random feature subsets (random
  /// forest mode); `rng` must then be non-null.
  void fit(const Matrix& X, const std::vector<ClassIndex>& y, int n_classes,
           std::optional<std::vector<std::size_t>> sample_indices = std::nullopt, std::size_t max_features = 0,
           Rng* rng = nullptr) {
    n_classes_ = n_classes;
    nodes_.clear();
    std::vector<std::size_t> idx;
    if (sample_indices) {
      idx = std::move(*sample_indices);
    } else {
      idx.resize(X.size());
      std::iota(idx.begin(), idx.end(), 0);
    }

    struct Pending {
      int node;
      std::vector<std::size_t> samples;
    };
    std::vector<Pending> stack;
    nodes_.push_back({});
    stack.push_back({0, std::move(idx)});
    while (!stack.empty()) {
      Pending job = std::move(stack.back());
      stack.pop_back();
      auto counts = class_counts(y, job.samples);
      nodes_[static_cast<std::size_t>(job.node)].label = majority(counts);

      const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
      if (pure || job.samples.size() < 2) continue;

      auto split = find_split(X, y, job.samples, max_features, rng);
      if (!split) continue;

      std::vector<std::size_t> left, right;
      for (std::size_t s : job.samples) {
        (X[s][static_cast<std::size_t>(split->feature)] <= split->threshold ? left : right).push_back(s);
      }
      const int l = static_cast<int>(nodes_.size());
      nodes_.push_back({});
      const int r = static_cast<int>(nodes_.size());
      nodes_.push_back({});
      Node& node = nodes_[static_cast<std::size_t>(job.node)];
      node.feature = split->feature;
      node.threshold = split->threshold;
      node.left = l;
      node.right = r;
      stack.push_back({r, std::move(right)});
      stack.push_back({l, std::move(left)});
    }
  }

  ClassIndex predict(std::span<const double> x) const {
    std::size_t at = 0;
    while (nodes_[at].feature >= 0) {
      const Node& n = nodes_[at];
      at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes_[at].label;
  }

  const std::vector<Node>& nodes() const { return nodes_; }

  nlohmann::json to_json() const {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(), label = nlohmann::json::array();
    for (const auto& n : nodes_) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      label.push_back(n.label);
    }
    return {{"n_classes", n_classes_}, {"feature", feature}, {"threshold", threshold},
            {"left", left},           {"right", right},     {"label", label}};
  }

  static DecisionTree from_json(const nlohmann::json& j) {
    DecisionTree t;
    t.n_classes_ = j.at("n_classes").get<int>();
    auto feature = j.at("feature").get<std::vector<int>>();
    auto threshold = j.at("threshold").get<std::vector<double>>();
    auto left = j.at("left").get<std::vector<int>>();
    auto right = j.at("right").get<std::vector<int>>();
    auto label = j.at("label").get<std::vector<int>>();
    const std::size_t n = feature.size();
    if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || label.size() != n) {
      throw std::runtime_error("inconsistent tree arrays");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (feature[i] >= 0 && (left[i] <= static_cast<int>(i) || right[i] <= static_cast<int>(i) ||
                              left[i] >= static_cast<int>(n) || right[i] >= static_cast<int>(n))) {
        throw std::runtime_error("tree child index out of range");
      }
      t.nodes_.push_back({feature[i], threshold[i], left[i], right[i], label[i]});
    }
    return t;
  }

 private:
  struct Split {
    int feature;
    double threshold;
  };

  std::vector<std::size_t> class_counts(const std::vector<ClassIndex>& y,
                                        const std::vector<std::size_t>& samples) const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes_), 0);
    for (std::size_t s : samples) ++counts[static_cast<std::size_t>(y[s])];
    return counts;
  }

  static ClassIndex majority(const std::vector<std::size_t>& counts) {
    return static_cast<ClassIndex>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }

  /// Best split on one feature, written into best/best_impurity when it is
  /// strictly better. Returns false when the feature is constant.
  bool scan_feature(const Matrix& X, const std::vector<ClassIndex>& y, const std::vector<std::size_t>& samples,
                    std::size_t f, const std::vector<std::size_t>& total, std::optional<Split>& best,
                    double& best_impurity) const {
    std::vector<std::pair<double, ClassIndex>> column(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) column[i] = {X[samples[i]][f], y[samples[i]]};
    std::sort(column.begin(), column.end());
    if (column.front().first == column.back().first) return false;

    const double n = static_cast<double>(samples.size());
    std::vector<std::size_t> left(total.size(), 0);
    std::vector<std::size_t> right = total;
    double left_sq = 0.0;
    double right_sq = 0.0;
    for (std::size_t c : right) right_sq += static_cast<double>(c) * static_cast<double>(c);

    for (std::size_t i = 0; i + 1 < column.size(); ++i) {
      const auto c = static_cast<std::size_t>(column[i].second);
      left_sq += 2.0 * static_cast<double>(left[c]) + 1.0;
      right_sq -= 2.0 * static_cast<double>(right[c]) - 1.0;
      ++left[c];
      --right[c];
      if (column[i].first == column[i + 1].first) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = n - nl;
      // n * weighted Gini = nl * (1 - left_sq/nl^2) + nr * (1 - right_sq/nr^2)
      const double impurity = (nl - left_sq / nl + nr - right_sq / nr) / n;
      if (!best || impurity < best_impurity - 1e-12) {
        double threshold = 0.5 * (column[i].first + column[i + 1].first);
        if (threshold >= column[i + 1].first) threshold = column[i].first;
        best = Split{static_cast<int>(f), threshold};
        best_impurity = impurity;
      }
    }
    return true;
  }

  std::optional<Split> find_split(const Matrix& X, const std::vector<ClassIndex>& y,
                                  const std::vector<std::size_t>& samples, std::size_t max_features,
                                  Rng* rng) const {
    const std::size_t d = X.front().size();
    const auto total = class_counts(y, samples);
    std::optional<Split> best;
    double best_impurity = 0.0;

    if (max_features == 0 || max_features >= d || rng == nullptr) {
      for (std::size_t f = 0; f < d; ++f) scan_feature(X, y, samples, f, total, best, best_impurity);
      return best;
    }

    // Draw features without replacement until max_features non-constant
    // ones were examined, or continue past that while no split was found.
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    std::size_t visited = 0;
    for (std::size_t i = 0; i < d; ++i) {
      std::size_t j = i + rng->below(d - i);
      std::swap(features[i], features[j]);
      if (scan_feature(X, y, samples, features[i], total, best, best_impurity)) ++visited;
      if (visited >= max_features && best) break;
    }
    return best;
  }

  int n_classes_ = 0;
  std::vector<Node> nodes_;
};

/// Bagged CART trees, floor(sqrt(d)) candidate features per split, majority
/// vote with ties to the lowest class index.
class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(int trees, std::uint64_t seed) : n_trees_(trees), seed_(seed) {}

  void fit(const Matrix& X, const std::vector<ClassIndex>& y, int n_classes) {
    n_classes_ = n_classes;
    trees_.assign(static_cast<std::size_t>(n_trees_), {});
    const std::size_t n = X.size();
    const std::size_t d = X.front().size();
    const std::size_t max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      Rng rng(seed_, {t});
      std::vector<std::size_t> bootstrap(n);
      for (auto& b : bootstrap) b = rng.below(n);
      trees_[t].fit(X, y, n_classes, std::move(bootstrap), max_features, &rng);
    }
  }

  ClassIndex predict(std::span<const double> x) const {
    std::vector<int> votes(static_cast<std::size_t>(n_classes_), 0);
    for (const auto& t : trees_) ++votes[static_cast<std::size_t>(t.predict(x))];
    return static_cast<ClassIndex>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }

  nlohmann::json to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    return {{"n_classes", n_classes_}, {"seed", seed_}, {"trees", trees}};
  }

  static RandomForest from_json(const nlohmann::json& j) {
    RandomForest f;
    f.n_classes_ = j.at("n_classes").get<int>();
    f.seed_ = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("trees")) f.trees_.push_back(DecisionTree::from_json(t));
    f.n_trees_ = static_cast<int>(f.trees_.size());
    return f;
  }

 private:
  int n_trees_ = 100;
  std::uint64_t seed_ = 0;
  int n_classes_ = 0;
  std::vector<DecisionTree> trees_;
};

}  // namespace isachar::classify

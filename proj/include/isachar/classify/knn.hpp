#pragma once

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "isachar/classify/matrix.hpp"

namespace isachar::classify {

/// Brute-force k-nearest-neighbours with Euclidean distance.
///
/// Neighbours are ordered by (distance, training index). The vote goes to
/// the class with most neighbours; among tied classes the one owning the
/// nearest neighbour wins.
class KNearestNeighbors {
 public:
  KNearestNeighbors() = default;
  explicit KNearestNeighbors(int k) : k_(k) {}

  void fit(const Matrix& X, const std::vector<ClassIndex>& y, int n_classes) {
    X_ = X;
    y_ = y;
    n_classes_ = n_classes;
  }

  ClassIndex predict(std::span<const double> x) const {
    std::vector<std::pair<double, std::size_t>> order(X_.size());
    for (std::size_t i = 0; i < X_.size(); ++i) order[i] = {squared_distance(x, X_[i]), i};
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end());

    std::vector<int> votes(static_cast<std::size_t>(n_classes_), 0);
    for (std::size_t j = 0; j < k; ++j) ++votes[static_cast<std::size_t>(y_[order[j].second])];
    const int best = *std::max_element(votes.begin(), votes.end());
    for (std::size_t j = 0; j < k; ++j) {
      const ClassIndex c = y_[order[j].second];
      if (votes[static_cast<std::size_t>(c)] == best) return c;
    }
    return y_[order[0].second];
  }

  int k() const { return k_; }

  nlohmann::json to_json() const { return {{"k", k_}, {"n_classes", n_classes_}, {"X", X_}, {"y", y_}}; }

  static KNearestNeighbors from_json(const nlohmann::json& j) {
    KNearestNeighbors m(j.at("k").get<int>());
    m.n_classes_ = j.at("n_classes").get<int>();
    m.X_ = j.at("X").get<Matrix>();
    m.y_ = j.at("y").get<std::vector<ClassIndex>>();
    return m;
  }

 private:
  int k_ = 1;
  int n_classes_ = 0;
  Matrix X_;
  std::vector<ClassIndex> y_;
};

}  // namespace isachar::classify

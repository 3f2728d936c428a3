#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "isachar/classify/matrix.hpp"

namespace isachar::classify {

/// Gaussian naive Bayes. Every class variance is smoothed by
/// 1e-9 * (largest per-dimension variance of the training set).
class GaussianNaiveBayes {
 public:
  static constexpr double kVarSmoothing = 1e-9;

  void fit(const Matrix& X, const std::vector<ClassIndex>& y, int n_classes) {
    const std::size_t d = X.front().size();
    const auto k = static_cast<std::size_t>(n_classes);
    means_.assign(k, std::vector<double>(d, 0.0));
    vars_.assign(k, std::vector<double>(d, 0.0));
    log_priors_.assign(k, 0.0);
    std::vector<double> counts(k, 0.0);

    for (std::size_t i = 0; i < X.size(); ++i) {
      const auto c = static_cast<std::size_t>(y[i]);
      counts[c] += 1.0;
      for (std::size_t j = 0; j < d; ++j) means_[c][j] += X[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (auto& m : means_[c]) m /= counts[c];
    }
    for (std::size_t i = 0; i < X.size(); ++i) {
      const auto c = static_cast<std::size_t>(y[i]);
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = X[i][j] - means_[c][j];
        vars_[c][j] += diff * diff;
      }
    }

    double max_var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (const auto& row : X) mean += row[j];
      mean /= static_cast<double>(X.size());
      double var = 0.0;
      for (const auto& row : X) var += (row[j] - mean) * (row[j] - mean);
      max_var = std::max(max_var, var / static_cast<double>(X.size()));
    }
    const double epsilon = max_var > 0.0 ? kVarSmoothing * max_var : kVarSmoothing;

    const double n = static_cast<double>(X.size());
    for (std::size_t c = 0; c < k; ++c) {
      for (auto& v : vars_[c]) v = v / counts[c] + epsilon;
      log_priors_[c] = std::log(counts[c] / n);
    }
  }

  /// Per-class joint log-likelihood log P(c) + sum_j log N(x_j | mean, var).
  std::vector<double> joint_log_likelihood(std::span<const double> x) const {
    std::vector<double> out(log_priors_.size());
    for (std::size_t c = 0; c < log_priors_.size(); ++c) {
      double ll = log_priors_[c];
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = x[j] - means_[c][j];
        ll -= 0.5 * (std::log(2.0 * M_PI * vars_[c][j]) + diff * diff / vars_[c][j]);
      }
      out[c] = ll;
    }
    return out;
  }

  ClassIndex predict(std::span<const double> x) const {
    auto ll = joint_log_likelihood(x);
    return static_cast<ClassIndex>(std::max_element(ll.begin(), ll.end()) - ll.begin());
  }

  nlohmann::json to_json() const { return {{"log_priors", log_priors_}, {"means", means_}, {"variances", vars_}}; }

  static GaussianNaiveBayes from_json(const nlohmann::json& j) {
    GaussianNaiveBayes m;
    m.log_priors_ = j.at("log_priors").get<std::vector<double>>();
    m.means_ = j.at("means").get<Matrix>();
    m.vars_ = j.at("variances").get<Matrix>();
    return m;
  }

 private:
  std::vector<double> log_priors_;
  Matrix means_;
  Matrix vars_;
};

}  // namespace isachar::classify

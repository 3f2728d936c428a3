#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include <nlohmann/json.hpp>

#include "isachar/classify/matrix.hpp"

namespace isachar::classify {

/// L2-regularized multinomial logistic regression. C is the inverse
/// regularization strength; the minimized objective is
///
///   sum_i cross_entropy_i + ||W||^2 / (2 C)
///
/// (intercepts unpenalized), divided by n for conditioning. Optimized with
/// L-BFGS until the gradient max-norm drops to 1e-6 or 1000 iterations.
class LogisticRegression {
 public:
  static constexpr double kGradientTolerance = 1e-6;
  static constexpr int kMaxIterations = 1000;

  LogisticRegression() = default;
  explicit LogisticRegression(double C) : C_(C) {}

  void fit(const Matrix& X, const std::vector<ClassIndex>& y, int n_classes) {
    k_ = static_cast<std::size_t>(n_classes);
    d_ = X.front().size();
    std::vector<double> theta((d_ + 1) * k_, 0.0);
    std::vector<double> grad(theta.size());
    double f = objective(X, y, theta, grad);

    constexpr std::size_t kHistory = 10;
    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    iterations_ = 0;

    for (int it = 0; it < kMaxIterations; ++it) {
      if (max_abs(grad) <= kGradientTolerance) break;
      iterations_ = it + 1;

      // Two-loop recursion for the search direction.
      std::vector<double> q = grad;
      std::vector<double> alpha(s_hist.size());
      for (std::size_t m = s_hist.size(); m-- > 0;) {
        alpha[m] = rho_hist[m] * dot(s_hist[m], q);
        axpy(-alpha[m], y_hist[m], q);
      }
      if (!s_hist.empty()) {
        const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
        for (auto& v : q) v *= gamma;
      } else {
        const double norm = std::sqrt(dot(grad, grad));
        for (auto& v : q) v /= std::max(norm, 1.0);
      }
      for (std::size_t m = 0; m < s_hist.size(); ++m) {
        const double beta = rho_hist[m] * dot(y_hist[m], q);
        axpy(alpha[m] - beta, s_hist[m], q);
      }
      std::vector<double> direction(q.size());
      for (std::size_t i = 0; i < q.size(); ++i) direction[i] = -q[i];
      double slope = dot(grad, direction);
      if (slope >= 0.0) {
        // Not a descent direction: restart from steepest descent.
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        for (std::size_t i = 0; i < q.size(); ++i) direction[i] = -grad[i];
        slope = dot(grad, direction);
      }

      // Backtracking line search (Armijo).
      double step = 1.0;
      std::vector<double> next(theta.size()), next_grad(theta.size());
      double next_f = f;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        for (std::size_t i = 0; i < theta.size(); ++i) next[i] = theta[i] + step * direction[i];
        next_f = objective(X, y, next, next_grad);
        if (std::isfinite(next_f) && next_f <= f + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;

      std::vector<double> s(theta.size()), yv(theta.size());
      for (std::size_t i = 0; i < theta.size(); ++i) {
        s[i] = next[i] - theta[i];
        yv[i] = next_grad[i] - grad[i];
      }
      const double sy = dot(s, yv);
      if (sy > 1e-300) {
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(yv));
        rho_hist.push_back(1.0 / sy);
        if (s_hist.size() > kHistory) {
          s_hist.pop_front();
          y_hist.pop_front();
          rho_hist.pop_front();
        }
      }
      theta.swap(next);
      grad.swap(next_grad);
      f = next_f;
    }

    weights_.assign(k_, std::vector<double>(d_));
    intercepts_.assign(k_, 0.0);
    for (std::size_t c = 0; c < k_; ++c) {
      for (std::size_t j = 0; j < d_; ++j) weights_[c][j] = theta[c * (d_ + 1) + j];
      intercepts_[c] = theta[c * (d_ + 1) + d_];
    }
  }

  std::vector<double> decision_function(std::span<const double> x) const {
    std::vector<double> scores(k_);
    for (std::size_t c = 0; c < k_; ++c) {
      double z = intercepts_[c];
      for (std::size_t j = 0; j < d_; ++j) z += weights_[c][j] * x[j];
      scores[c] = z;
    }
    return scores;
  }

  ClassIndex predict(std::span<const double> x) const {
    auto scores = decision_function(x);
    return static_cast<ClassIndex>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  }

  double C() const { return C_; }
  int iterations() const { return iterations_; }

  nlohmann::json to_json() const {
    return {{"C", C_}, {"weights", weights_}, {"intercepts", intercepts_}, {"iterations", iterations_}};
  }

  static LogisticRegression from_json(const nlohmann::json& j) {
    LogisticRegression m(j.at("C").get<double>());
    m.weights_ = j.at("weights").get<Matrix>();
    m.intercepts_ = j.at("intercepts").get<std::vector<double>>();
    m.iterations_ = j.value("iterations", 0);
    m.k_ = m.intercepts_.size();
    m.d_ = m.weights_.empty() ? 0 : m.weights_.front().size();
    return m;
  }

 private:
  static double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
  }
  static void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
  }
  static double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }

  /// Objective value with its gradient written to `grad`. Layout of theta:
  /// class c occupies [c*(d+1), (c+1)*(d+1)), intercept last.
  double objective(const Matrix& X, const std::vector<ClassIndex>& y, const std::vector<double>& theta,
                   std::vector<double>& grad) const {
    const std::size_t stride = d_ + 1;
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    std::vector<double> z(k_);
    for (std::size_t i = 0; i < X.size(); ++i) {
      const auto& row = X[i];
      for (std::size_t c = 0; c < k_; ++c) {
        const double* w = &theta[c * stride];
        double acc = w[d_];
        for (std::size_t j = 0; j < d_; ++j) acc += w[j] * row[j];
        z[c] = acc;
      }
      const double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double v : z) sum += std::exp(v - zmax);
      const double log_norm = zmax + std::log(sum);
      loss += log_norm - z[static_cast<std::size_t>(y[i])];
      for (std::size_t c = 0; c < k_; ++c) {
        double residual = std::exp(z[c] - log_norm) - (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0);
        double* g = &grad[c * stride];
        for (std::size_t j = 0; j < d_; ++j) g[j] += residual * row[j];
        g[d_] += residual;
      }
    }
    double penalty = 0.0;
    for (std::size_t c = 0; c < k_; ++c) {
      for (std::size_t j = 0; j < d_; ++j) {
        const double w = theta[c * stride + j];
        penalty += w * w;
        grad[c * stride + j] += w / C_;
      }
    }
    const double n = static_cast<double>(X.size());
    for (auto& g : grad) g /= n;
    return (loss + 0.5 * penalty / C_) / n;
  }

  double C_ = 1.0;
  std::size_t k_ = 0;
  std::size_t d_ = 0;
  int iterations_ = 0;
  Matrix weights_;
  std::vector<double> intercepts_;
};

}  // namespace isachar::classify

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace isachar::classify {

/// Row-major sample matrix; every row is one feature vector.
using Matrix = std::vector<std::vector<double>>;

/// Class indices into a model's ordered class label list.
using ClassIndex = int;

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace isachar::classify

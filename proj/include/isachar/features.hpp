#pragma once

// Feature extractors over a binary's byte series s:
//
//   Bigrams               normalized histogram of the |s|-1 overlapping byte
//                         pairs, bin 256*s[i] + s[i+1] (65536 values)
//   EndiannessSignatures  bins 0xfffe, 0xfeff, 0x0001, 0x0100 of Bigrams
//   AutoCorrelation       (f(1), ..., f(l)) where f(k) is the Pearson
//                         correlation of s[0 .. |s|-k) against s[k .. |s|)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isachar/corpus.hpp"
#include "isachar/error.hpp"
#include "isachar/parallel.hpp"

namespace isachar {

struct FeatureVector {
  std::string feature_name;
  std::vector<double> values;
  std::optional<int> lag_param;
};

enum class FeatureKind { Bigrams, EndiannessSignatures, AutoCorrelation };

inline std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Bigrams: return "Bigrams";
    case FeatureKind::EndiannessSignatures: return "EndiannessSignatures";
    case FeatureKind::AutoCorrelation: return "AutoCorrelation";
  }
  return "Bigrams";
}

/// Short command-line name: bigrams, endsig, autocorr.
inline std::string_view short_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Bigrams: return "bigrams";
    case FeatureKind::EndiannessSignatures: return "endsig";
    case FeatureKind::AutoCorrelation: return "autocorr";
  }
  return "bigrams";
}

/// Accepts both the short and the full feature name.
inline std::optional<FeatureKind> parse_feature_kind(std::string_view s) {
  for (auto k : {FeatureKind::Bigrams, FeatureKind::EndiannessSignatures, FeatureKind::AutoCorrelation}) {
    if (s == short_name(k) || s == to_string(k)) return k;
  }
  return std::nullopt;
}

inline constexpr std::size_t kBigramBins = 65536;
inline constexpr std::array<std::uint16_t, 4> kEndiannessSignatureBigrams = {0xfffe, 0xfeff, 0x0001, 0x0100};

inline std::vector<double> bigram_histogram(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) {
    throw Error(ErrorCode::SampleTooShort, "bigrams need at least 2 bytes, got " + std::to_string(bytes.size()));
  }
  std::vector<std::uint64_t> counts(kBigramBins, 0);
  for (std::size_t i = 0; i + 1 < bytes.size(); ++i) {
    ++counts[(static_cast<std::size_t>(bytes[i]) << 8) | bytes[i + 1]];
  }
  const double total = static_cast<double>(bytes.size() - 1);
  std::vector<double> freq(kBigramBins);
  for (std::size_t b = 0; b < kBigramBins; ++b) freq[b] = static_cast<double>(counts[b]) / total;
  return freq;
}

inline FeatureVector bigram_histogram(const BinarySample& sample) {
  return {std::string(to_string(FeatureKind::Bigrams)), bigram_histogram(sample.bytes()), std::nullopt};
}

/// Same values as the four signature bins of bigram_histogram, without
/// materializing the full histogram.
inline std::vector<double> endianness_signatures(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) {
    throw Error(ErrorCode::SampleTooShort,
                "endianness signatures need at least 2 bytes, got " + std::to_string(bytes.size()));
  }
  std::array<std::uint64_t, 4> counts{};
  for (std::size_t i = 0; i + 1 < bytes.size(); ++i) {
    auto bigram = static_cast<std::uint16_t>((bytes[i] << 8) | bytes[i + 1]);
    for (std::size_t j = 0; j < 4; ++j) {
      if (bigram == kEndiannessSignatureBigrams[j]) ++counts[j];
    }
  }
  const double total = static_cast<double>(bytes.size() - 1);
  std::vector<double> out(4);
  for (std::size_t j = 0; j < 4; ++j) out[j] = static_cast<double>(counts[j]) / total;
  return out;
}

inline FeatureVector endianness_signatures(const BinarySample& sample) {
  return {std::string(to_string(FeatureKind::EndiannessSignatures)), endianness_signatures(sample.bytes()),
          std::nullopt};
}

/// Leading and trailing windows of equal length n.
struct LaggedWindowPair {
  std::vector<double> x;
  std::vector<double> y;

  std::size_t n() const { return x.size(); }

  static LaggedWindowPair from_series(std::span<const std::uint8_t> s, std::size_t k) {
    LaggedWindowPair pair;
    const std::size_t n = s.size() > k ? s.size() - k : 0;
    pair.x.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n));
    pair.y.assign(s.begin() + static_cast<std::ptrdiff_t>(k), s.end());
    return pair;
  }
};

/// Pearson correlation. Returns 0.0 when either window has zero variance.
inline double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "window lengths differ: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorCode::WindowTooShort, "need at least 2 samples per window, got " + std::to_string(n));
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<long double>(n);
  my /= static_cast<long double>(n);
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double dx = x[i] - mx;
    const long double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) return 0.0;
  const double r = static_cast<double>(sxy / std::sqrt(sxx * syy));
  return std::clamp(r, -1.0, 1.0);
}

inline double pearson_r(const LaggedWindowPair& pair) {
  return pearson_r(std::span<const double>(pair.x), std::span<const double>(pair.y));
}

namespace detail {

/// Exact integer moments of a byte series, so that every f(k) costs one
/// dot product and the zero-variance test is exact.
class ByteSeriesMoments {
 public:
  explicit ByteSeriesMoments(std::span<const std::uint8_t> s) : s_(s), sum_(s.size() + 1, 0), sq_(s.size() + 1, 0) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      sum_[i + 1] = sum_[i] + s[i];
      sq_[i + 1] = sq_[i] + static_cast<std::uint64_t>(s[i]) * s[i];
    }
  }

  double autocorr(std::size_t k) const {
    const std::size_t len = s_.size();
    const std::size_t n = len - k;
    std::uint64_t sxy = 0;
    const std::uint8_t* a = s_.data();
    const std::uint8_t* b = s_.data() + k;
    for (std::size_t i = 0; i < n; ++i) sxy += static_cast<std::uint32_t>(a[i]) * b[i];

    using wide = __int128;
    const wide nn = static_cast<wide>(n);
    const wide sx = static_cast<wide>(sum_[n]);
    const wide sy = static_cast<wide>(sum_[len] - sum_[k]);
    const wide sxx = static_cast<wide>(sq_[n]);
    const wide syy = static_cast<wide>(sq_[len] - sq_[k]);
    const wide num = nn * static_cast<wide>(sxy) - sx * sy;
    const wide vx = nn * sxx - sx * sx;
    const wide vy = nn * syy - sy * sy;
    if (vx == 0 || vy == 0) return 0.0;
    const long double r = static_cast<long double>(num) /
                          std::sqrt(static_cast<long double>(vx) * static_cast<long double>(vy));
    return std::clamp(static_cast<double>(r), -1.0, 1.0);
  }

 private:
  std::span<const std::uint8_t> s_;
  std::vector<std::uint64_t> sum_;
  std::vector<std::uint64_t> sq_;
};

}  // namespace detail

/// f(k) for 1 <= k <= |s| - 2, bytes read as unsigned 0..255.
inline double autocorr_at_lag(std::span<const std::uint8_t> s, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "lag must be >= 1");
  if (s.size() < 2 || k > s.size() - 2) {
    throw Error(ErrorCode::LagTooLarge,
                "lag " + std::to_string(k) + " needs at least " + std::to_string(k + 2) + " bytes, sample has " +
                    std::to_string(s.size()));
  }
  return detail::ByteSeriesMoments(s).autocorr(k);
}

inline double autocorr_at_lag(const BinarySample& sample, std::size_t k) { return autocorr_at_lag(sample.bytes(), k); }

inline std::vector<double> autocorrelation_feature(std::span<const std::uint8_t> s, std::size_t lag) {
  if (lag < 1) throw Error(ErrorCode::InvalidArgument, "lag parameter must be >= 1");
  if (s.size() < lag + 2) {
    throw Error(ErrorCode::SampleTooShort,
                "lag " + std::to_string(lag) + " needs at least " + std::to_string(lag + 2) + " bytes, sample has " +
                    std::to_string(s.size()));
  }
  detail::ByteSeriesMoments moments(s);
  std::vector<double> out(lag);
  for (std::size_t k = 1; k <= lag; ++k) out[k - 1] = moments.autocorr(k);
  return out;
}

inline FeatureVector autocorrelation_feature(const BinarySample& sample, int lag) {
  if (lag < 1) throw Error(ErrorCode::InvalidArgument, "lag parameter must be >= 1");
  return {std::string(to_string(FeatureKind::AutoCorrelation)),
          autocorrelation_feature(sample.bytes(), static_cast<std::size_t>(lag)), lag};
}

/// A feature extractor choice plus its parameter.
struct FeatureConfig {
  FeatureKind kind = FeatureKind::EndiannessSignatures;
  int lag = 0;  // AutoCorrelation only

  std::string name() const { return std::string(to_string(kind)); }
  std::optional<int> lag_param() const {
    return kind == FeatureKind::AutoCorrelation ? std::optional<int>(lag) : std::nullopt;
  }
  /// Smallest sample the extractor accepts.
  std::size_t min_sample_size() const {
    return kind == FeatureKind::AutoCorrelation ? static_cast<std::size_t>(lag) + 2 : 2;
  }
};

inline FeatureVector extract(const FeatureConfig& config, const BinarySample& sample) {
  switch (config.kind) {
    case FeatureKind::Bigrams: return bigram_histogram(sample);
    case FeatureKind::EndiannessSignatures: return endianness_signatures(sample);
    case FeatureKind::AutoCorrelation: return autocorrelation_feature(sample, config.lag);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown feature kind");
}

/// Element-wise mean AutoCorrelation vector per class. `class_of` returns
/// nullopt for samples that belong to no class. Sums run in manifest order.
inline std::map<std::string, std::vector<double>> mean_curve_by_class(
    const CorpusManifest& manifest, int lag,
    const std::function<std::optional<std::string>(const IsaLabel&)>& class_of, std::size_t jobs = 1) {
  std::vector<std::optional<std::string>> classes(manifest.samples.size());
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) classes[i] = class_of(manifest.label_of(i));

  std::vector<std::vector<double>> curves(manifest.samples.size());
  parallel_for(manifest.samples.size(), jobs, [&](std::size_t i) {
    if (!classes[i]) return;
    BinarySample sample = manifest.load(i);
    try {
      curves[i] = autocorrelation_feature(sample, lag).values;
    } catch (const Error& e) {
      throw e.with_stage(sample.source_path);
    }
  });

  std::map<std::string, std::vector<double>> sums;
  std::map<std::string, std::size_t> counts;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    if (!classes[i]) continue;
    auto& acc = sums[*classes[i]];
    if (acc.empty()) acc.assign(static_cast<std::size_t>(lag), 0.0);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += curves[i][k];
    ++counts[*classes[i]];
  }
  for (auto& [cls, acc] : sums) {
    const double n = static_cast<double>(counts[cls]);
    for (auto& v : acc) v /= n;
  }
  return sums;
}

/// Header row for write_feature_row: sample_path,isa,feature_name,v0,...,v{dims-1}
inline void write_feature_header(std::ostream& out, std::size_t dims) {
  out << "sample_path,isa,feature_name";
  for (std::size_t i = 0; i < dims; ++i) out << ",v" << i;
  out << '\n';
}

inline void write_feature_row(std::ostream& out, const BinarySample& sample, const FeatureVector& fv) {
  out << sample.source_path << ',' << sample.isa_name << ',' << fv.feature_name;
  char buf[32];
  for (double v : fv.values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << ',' << buf;
  }
  out << '\n';
}

}  // namespace isachar

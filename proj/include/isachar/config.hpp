#pragma once

// Flat `key = value` configuration files ('#' starts a comment line).
//
// Besides any command-line option name (without the leading dashes), two
// families of keys hold per-task defaults:
//
//   c.<task>.<feature>        LogisticRegression C
//   lag.<task>.<classifier>   AutoCorrelation lag

#include <istream>
#include <map>
#include <optional>
#include <string>

#include "isachar/error.hpp"
#include "isachar/features.hpp"
#include "isachar/labels.hpp"
#include "isachar/task.hpp"

namespace isachar {

using KeyValueConfig = std::map<std::string, std::string>;

inline KeyValueConfig parse_config(std::istream& in) {
  KeyValueConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto row = detail::trim(line);
    if (row.empty() || row.front() == '#') continue;
    auto eq = row.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    auto key = detail::trim(row.substr(0, eq));
    auto value = detail::trim(row.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(line_no) + ": empty key");
    config[std::string(key)] = std::string(value);
  }
  return config;
}

inline KeyValueConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  return parse_config(in);
}

/// Compiled-in defaults; config/defaults.conf carries the same values.
/// C values are the grid-search optima for LogisticRegression; lags are the
/// tuned lag per classifier and task.
inline const KeyValueConfig& builtin_defaults() {
  static const KeyValueConfig defaults = {
      {"c.endianness.endsig", "1e10"},  {"c.endianness.bigrams", "1e5"}, {"c.isvar.autocorr", "1"},
      {"c.fixedwidth.autocorr", "10"},

      {"lag.isvar.knn1", "256"},        {"lag.fixedwidth.knn1", "32"},   {"lag.isvar.knn3", "256"},
      {"lag.fixedwidth.knn3", "128"},   {"lag.isvar.knn5", "512"},       {"lag.fixedwidth.knn5", "512"},
      {"lag.isvar.tree", "128"},        {"lag.fixedwidth.tree", "128"},  {"lag.isvar.gnb", "32"},
      {"lag.fixedwidth.gnb", "256"},    {"lag.isvar.logreg", "128"},     {"lag.fixedwidth.logreg", "128"},
      {"lag.isvar.forest", "256"},      {"lag.fixedwidth.forest", "256"},
  };
  return defaults;
}

inline std::optional<std::string> lookup(const KeyValueConfig& config, const std::string& key) {
  if (auto it = config.find(key); it != config.end()) return it->second;
  if (auto it = builtin_defaults().find(key); it != builtin_defaults().end()) return it->second;
  return std::nullopt;
}

inline double default_c(const KeyValueConfig& config, Task task, FeatureKind feature) {
  auto v = lookup(config, "c." + std::string(to_string(task)) + "." + std::string(short_name(feature)));
  return v ? std::stod(*v) : 1.0;
}

/// Falls back to 128 for combinations without a tuned value.
inline int default_lag(const KeyValueConfig& config, Task task, const std::string& classifier) {
  auto v = lookup(config, "lag." + std::string(to_string(task)) + "." + classifier);
  if (!v && task == Task::Endianness) v = lookup(config, "lag.isvar." + classifier);
  return v ? std::stoi(*v) : 128;
}

}  // namespace isachar

#pragma once

// Serialized forms of evaluation output:
//   EvaluationReport -> JSON (full, schema_version 1) and CSV (isa,accuracy,n_test)
//   GridSearchResult -> CSV (param,accuracy)
//   mean curves      -> CSV (class,k,mean_f_k)
//   predictions      -> JSON {endianness, size_kind, fixed_bits?, per_stage_details}

#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isachar/eval.hpp"
#include "isachar/version.hpp"

namespace isachar {

inline constexpr int kReportSchemaVersion = 1;

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json to_json(const BaselineReport& b) {
  return {{"most_frequent_class", b.most_frequent_class},
          {"most_frequent_count", b.most_frequent_count},
          {"total_count", b.total_count},
          {"baseline", b.baseline},
          {"tied_classes", b.tied_classes}};
}

inline nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.per_fold) {
    folds.push_back({{"isa", f.isa_name},
                     {"true_class", f.true_class},
                     {"model_accuracy", f.model_accuracy},
                     {"correct", f.correct},
                     {"n_test", f.n_test},
                     {"confusion", f.confusion},
                     {"class_unseen_in_training", f.class_unseen_in_training}});
  }
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["library_version"] = kVersion;
  j["task"] = std::string(to_string(r.task));
  j["feature_name"] = r.feature.name();
  j["lag_param"] = r.feature.lag_param() ? nlohmann::json(*r.feature.lag_param()) : nlohmann::json(nullptr);
  j["classifier"] = classify::to_json(r.classifier);
  j["per_fold"] = folds;
  j["feature_accuracy"] = r.feature_accuracy;
  j["pooled_accuracy"] = r.pooled_accuracy;
  j["baseline"] = to_json(r.baseline);
  j["single_isa_classes"] = r.single_isa_classes;
  return j;
}

inline void write_fold_csv(std::ostream& out, const EvaluationReport& r) {
  out << "isa,accuracy,n_test\n";
  for (const auto& f : r.per_fold) out << f.isa_name << ',' << format_number(f.model_accuracy) << ',' << f.n_test << '\n';
}

inline void write_grid_csv(std::ostream& out, const GridSearchResult& g) {
  out << "param,accuracy\n";
  for (const auto& [value, acc] : g.table) out << format_number(value) << ',' << format_number(acc) << '\n';
}

inline void write_curves_csv(std::ostream& out, const std::map<std::string, std::vector<double>>& curves) {
  out << "class,k,mean_f_k\n";
  for (const auto& [cls, values] : curves) {
    for (std::size_t k = 0; k < values.size(); ++k) out << cls << ',' << (k + 1) << ',' << format_number(values[k]) << '\n';
  }
}

inline nlohmann::json to_json(const UnknownBinaryPrediction& p) {
  nlohmann::json j;
  j["endianness"] = std::string(to_string(p.endianness));
  j["size_kind"] = std::string(to_string(p.size_kind));
  if (p.fixed_bits) j["fixed_bits"] = *p.fixed_bits;
  nlohmann::json stages = nlohmann::json::object();
  for (const auto& s : p.stages) {
    stages[s.stage] = {{"label", s.label},
                       {"feature_name", s.feature_name},
                       {"lag_param", s.lag_param ? nlohmann::json(*s.lag_param) : nlohmann::json(nullptr)},
                       {"classifier", s.classifier}};
  }
  j["per_stage_details"] = stages;
  return j;
}

}  // namespace isachar

#pragma once

// Classifier suite behind one fit/predict interface, and the model file
// format:
//
//   <one line of JSON>
//   crc32 <8 lowercase hex digits of the CRC-32 of the JSON line>
//
// The JSON envelope is {format_version, spec, feature_name, lag_param,
// class_labels, dims, standardization_stats, parameters}. `parameters`
// depends on spec.kind:
//
//   knn           {k, n_classes, X: [[...]], y: [...]}
//   gnb           {log_priors: [...], means: [[...]], variances: [[...]]}
//   tree          {n_classes, feature, threshold, left, right, label}  (parallel node arrays)
//   logreg        {C, weights: [[...]], intercepts: [...], iterations}
//   forest        {n_classes, seed, trees: [<tree parameters>...]}
//   mostfrequent  {label}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "isachar/checksum.hpp"
#include "isachar/classify/decision_tree.hpp"
#include "isachar/classify/knn.hpp"
#include "isachar/classify/logistic.hpp"
#include "isachar/classify/matrix.hpp"
#include "isachar/classify/naive_bayes.hpp"
#include "isachar/error.hpp"
#include "isachar/features.hpp"

namespace isachar::classify {

enum class ClassifierKind { KNN, GaussianNB, DecisionTree, LogisticRegression, RandomForest, MostFrequent };

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::KNN;
  int k = 1;               // KNN
  double C = 1.0;          // LogisticRegression
  int trees = 100;         // RandomForest
  std::uint64_t seed = 0;  // RandomForest
  bool standardize = false;

  static ClassifierSpec knn(int k) { return {ClassifierKind::KNN, k}; }
  static ClassifierSpec gaussian_nb() { return {ClassifierKind::GaussianNB}; }
  static ClassifierSpec decision_tree() { return {ClassifierKind::DecisionTree}; }
  static ClassifierSpec logistic(double C) {
    ClassifierSpec s{ClassifierKind::LogisticRegression};
    s.C = C;
    return s;
  }
  static ClassifierSpec random_forest(int trees, std::uint64_t seed) {
    ClassifierSpec s{ClassifierKind::RandomForest};
    s.trees = trees;
    s.seed = seed;
    return s;
  }
  static ClassifierSpec most_frequent() { return {ClassifierKind::MostFrequent}; }

  /// Command-line name: knn1, knn3, knn5, gnb, tree, logreg, forest, mostfrequent.
  std::string name() const {
    switch (kind) {
      case ClassifierKind::KNN: return "knn" + std::to_string(k);
      case ClassifierKind::GaussianNB: return "gnb";
      case ClassifierKind::DecisionTree: return "tree";
      case ClassifierKind::LogisticRegression: return "logreg";
      case ClassifierKind::RandomForest: return "forest";
      case ClassifierKind::MostFrequent: return "mostfrequent";
    }
    return "knn1";
  }

  void validate() const {
    if (kind == ClassifierKind::KNN && k < 1) throw Error(ErrorCode::InvalidArgument, "KNN k must be >= 1");
    if (kind == ClassifierKind::LogisticRegression && !(C > 0.0 && std::isfinite(C))) {
      throw Error(ErrorCode::InvalidArgument, "LogisticRegression C must be positive");
    }
    if (kind == ClassifierKind::RandomForest && trees < 1) {
      throw Error(ErrorCode::InvalidArgument, "RandomForest needs at least one tree");
    }
  }

  bool operator==(const ClassifierSpec&) const = default;
};

inline const std::vector<std::string>& classifier_names() {
  static const std::vector<std::string> names = {"knn1", "knn3", "knn5", "gnb", "tree", "logreg", "forest",
                                                 "mostfrequent"};
  return names;
}

inline std::optional<ClassifierSpec> parse_classifier(std::string_view name) {
  if (name == "knn1") return ClassifierSpec::knn(1);
  if (name == "knn3") return ClassifierSpec::knn(3);
  if (name == "knn5") return ClassifierSpec::knn(5);
  if (name == "gnb") return ClassifierSpec::gaussian_nb();
  if (name == "tree") return ClassifierSpec::decision_tree();
  if (name == "logreg") return ClassifierSpec::logistic(1.0);
  if (name == "forest") return ClassifierSpec::random_forest(100, 0);
  if (name == "mostfrequent") return ClassifierSpec::most_frequent();
  return std::nullopt;
}

inline nlohmann::json to_json(const ClassifierSpec& s) {
  return {{"kind", s.name()}, {"k", s.k},       {"C", s.C},
          {"trees", s.trees}, {"seed", s.seed}, {"standardize", s.standardize}};
}

inline ClassifierSpec spec_from_json(const nlohmann::json& j) {
  auto spec = parse_classifier(j.at("kind").get<std::string>());
  if (!spec) throw std::runtime_error("unknown classifier kind");
  spec->k = j.at("k").get<int>();
  spec->C = j.at("C").get<double>();
  spec->trees = j.at("trees").get<int>();
  spec->seed = j.at("seed").get<std::uint64_t>();
  spec->standardize = j.at("standardize").get<bool>();
  return *spec;
}

/// Predicts the most frequent training class (ties: lowest class index).
class MostFrequentClass {
 public:
  void fit(const Matrix&, const std::vector<ClassIndex>& y, int n_classes) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (auto c : y) ++counts[static_cast<std::size_t>(c)];
    label_ = static_cast<ClassIndex>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }
  ClassIndex predict(std::span<const double>) const { return label_; }
  nlohmann::json to_json() const { return {{"label", label_}}; }
  static MostFrequentClass from_json(const nlohmann::json& j) {
    MostFrequentClass m;
    m.label_ = j.at("label").get<ClassIndex>();
    return m;
  }

 private:
  ClassIndex label_ = 0;
};

/// Per-dimension mean and standard deviation from training data. A zero
/// deviation is stored as 1 so constant dimensions map to 0.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(const Matrix& X) {
    const std::size_t d = X.front().size();
    Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    const double n = static_cast<double>(X.size());
    for (const auto& row : X) {
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
    }
    for (auto& m : s.mean) m /= n;
    for (const auto& row : X) {
      for (std::size_t j = 0; j < d; ++j) s.stddev[j] += (row[j] - s.mean[j]) * (row[j] - s.mean[j]);
    }
    for (auto& v : s.stddev) {
      v = std::sqrt(v / n);
      if (v == 0.0) v = 1.0;
    }
    return s;
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / stddev[j];
    return out;
  }
};

using Learner =
    std::variant<KNearestNeighbors, GaussianNaiveBayes, DecisionTree, LogisticRegression, RandomForest, MostFrequentClass>;

struct TrainedModel {
  ClassifierSpec spec;
  std::string feature_name;
  std::optional<int> lag_param;
  std::vector<std::string> class_labels;
  std::size_t dims = 0;
  std::optional<Standardizer> standardization;
  Learner learner;
};

namespace detail {

inline Learner make_learner(const ClassifierSpec& spec) {
  switch (spec.kind) {
    case ClassifierKind::KNN: return KNearestNeighbors(spec.k);
    case ClassifierKind::GaussianNB: return GaussianNaiveBayes();
    case ClassifierKind::DecisionTree: return DecisionTree();
    case ClassifierKind::LogisticRegression: return LogisticRegression(spec.C);
    case ClassifierKind::RandomForest: return RandomForest(spec.trees, spec.seed);
    case ClassifierKind::MostFrequent: return MostFrequentClass();
  }
  throw Error(ErrorCode::InvalidArgument, "unknown classifier kind");
}

}  // namespace detail

/// Fits on raw rows. Labels are ordered lexicographically into class_labels.
inline TrainedModel fit(const ClassifierSpec& spec, const Matrix& X, const std::vector<std::string>& y,
                        std::string feature_name = {}, std::optional<int> lag_param = std::nullopt) {
  spec.validate();
  if (X.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(X.size()) + " feature vectors but " + std::to_string(y.size()) + " labels");
  }
  std::set<std::string> distinct(y.begin(), y.end());
  if (distinct.size() < 2) {
    throw Error(ErrorCode::SingleClassTrainingSet,
                "training data has " + std::to_string(distinct.size()) + " distinct label(s)");
  }
  const std::size_t dims = X.front().size();
  for (const auto& row : X) {
    if (row.size() != dims) {
      throw Error(ErrorCode::DimensionMismatch,
                  "feature vectors of length " + std::to_string(dims) + " and " + std::to_string(row.size()));
    }
  }

  TrainedModel model;
  model.spec = spec;
  model.feature_name = std::move(feature_name);
  model.lag_param = lag_param;
  model.class_labels.assign(distinct.begin(), distinct.end());
  model.dims = dims;

  std::map<std::string, ClassIndex> index;
  for (std::size_t c = 0; c < model.class_labels.size(); ++c) index[model.class_labels[c]] = static_cast<ClassIndex>(c);
  std::vector<ClassIndex> targets(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) targets[i] = index.at(y[i]);

  const Matrix* train = &X;
  Matrix scaled;
  if (spec.standardize) {
    model.standardization = Standardizer::fit(X);
    scaled.reserve(X.size());
    for (const auto& row : X) scaled.push_back(model.standardization->apply(row));
    train = &scaled;
  }

  model.learner = detail::make_learner(spec);
  const int n_classes = static_cast<int>(model.class_labels.size());
  std::visit([&](auto& learner) { learner.fit(*train, targets, n_classes); }, model.learner);
  return model;
}

inline TrainedModel fit(const ClassifierSpec& spec, const std::vector<FeatureVector>& X,
                        const std::vector<std::string>& y) {
  if (X.empty()) throw Error(ErrorCode::SingleClassTrainingSet, "empty training set");
  Matrix rows;
  rows.reserve(X.size());
  for (const auto& fv : X) {
    if (fv.feature_name != X.front().feature_name || fv.lag_param != X.front().lag_param) {
      throw Error(ErrorCode::DimensionMismatch,
                  "mixed feature configurations: " + X.front().feature_name + " and " + fv.feature_name);
    }
    rows.push_back(fv.values);
  }
  return fit(spec, rows, y, X.front().feature_name, X.front().lag_param);
}

inline std::string predict_one(const TrainedModel& model, std::span<const double> x) {
  if (x.size() != model.dims) {
    throw Error(ErrorCode::DimensionMismatch,
                "model expects " + std::to_string(model.dims) + " values, got " + std::to_string(x.size()));
  }
  ClassIndex c = 0;
  if (model.standardization) {
    auto scaled = model.standardization->apply(x);
    c = std::visit([&](const auto& learner) { return learner.predict(scaled); }, model.learner);
  } else {
    c = std::visit([&](const auto& learner) { return learner.predict(x); }, model.learner);
  }
  return model.class_labels.at(static_cast<std::size_t>(c));
}

inline std::vector<std::string> predict(const TrainedModel& model, const Matrix& X) {
  std::vector<std::string> out;
  out.reserve(X.size());
  for (const auto& row : X) out.push_back(predict_one(model, row));
  return out;
}

inline std::vector<std::string> predict(const TrainedModel& model, const std::vector<FeatureVector>& X) {
  std::vector<std::string> out;
  out.reserve(X.size());
  for (const auto& fv : X) {
    if (!model.feature_name.empty() && fv.feature_name != model.feature_name) {
      throw Error(ErrorCode::DimensionMismatch,
                  "model trained on " + model.feature_name + ", got " + fv.feature_name);
    }
    out.push_back(predict_one(model, fv.values));
  }
  return out;
}

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const TrainedModel& model) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["spec"] = to_json(model.spec);
  j["feature_name"] = model.feature_name;
  j["lag_param"] = model.lag_param ? nlohmann::json(*model.lag_param) : nlohmann::json(nullptr);
  j["class_labels"] = model.class_labels;
  j["dims"] = model.dims;
  if (model.standardization) {
    j["standardization_stats"] = {{"mean", model.standardization->mean}, {"stddev", model.standardization->stddev}};
  } else {
    j["standardization_stats"] = nullptr;
  }
  j["parameters"] = std::visit([](const auto& learner) { return learner.to_json(); }, model.learner);
  return j;
}

inline std::string serialize_model(const TrainedModel& model) {
  std::string body = to_json(model).dump();
  char trailer[32];
  std::snprintf(trailer, sizeof trailer, "crc32 %08x\n", crc32_of(body));
  return body + "\n" + trailer;
}

inline TrainedModel deserialize_model(std::string_view text) {
  auto corrupt = [](const std::string& why) { return Error(ErrorCode::CorruptModelFile, why); };
  if (text.empty() || text.back() != '\n') throw corrupt("missing checksum trailer (truncated file?)");
  const auto body_end = text.rfind('\n', text.size() - 2);
  if (body_end == std::string_view::npos) throw corrupt("missing checksum trailer (truncated file?)");
  std::string_view body = text.substr(0, body_end);
  std::string_view trailer = text.substr(body_end + 1, text.size() - body_end - 2);
  unsigned stored = 0;
  if (trailer.size() != 14 || trailer.substr(0, 6) != "crc32 " ||
      std::sscanf(std::string(trailer.substr(6)).c_str(), "%8x", &stored) != 1) {
    throw corrupt("malformed checksum trailer");
  }
  if (stored != crc32_of(body)) throw corrupt("checksum mismatch");

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw corrupt("missing format_version");
  }
  const int version = j["format_version"].get<int>();
  if (version != kModelFormatVersion) {
    throw corrupt("unsupported format_version " + std::to_string(version) + " (supported: " +
                  std::to_string(kModelFormatVersion) + ")");
  }
  try {
    TrainedModel model;
    model.spec = spec_from_json(j.at("spec"));
    model.feature_name = j.at("feature_name").get<std::string>();
    if (!j.at("lag_param").is_null()) model.lag_param = j.at("lag_param").get<int>();
    model.class_labels = j.at("class_labels").get<std::vector<std::string>>();
    model.dims = j.at("dims").get<std::size_t>();
    if (!j.at("standardization_stats").is_null()) {
      const auto& s = j.at("standardization_stats");
      model.standardization =
          Standardizer{s.at("mean").get<std::vector<double>>(), s.at("stddev").get<std::vector<double>>()};
    }
    const auto& p = j.at("parameters");
    switch (model.spec.kind) {
      case ClassifierKind::KNN: model.learner = KNearestNeighbors::from_json(p); break;
      case ClassifierKind::GaussianNB: model.learner = GaussianNaiveBayes::from_json(p); break;
      case ClassifierKind::DecisionTree: model.learner = DecisionTree::from_json(p); break;
      case ClassifierKind::LogisticRegression: model.learner = LogisticRegression::from_json(p); break;
      case ClassifierKind::RandomForest: model.learner = RandomForest::from_json(p); break;
      case ClassifierKind::MostFrequent: model.learner = MostFrequentClass::from_json(p); break;
    }
    if (model.class_labels.size() < 2) throw std::runtime_error("fewer than two class labels");
    return model;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw corrupt(std::string("bad model contents: ") + e.what());
  }
}

inline void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << serialize_model(model);
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

inline TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open model " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace isachar::classify

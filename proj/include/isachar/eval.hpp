#pragma once

// Leave-one-group-out evaluation with ISAs as groups.
//
// model_accuracy   = correct / total over one held-out ISA
// feature_accuracy = unweighted mean of model_accuracy over all ISAs
// baseline         = most frequent class count / all count

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "isachar/classify/classifier.hpp"
#include "isachar/corpus.hpp"
#include "isachar/error.hpp"
#include "isachar/features.hpp"
#include "isachar/parallel.hpp"
#include "isachar/task.hpp"

namespace isachar {

using classify::ClassifierSpec;
using classify::TrainedModel;

struct LogoFold {
  std::string held_out_isa;
  std::vector<std::size_t> train;  // manifest sample indices
  std::vector<std::size_t> test;
};

struct LogoSplitPlan {
  std::vector<std::string> groups;  // sorted ISA names
  std::vector<LogoFold> folds;      // one per group, same order
};

/// One fold per ISA eligible for `task`, in sorted ISA order.
inline LogoSplitPlan plan_logocv(const CorpusManifest& manifest, Task task) {
  std::map<std::string, std::vector<std::size_t>> by_group;
  for (std::size_t i : eligible_samples(manifest, task)) by_group[manifest.samples[i].isa_name].push_back(i);
  if (by_group.size() < 2) {
    throw Error(ErrorCode::InsufficientGroups, std::string(to_string(task)) + " task needs >= 2 ISAs, found " +
                                                   std::to_string(by_group.size()));
  }
  LogoSplitPlan plan;
  for (const auto& [isa, members] : by_group) {
    plan.groups.push_back(isa);
    LogoFold fold{isa, {}, members};
    for (const auto& [other, other_members] : by_group) {
      if (other != isa) fold.train.insert(fold.train.end(), other_members.begin(), other_members.end());
    }
    std::sort(fold.train.begin(), fold.train.end());
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

/// Checks group isolation and that the test sets partition the eligible
/// samples. Returns an empty string when the plan is sound.
inline std::string check_plan(const LogoSplitPlan& plan, const CorpusManifest& manifest, Task task) {
  const auto eligible = eligible_samples(manifest, task);
  std::set<std::string> groups;
  for (std::size_t i : eligible) groups.insert(manifest.samples[i].isa_name);
  if (plan.folds.size() != groups.size() || plan.groups.size() != groups.size()) return "fold count != group count";
  if (!std::is_sorted(plan.groups.begin(), plan.groups.end())) return "groups not sorted";

  std::vector<int> seen_in_test(manifest.samples.size(), 0);
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const LogoFold& fold = plan.folds[f];
    if (fold.held_out_isa != plan.groups[f]) return "fold order differs from group order";
    for (std::size_t i : fold.test) {
      if (i >= manifest.samples.size()) return "test index out of range";
      if (manifest.samples[i].isa_name != fold.held_out_isa) return "foreign sample in test set of " + fold.held_out_isa;
      ++seen_in_test[i];
    }
    std::set<std::size_t> test_set(fold.test.begin(), fold.test.end());
    for (std::size_t i : fold.train) {
      if (i >= manifest.samples.size()) return "train index out of range";
      if (manifest.samples[i].isa_name == fold.held_out_isa) return "held-out ISA leaked into training: " + fold.held_out_isa;
      if (test_set.contains(i)) return "sample in both train and test";
      if (!task_label(manifest.label_of(i), task)) return "ineligible sample in training";
    }
    if (fold.train.size() + fold.test.size() != eligible.size()) return "fold does not cover eligible samples";
  }
  std::vector<int> expected(manifest.samples.size(), 0);
  for (std::size_t i : eligible) expected[i] = 1;
  if (seen_in_test != expected) return "test sets do not partition the eligible samples";
  return {};
}

struct BaselineReport {
  std::string most_frequent_class;
  std::size_t most_frequent_count = 0;
  std::size_t total_count = 0;
  double baseline = 0.0;
  std::vector<std::string> tied_classes;  // all classes sharing the top count
};

/// Accuracy of always predicting the most frequent class. Ties go to the
/// lexicographically smallest label; all tied labels are reported.
inline BaselineReport compute_baseline(const std::vector<std::string>& labels) {
  if (labels.empty()) throw Error(ErrorCode::EmptyLabelList, "baseline of an empty label list");
  std::map<std::string, std::size_t> counts;
  for (const auto& l : labels) ++counts[l];
  BaselineReport r;
  r.total_count = labels.size();
  for (const auto& [label, count] : counts) {
    if (count > r.most_frequent_count) {
      r.most_frequent_count = count;
      r.most_frequent_class = label;
    }
  }
  for (const auto& [label, count] : counts) {
    if (count == r.most_frequent_count) r.tied_classes.push_back(label);
  }
  r.baseline = static_cast<double>(r.most_frequent_count) / static_cast<double>(r.total_count);
  return r;
}

struct FoldResult {
  std::string isa_name;
  std::string true_class;
  std::size_t n_test = 0;
  std::size_t correct = 0;
  double model_accuracy = 0.0;
  std::map<std::string, std::map<std::string, std::size_t>> confusion;  // true -> predicted -> count
  bool class_unseen_in_training = false;
};

struct EvaluationReport {
  Task task = Task::Endianness;
  FeatureConfig feature;
  ClassifierSpec classifier;
  std::vector<FoldResult> per_fold;
  double feature_accuracy = 0.0;
  double pooled_accuracy = 0.0;
  BaselineReport baseline;
  /// Classes carried by a single ISA; under LOGOCV they never appear in training for their own fold.
  std::vector<std::string> single_isa_classes;
};

struct EvalOptions {
  std::size_t jobs = 1;
};

/// Extracted features for every eligible sample of a task, indexed like the manifest.
struct FeatureTable {
  FeatureConfig config;
  std::vector<std::optional<std::vector<double>>> rows;
  std::vector<std::optional<std::string>> labels;
};

inline FeatureTable extract_feature_table(const CorpusManifest& manifest, Task task, const FeatureConfig& config,
                                          std::size_t jobs = 1) {
  FeatureTable table{config, std::vector<std::optional<std::vector<double>>>(manifest.samples.size()),
                     std::vector<std::optional<std::string>>(manifest.samples.size())};
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) table.labels[i] = task_label(manifest.label_of(i), task);
  parallel_for(manifest.samples.size(), jobs, [&](std::size_t i) {
    if (!table.labels[i]) return;
    BinarySample sample = manifest.load(i);
    try {
      table.rows[i] = extract(config, sample).values;
    } catch (const Error& e) {
      throw e.with_stage("sample " + sample.source_path);
    }
  });
  return table;
}

/// AutoCorrelation values f(1..lag) are a prefix of f(1..max_lag), so one
/// extraction at the largest lag serves every smaller one.
inline FeatureTable truncate_lag(const FeatureTable& table, int lag) {
  FeatureTable out{table.config, {}, table.labels};
  out.config.lag = lag;
  out.rows.resize(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i]) out.rows[i] = std::vector<double>(table.rows[i]->begin(), table.rows[i]->begin() + lag);
  }
  return out;
}

inline EvaluationReport evaluate_features(const CorpusManifest& manifest, Task task, const FeatureTable& table,
                                          const ClassifierSpec& spec, const EvalOptions& options = {}) {
  spec.validate();
  const LogoSplitPlan plan = plan_logocv(manifest, task);
  if (auto problem = check_plan(plan, manifest, task); !problem.empty()) {
    throw Error(ErrorCode::InvalidArgument, "LOGOCV plan violates invariants: " + problem);
  }

  EvaluationReport report;
  report.task = task;
  report.feature = table.config;
  report.classifier = spec;
  report.per_fold.resize(plan.folds.size());

  parallel_for(plan.folds.size(), options.jobs, [&](std::size_t f) {
    const LogoFold& fold = plan.folds[f];
    classify::Matrix X;
    std::vector<std::string> y;
    X.reserve(fold.train.size());
    for (std::size_t i : fold.train) {
      X.push_back(*table.rows[i]);
      y.push_back(*table.labels[i]);
    }
    FoldResult result;
    result.isa_name = fold.held_out_isa;
    result.true_class = *table.labels[fold.test.front()];
    result.class_unseen_in_training = std::find(y.begin(), y.end(), result.true_class) == y.end();
    try {
      TrainedModel model = classify::fit(spec, X, y, table.config.name(), table.config.lag_param());
      for (std::size_t i : fold.test) {
        std::string predicted = classify::predict_one(model, *table.rows[i]);
        const std::string& truth = *table.labels[i];
        ++result.confusion[truth][predicted];
        if (predicted == truth) ++result.correct;
        ++result.n_test;
      }
    } catch (const Error& e) {
      throw e.with_stage("fold " + fold.held_out_isa);
    }
    result.model_accuracy = static_cast<double>(result.correct) / static_cast<double>(result.n_test);
    report.per_fold[f] = std::move(result);
  });

  double sum = 0.0;
  std::size_t correct = 0, total = 0;
  for (const auto& fold : report.per_fold) {
    sum += fold.model_accuracy;
    correct += fold.correct;
    total += fold.n_test;
  }
  report.feature_accuracy = sum / static_cast<double>(report.per_fold.size());
  report.pooled_accuracy = static_cast<double>(correct) / static_cast<double>(total);

  std::vector<std::string> all_labels;
  std::map<std::string, std::set<std::string>> isas_per_class;
  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    if (!table.labels[i]) continue;
    all_labels.push_back(*table.labels[i]);
    isas_per_class[*table.labels[i]].insert(manifest.samples[i].isa_name);
  }
  report.baseline = compute_baseline(all_labels);
  for (const auto& [cls, isas] : isas_per_class) {
    if (isas.size() == 1) report.single_isa_classes.push_back(cls);
  }
  return report;
}

inline EvaluationReport run_evaluation(const CorpusManifest& manifest, Task task, const FeatureConfig& feature,
                                       const ClassifierSpec& spec, const EvalOptions& options = {}) {
  plan_logocv(manifest, task);  // fail on too few groups before extracting anything
  return evaluate_features(manifest, task, extract_feature_table(manifest, task, feature, options.jobs), spec,
                           options);
}

struct GridSearchResult {
  std::string parameter;                           // "C" or "lag"
  std::vector<std::pair<double, double>> table;    // (value, feature_accuracy) in grid order
  double best = 0.0;
  double best_accuracy = 0.0;
};

namespace detail {

/// Highest accuracy wins; equal accuracies resolve to the smaller value.
inline void pick_best(GridSearchResult& r) {
  bool first = true;
  for (const auto& [value, acc] : r.table) {
    if (first || acc > r.best_accuracy || (acc == r.best_accuracy && value < r.best)) {
      r.best = value;
      r.best_accuracy = acc;
      first = false;
    }
  }
}

}  // namespace detail

/// LogisticRegression C sweep; each point is a full LOGOCV run.
inline GridSearchResult grid_search_c(const CorpusManifest& manifest, Task task, const FeatureConfig& feature,
                                      const std::vector<double>& c_grid, const EvalOptions& options = {},
                                      bool standardize = false) {
  if (c_grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty C grid");
  for (double c : c_grid) {
    if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "C values must be positive");
  }
  const FeatureTable table = extract_feature_table(manifest, task, feature, options.jobs);
  GridSearchResult result{"C", {}, 0.0, 0.0};
  for (double c : c_grid) {
    ClassifierSpec spec = ClassifierSpec::logistic(c);
    spec.standardize = standardize;
    result.table.emplace_back(c, evaluate_features(manifest, task, table, spec, options).feature_accuracy);
  }
  detail::pick_best(result);
  return result;
}

inline const std::vector<int>& default_lag_grid() {
  static const std::vector<int> grid = {16, 32, 64, 128, 256, 512, 1024};
  return grid;
}

/// AutoCorrelation lag sweep for a fixed classifier.
inline GridSearchResult grid_search_lag(const CorpusManifest& manifest, Task task, const ClassifierSpec& spec,
                                        const std::vector<int>& lag_grid, const EvalOptions& options = {}) {
  if (lag_grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty lag grid");
  int max_lag = 0;
  for (int lag : lag_grid) {
    if (lag < 1) throw Error(ErrorCode::InvalidArgument, "lags must be positive");
    max_lag = std::max(max_lag, lag);
  }
  plan_logocv(manifest, task);
  for (std::size_t i : eligible_samples(manifest, task)) {
    const std::size_t size = manifest.load(i).size();
    if (size < static_cast<std::size_t>(max_lag) + 2) {
      throw Error(ErrorCode::LagTooLarge, "lag " + std::to_string(max_lag) + " needs " + std::to_string(max_lag + 2) +
                                              " bytes but " + manifest.samples[i].source_path + " has " +
                                              std::to_string(size));
    }
  }
  const FeatureTable full =
      extract_feature_table(manifest, task, FeatureConfig{FeatureKind::AutoCorrelation, max_lag}, options.jobs);
  GridSearchResult result{"lag", {}, 0.0, 0.0};
  for (int lag : lag_grid) {
    result.table.emplace_back(lag, evaluate_features(manifest, task, truncate_lag(full, lag), spec, options)
                                       .feature_accuracy);
  }
  detail::pick_best(result);
  return result;
}

inline FeatureConfig feature_config_of(const TrainedModel& model) {
  auto kind = parse_feature_kind(model.feature_name);
  if (!kind) throw Error(ErrorCode::CorruptModelFile, "unknown feature '" + model.feature_name + "' in model");
  FeatureConfig config{*kind, model.lag_param.value_or(0)};
  if (*kind == FeatureKind::AutoCorrelation && config.lag < 1) {
    throw Error(ErrorCode::CorruptModelFile, "AutoCorrelation model without lag");
  }
  return config;
}

struct StagePrediction {
  std::string stage;
  std::string label;
  std::string feature_name;
  std::optional<int> lag_param;
  std::string classifier;
};

struct UnknownBinaryPrediction {
  Endianness endianness = Endianness::Unknown;
  SizeKind size_kind = SizeKind::Unknown;
  std::optional<int> fixed_bits;
  std::vector<StagePrediction> stages;
};

/// Endianness, then fixed/variable, then (only for fixed) the width.
/// Failures carry the stage name.
inline UnknownBinaryPrediction predict_unknown(const BinarySample& binary, const TrainedModel& endian_model,
                                               const TrainedModel& isvar_model, const TrainedModel& width_model) {
  auto run_stage = [&](const char* stage, const TrainedModel& model) {
    try {
      const FeatureConfig config = feature_config_of(model);
      FeatureVector fv = extract(config, binary);
      return StagePrediction{stage, classify::predict(model, std::vector<FeatureVector>{fv}).front(),
                             model.feature_name, model.lag_param, model.spec.name()};
    } catch (const Error& e) {
      throw e.with_stage(stage);
    }
  };

  UnknownBinaryPrediction out;
  StagePrediction endian = run_stage("endianness", endian_model);
  auto parsed = parse_endianness(endian.label);
  if (!parsed) throw Error(ErrorCode::CorruptModelFile, "unexpected label '" + endian.label + "'", "endianness");
  out.endianness = *parsed;
  out.stages.push_back(std::move(endian));

  StagePrediction isvar = run_stage("isvar", isvar_model);
  if (isvar.label == "fixed") {
    out.size_kind = SizeKind::Fixed;
  } else if (isvar.label == "variable") {
    out.size_kind = SizeKind::Variable;
  } else {
    throw Error(ErrorCode::CorruptModelFile, "unexpected label '" + isvar.label + "'", "isvar");
  }
  out.stages.push_back(std::move(isvar));

  if (out.size_kind == SizeKind::Fixed) {
    StagePrediction width = run_stage("fixedwidth", width_model);
    auto bits = detail::parse_positive_int(width.label);
    if (!bits) throw Error(ErrorCode::CorruptModelFile, "unexpected label '" + width.label + "'", "fixedwidth");
    out.fixed_bits = *bits;
    out.stages.push_back(std::move(width));
  }
  return out;
}

}  // namespace isachar

// isachar: endianness and instruction-size detection for binaries of
// unknown ISAs.
//
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "isachar/isachar.hpp"

namespace fs = std::filesystem;
using namespace isachar;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shared options.
struct GlobalOptions {
  std::string config_file;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
};

struct ExperimentOptions {
  std::string task;
  std::string feature;
  std::string classifier;
  int lag = 0;
  double c = 0.0;
  int trees = 100;
  bool standardize = false;
  std::size_t cap = 0;
  std::string corpus;
  std::string labels;
};

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

Task require_task(const std::string& name) {
  auto t = parse_task(name);
  if (!t) throw UsageError("unknown task '" + name + "' (valid: endianness, isvar, fixedwidth)");
  return *t;
}

FeatureKind require_feature(const std::string& name) {
  auto f = parse_feature_kind(name);
  if (!f) throw UsageError("unknown feature '" + name + "' (valid: bigrams, endsig, autocorr)");
  return *f;
}

ClassifierSpec require_classifier(const std::string& name) {
  auto c = classify::parse_classifier(name);
  if (!c) throw UsageError("unknown classifier '" + name + "' (valid: " + join(classify::classifier_names()) + ")");
  return *c;
}

/// Applies config-file values to every option of `app` (and its parents)
/// that was not given on the command line.
void apply_config(CLI::App* app, const KeyValueConfig& config) {
  for (CLI::App* a = app; a != nullptr; a = a->get_parent()) {
    for (CLI::Option* opt : a->get_options()) {
      if (opt->count() > 0 || opt->get_lnames().empty()) continue;
      const std::string& name = opt->get_lnames().front();
      if (name == "help" || name == "config") continue;
      auto it = config.find(name);
      if (it == config.end()) continue;
      opt->add_result(it->second);
      opt->run_callback();
    }
  }
}

/// Effective option values of a command, including its parents.
json effective_config(CLI::App* app) {
  json out = json::object();
  for (CLI::App* a = app; a != nullptr; a = a->get_parent()) {
    for (CLI::Option* opt : a->get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string& name = opt->get_lnames().front();
      if (name == "help" || out.contains(name)) continue;
      if (opt->count() > 0) {
        auto results = opt->results();
        out[name] = results.size() == 1 ? json(results.front()) : json(results);
      } else if (opt->get_expected_min() == 0) {
        out[name] = "false";
      } else if (!opt->get_default_str().empty()) {
        out[name] = opt->get_default_str();
      }
    }
  }
  return out;
}

CorpusManifest load_manifest(const ExperimentOptions& o) {
  if (o.corpus.empty() || o.labels.empty()) throw UsageError("--corpus and --labels are required");
  LabelRegistry registry = parse_label_registry(fs::path(o.labels));
  std::optional<std::size_t> cap;
  if (o.cap > 0) cap = o.cap;
  CorpusManifest manifest = scan_corpus(o.corpus, registry, cap);
  for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << '\n';
  return manifest;
}

/// Resolves feature/classifier settings, filling lag and C from the
/// configured defaults when not set.
struct ResolvedExperiment {
  Task task;
  FeatureConfig feature;
  ClassifierSpec classifier;
};

ResolvedExperiment resolve(const ExperimentOptions& o, const KeyValueConfig& config, const GlobalOptions& g,
                           bool need_feature = true) {
  ResolvedExperiment r{require_task(o.task), {}, require_classifier(o.classifier)};
  if (need_feature) {
    r.feature.kind = require_feature(o.feature);
    if (r.feature.kind == FeatureKind::AutoCorrelation) {
      r.feature.lag = o.lag > 0 ? o.lag : default_lag(config, r.task, r.classifier.name());
    }
  }
  if (o.lag < 0) throw UsageError("--lag must be positive");
  if (r.classifier.kind == classify::ClassifierKind::LogisticRegression) {
    if (o.c < 0.0) throw UsageError("--c must be positive");
    r.classifier.C = o.c > 0.0 ? o.c : default_c(config, r.task, r.feature.kind);
  }
  if (o.trees < 1) throw UsageError("--trees must be >= 1");
  r.classifier.trees = o.trees;
  r.classifier.seed = g.seed;
  r.classifier.standardize = o.standardize;
  return r;
}

void add_experiment_options(CLI::App* cmd, ExperimentOptions& o, bool with_feature, bool with_classifier) {
  cmd->add_option("--task", o.task, "endianness | isvar | fixedwidth");
  if (with_feature) cmd->add_option("--feature", o.feature, "bigrams | endsig | autocorr");
  if (with_classifier) cmd->add_option("--classifier", o.classifier, "knn1 knn3 knn5 gnb tree logreg forest mostfrequent");
  cmd->add_option("--lag", o.lag, "AutoCorrelation lag (default: tuned per classifier and task)");
  cmd->add_option("--c", o.c, "LogisticRegression C (default: tuned per task and feature)");
  cmd->add_option("--trees", o.trees, "RandomForest tree count");
  cmd->add_flag("--standardize", o.standardize, "Standardize features with training-fold statistics");
  cmd->add_option("--cap", o.cap, "At most this many files per ISA (lexicographically first)");
  cmd->add_option("--corpus", o.corpus, "Corpus root laid out as <root>/<isa>/<file>");
  cmd->add_option("--labels", o.labels, "Label CSV");
}

void write_text_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << content;
}

json provenance(CLI::App* cmd, const ExperimentOptions& o, const GlobalOptions& g) {
  json j;
  j["config"] = effective_config(cmd);
  j["seed"] = g.seed;
  j["labels_file"] = o.labels;
  j["labels_crc32"] = hex32(crc32_of_file(o.labels));
  return j;
}

// --- commands -------------------------------------------------------------

struct SynthOptions {
  std::size_t isas = 4;
  std::size_t files = 10;
  std::size_t len = 65536;
  std::string widths = "16,32,64";
  std::size_t variable = 5;
  std::string byte_order = "LE";
  std::string out;
};

int cmd_synth(const std::string& kind, const SynthOptions& o, const GlobalOptions& g) {
  if (o.out.empty()) throw UsageError("--out is required");
  CorpusManifest manifest;
  if (kind == "endian") {
    if (o.isas < 1 || o.files < 1) throw UsageError("--isas and --files must be >= 1");
    if (o.len < 1024) throw UsageError("--len must be >= 1024");
    manifest = generate_synthetic_endian({o.isas, o.files, o.len, g.seed});
  } else {
    FixedWidthSynthParams p;
    p.widths_bits.clear();
    for (const auto& w : split_list(o.widths)) {
      auto v = detail::parse_positive_int(w);
      if (!v || *v % 8 != 0) throw UsageError("--widths must be positive multiples of 8");
      p.widths_bits.push_back(*v);
    }
    auto order = parse_endianness(o.byte_order);
    if (!order || (*order != Endianness::LittleEndian && *order != Endianness::BigEndian)) {
      throw UsageError("--byte-order must be LE or BE");
    }
    if (o.files < 1) throw UsageError("--files must be >= 1");
    p.isas_per_width = o.isas;
    p.files_per_isa = o.files;
    p.file_len = o.len;
    p.variable_isas = o.variable;
    p.seed = g.seed;
    p.byte_order = *order;
    int max_width = 8;
    for (int w : p.widths_bits) max_width = std::max(max_width, w);
    if (p.file_len < 64 * static_cast<std::size_t>(max_width / 8)) {
      throw UsageError("--len must hold at least 64 instructions of the widest width");
    }
    manifest = generate_synthetic_fixedwidth(p);
  }
  write_corpus(manifest, o.out);
  auto counts = manifest.counts_per_isa();
  std::cout << "wrote " << manifest.samples.size() << " files for " << counts.size() << " ISAs to " << o.out << '\n';
  for (const auto& [isa, n] : counts) {
    const auto& label = manifest.registry.at(isa);
    std::cout << "  " << isa << ": " << n << " files, " << to_string(label.endianness) << ", "
              << to_string(label.inst_size.kind);
    if (label.inst_size.fixed_bits) std::cout << ' ' << *label.inst_size.fixed_bits;
    std::cout << '\n';
  }
  std::cout << "labels: " << (fs::path(o.out) / "labels.csv").string() << '\n';
  return kExitOk;
}

int cmd_evaluate(CLI::App* cmd, const ExperimentOptions& o, const std::string& report_path, const std::string& csv_path,
                 const KeyValueConfig& config, const GlobalOptions& g) {
  if (o.task.empty() || o.feature.empty() || o.classifier.empty()) {
    throw UsageError("--task, --feature and --classifier are required");
  }
  if (report_path.empty()) throw UsageError("--report is required");
  ResolvedExperiment r = resolve(o, config, g);
  CorpusManifest manifest = load_manifest(o);
  EvaluationReport report = run_evaluation(manifest, r.task, r.feature, r.classifier, {g.jobs});

  json j = to_json(report);
  j["provenance"] = provenance(cmd, o, g);
  write_text_file(report_path, j.dump(2) + "\n");
  std::ostringstream csv;
  write_fold_csv(csv, report);
  fs::path csv_out = csv_path.empty() ? fs::path(report_path).replace_extension(".csv") : fs::path(csv_path);
  write_text_file(csv_out, csv.str());

  std::cout << "task=" << to_string(r.task) << " feature=" << r.feature.name();
  if (r.feature.lag_param()) std::cout << " lag=" << r.feature.lag;
  std::cout << " classifier=" << r.classifier.name() << '\n';
  for (const auto& f : report.per_fold) {
    std::cout << "  " << f.isa_name << " (" << f.true_class << "): " << f.correct << '/' << f.n_test << " = "
              << format_number(f.model_accuracy) << (f.class_unseen_in_training ? "  [class unseen in training]" : "")
              << '\n';
  }
  std::cout << "feature_accuracy=" << format_number(report.feature_accuracy) << '\n';
  std::cout << "pooled_accuracy=" << format_number(report.pooled_accuracy) << '\n';
  std::cout << "baseline=" << format_number(report.baseline.baseline) << " (" << report.baseline.most_frequent_class
            << ' ' << report.baseline.most_frequent_count << '/' << report.baseline.total_count << ")\n";
  if (!report.single_isa_classes.empty()) {
    std::cout << "note: classes represented by a single ISA cannot be learned under LOGOCV: "
              << join(report.single_isa_classes) << '\n';
  }
  return kExitOk;
}

std::vector<double> default_c_grid(Task task, FeatureKind feature) {
  int lo = 1, hi = 11;
  if (task == Task::Endianness && feature == FeatureKind::Bigrams) hi = 10;
  if (task == Task::FixedVsVariable) lo = -1, hi = 6;
  if (task == Task::FixedWidth) lo = -7, hi = 7;
  std::vector<double> grid;
  for (int e = lo; e <= hi; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

int cmd_gridsearch(CLI::App* cmd, const std::string& which, const ExperimentOptions& o, const std::string& grid_arg,
                   const std::string& out_path, const KeyValueConfig& config, const GlobalOptions& g) {
  if (o.task.empty()) throw UsageError("--task is required");
  Task task = require_task(o.task);
  GridSearchResult result;
  if (which == "c") {
    if (o.feature.empty()) throw UsageError("--feature is required");
    FeatureConfig feature{require_feature(o.feature), 0};
    if (feature.kind == FeatureKind::AutoCorrelation) {
      feature.lag = o.lag > 0 ? o.lag : default_lag(config, task, "logreg");
    }
    std::vector<double> grid;
    if (grid_arg.empty()) {
      grid = default_c_grid(task, feature.kind);
    } else {
      for (const auto& item : split_list(grid_arg)) {
        double v = 0.0;
        try {
          v = std::stod(item);
        } catch (const std::exception&) {
          throw UsageError("--grid: '" + item + "' is not a number");
        }
        if (!(v > 0.0) || !std::isfinite(v)) throw UsageError("--grid: C values must be positive");
        grid.push_back(v);
      }
    }
    if (grid.empty()) throw UsageError("--grid is empty");
    CorpusManifest manifest = load_manifest(o);
    result = grid_search_c(manifest, task, feature, grid, {g.jobs}, o.standardize);
  } else {
    if (o.classifier.empty()) throw UsageError("--classifier is required");
    ExperimentOptions fixed = o;
    fixed.feature = "autocorr";
    ResolvedExperiment r = resolve(fixed, config, g, false);
    std::vector<int> grid;
    if (grid_arg.empty()) {
      grid = default_lag_grid();
    } else {
      for (const auto& item : split_list(grid_arg)) {
        auto v = detail::parse_positive_int(item);
        if (!v) throw UsageError("--grid: lags must be positive integers");
        grid.push_back(*v);
      }
    }
    if (grid.empty()) throw UsageError("--grid is empty");
    if (r.classifier.kind == classify::ClassifierKind::LogisticRegression && o.c <= 0.0) {
      r.classifier.C = default_c(config, task, FeatureKind::AutoCorrelation);
    }
    CorpusManifest manifest = load_manifest(o);
    result = grid_search_lag(manifest, task, r.classifier, grid, {g.jobs});
  }

  std::ostringstream csv;
  write_grid_csv(csv, result);
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    write_text_file(out_path, csv.str());
    json meta = provenance(cmd, o, g);
    meta["best"] = result.best;
    meta["best_accuracy"] = result.best_accuracy;
    write_text_file(fs::path(out_path).replace_extension(".json"), meta.dump(2) + "\n");
  }
  std::cout << "# best " << result.parameter << '=' << format_number(result.best)
            << " feature_accuracy=" << format_number(result.best_accuracy) << '\n';
  return kExitOk;
}

int cmd_train(CLI::App* cmd, const ExperimentOptions& o, const std::string& out_path, const KeyValueConfig& config,
              const GlobalOptions& g) {
  if (o.task.empty() || o.feature.empty() || o.classifier.empty()) {
    throw UsageError("--task, --feature and --classifier are required");
  }
  if (out_path.empty()) throw UsageError("--out is required");
  ResolvedExperiment r = resolve(o, config, g);
  CorpusManifest manifest = load_manifest(o);
  FeatureTable table = extract_feature_table(manifest, r.task, r.feature, g.jobs);
  classify::Matrix X;
  std::vector<std::string> y;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (!table.rows[i]) continue;
    X.push_back(*table.rows[i]);
    y.push_back(*table.labels[i]);
  }
  if (X.empty()) throw Error(ErrorCode::EmptyCorpus, "no samples eligible for task " + o.task);
  TrainedModel model = classify::fit(r.classifier, X, y, r.feature.name(), r.feature.lag_param());
  classify::save_model(model, out_path);
  (void)cmd;
  std::cout << "trained " << r.classifier.name() << " on " << X.size() << " samples (" << to_string(r.task) << ", "
            << r.feature.name();
  if (r.feature.lag_param()) std::cout << " lag " << r.feature.lag;
  std::cout << ") classes: " << join(model.class_labels) << "\nwrote " << out_path << '\n';
  return kExitOk;
}

int cmd_predict(const std::string& endian_path, const std::string& isvar_path, const std::string& width_path,
                const std::string& binary_path) {
  if (endian_path.empty() || isvar_path.empty() || width_path.empty()) {
    throw UsageError("--endian-model, --isvar-model and --width-model are required");
  }
  if (binary_path.empty()) throw UsageError("a binary file to classify is required");
  auto load = [](const std::string& path, const char* stage) {
    try {
      return classify::load_model(path);
    } catch (const Error& e) {
      throw e.with_stage(stage);
    }
  };
  TrainedModel endian = load(endian_path, "endianness");
  TrainedModel isvar = load(isvar_path, "isvar");
  TrainedModel width = load(width_path, "fixedwidth");
  BinarySample sample(read_file_bytes(binary_path), "", binary_path);
  UnknownBinaryPrediction p = predict_unknown(sample, endian, isvar, width);
  std::cout << to_json(p).dump() << '\n';
  return kExitOk;
}

int cmd_export_curves(const ExperimentOptions& o, const std::string& group, const std::string& out_path,
                      const GlobalOptions& g) {
  if (o.lag <= 0) throw UsageError("--lag is required and must be positive");
  std::function<std::optional<std::string>(const IsaLabel&)> class_of;
  if (group == "size-kind") {
    class_of = [](const IsaLabel& l) { return task_label(l, Task::FixedVsVariable); };
  } else if (group == "fixed-bits") {
    class_of = [](const IsaLabel& l) { return task_label(l, Task::FixedWidth); };
  } else {
    throw UsageError("--group must be size-kind or fixed-bits");
  }
  CorpusManifest manifest = load_manifest(o);
  auto curves = mean_curve_by_class(manifest, o.lag, class_of, g.jobs);
  std::ostringstream csv;
  write_curves_csv(csv, curves);
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    write_text_file(out_path, csv.str());
    std::cerr << "wrote " << curves.size() << " classes x " << o.lag << " lags to " << out_path << '\n';
  }
  return kExitOk;
}

int cmd_features(const ExperimentOptions& o, const std::string& out_path, const GlobalOptions& g) {
  if (o.feature.empty()) throw UsageError("--feature is required");
  FeatureConfig config{require_feature(o.feature), o.lag};
  if (config.kind == FeatureKind::AutoCorrelation && o.lag <= 0) throw UsageError("--lag is required for autocorr");
  CorpusManifest manifest = load_manifest(o);
  std::vector<FeatureVector> rows(manifest.samples.size());
  parallel_for(rows.size(), g.jobs, [&](std::size_t i) {
    try {
      rows[i] = extract(config, manifest.load(i));
    } catch (const Error& e) {
      throw e.with_stage("sample " + manifest.samples[i].source_path);
    }
  });
  std::ostringstream csv;
  write_feature_header(csv, rows.empty() ? 0 : rows.front().values.size());
  for (std::size_t i = 0; i < rows.size(); ++i) write_feature_row(csv, manifest.load(i), rows[i]);
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    write_text_file(out_path, csv.str());
  }
  return kExitOk;
}

int cmd_stats(const std::string& labels_path, const std::string& corpus, bool as_json) {
  if (labels_path.empty()) throw UsageError("--labels is required");
  LabelRegistry registry = parse_label_registry(fs::path(labels_path));
  if (registry.empty()) throw Error(ErrorCode::EmptyLabelList, "label file has no ISAs: " + labels_path);

  // Per-ISA file counts: one file per ISA unless a corpus is given.
  std::map<std::string, std::size_t> files;
  if (!corpus.empty()) {
    files = scan_corpus(corpus, registry).counts_per_isa();
  } else {
    for (const auto& [isa, _] : registry) files[isa] = 1;
  }

  json out;
  out["labels_crc32"] = hex32(crc32_of_file(labels_path));
  std::ostringstream text;
  text << "ISA feature counts (isas / files)\n";
  for (Task task : {Task::Endianness, Task::FixedVsVariable, Task::FixedWidth}) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
    std::vector<std::string> per_file_labels;
    for (const auto& [isa, label] : registry) {
      auto cls = task_label(label, task);
      auto it = files.find(isa);
      if (!cls || it == files.end() || it->second == 0) continue;
      counts[*cls].first += 1;
      counts[*cls].second += it->second;
      per_file_labels.insert(per_file_labels.end(), it->second, *cls);
    }
    json task_json;
    std::size_t isas = 0, total = 0;
    for (const auto& [cls, c] : counts) {
      text << "  " << to_string(task) << ' ' << cls << ": " << c.first << " / " << c.second << '\n';
      task_json["classes"][cls] = {{"isas", c.first}, {"files", c.second}};
      isas += c.first;
      total += c.second;
    }
    text << "  " << to_string(task) << " total: " << isas << " / " << total << '\n';
    task_json["total_isas"] = isas;
    task_json["total_files"] = total;
    if (!per_file_labels.empty()) task_json["baseline"] = to_json(compute_baseline(per_file_labels));
    out["tasks"][std::string(to_string(task))] = task_json;
  }
  text << "Baselines\n";
  for (Task task : {Task::Endianness, Task::FixedVsVariable, Task::FixedWidth}) {
    const auto& t = out["tasks"][std::string(to_string(task))];
    if (!t.contains("baseline")) {
      text << "  " << to_string(task) << ": no eligible ISAs\n";
      continue;
    }
    const auto& b = t["baseline"];
    char value[16];
    std::snprintf(value, sizeof value, "%.3f", b["baseline"].get<double>());
    text << "  " << to_string(task) << ": " << b["most_frequent_class"].get<std::string>() << ' '
         << b["most_frequent_count"].get<std::size_t>() << '/' << b["total_count"].get<std::size_t>() << " = " << value
         << '\n';
  }
  if (as_json) {
    std::cout << out.dump(2) << '\n';
  } else {
    std::cout << text.str();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"isachar: endianness and instruction-size detection for binaries of unknown ISAs"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();

  GlobalOptions g;
  app.add_option("--config", g.config_file, "key = value file supplying option defaults");
  app.add_option("--jobs", g.jobs, "Worker threads for extraction and folds (0 = all cores)");
  app.add_option("--seed", g.seed, "Seed for synthetic corpora and RandomForest");
  app.set_version_flag("--version", std::string(kVersion));

  // synth
  SynthOptions synth_e, synth_f;
  synth_f.isas = 3;
  synth_f.len = 32768;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
  synth_cmd->require_subcommand(1);
  CLI::App* synth_endian = synth_cmd->add_subcommand("endian", "LE/BE corpus of small integers and filler");
  CLI::App* synth_fixed = synth_cmd->add_subcommand("fixedwidth", "Fixed-width and variable-length instruction streams");
  for (auto [c, o] : {std::pair{synth_endian, &synth_e}, std::pair{synth_fixed, &synth_f}}) {
    c->add_option("--isas", o->isas, "ISAs per class (endian) or per width (fixedwidth)");
    c->add_option("--files", o->files, "Files per ISA");
    c->add_option("--len", o->len, "File length in bytes");
    c->add_option("--out", o->out, "Output directory");
  }
  synth_fixed->add_option("--widths", synth_f.widths, "Comma-separated instruction widths in bits");
  synth_fixed->add_option("--variable", synth_f.variable, "Number of variable-length ISAs");
  synth_fixed->add_option("--byte-order", synth_f.byte_order, "Immediate byte order: LE or BE");

  // evaluate
  ExperimentOptions eval_opts;
  std::string report_path, csv_path;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "LOGOCV evaluation of one feature/classifier pair");
  add_experiment_options(eval_cmd, eval_opts, true, true);
  eval_cmd->add_option("--report", report_path, "JSON report path");
  eval_cmd->add_option("--csv", csv_path, "Per-fold CSV path (default: report path with .csv)");

  // gridsearch
  ExperimentOptions grid_opts;
  std::string grid_arg, grid_out;
  CLI::App* grid_cmd = app.add_subcommand("gridsearch", "Sweep LogisticRegression C or the AutoCorrelation lag");
  grid_cmd->require_subcommand(1);
  CLI::App* grid_c = grid_cmd->add_subcommand("c", "Powers-of-ten sweep of C");
  CLI::App* grid_lag = grid_cmd->add_subcommand("lag", "Sweep of the AutoCorrelation lag (default 16..1024)");
  add_experiment_options(grid_c, grid_opts, true, false);
  add_experiment_options(grid_lag, grid_opts, false, true);
  for (CLI::App* c : {grid_c, grid_lag}) {
    c->add_option("--grid", grid_arg, "Comma-separated grid values");
    c->add_option("--out", grid_out, "CSV output path (default: stdout)");
  }

  // train
  ExperimentOptions train_opts;
  std::string model_out;
  CLI::App* train_cmd = app.add_subcommand("train", "Fit one stage model on a whole corpus");
  add_experiment_options(train_cmd, train_opts, true, true);
  train_cmd->add_option("--out", model_out, "Model file path");

  // predict
  std::string endian_model, isvar_model, width_model, binary;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Predict endianness and instruction size of one binary");
  predict_cmd->add_option("--endian-model", endian_model, "Endianness model file");
  predict_cmd->add_option("--isvar-model", isvar_model, "Fixed/variable model file");
  predict_cmd->add_option("--width-model", width_model, "Fixed-width model file");
  predict_cmd->add_option("binary", binary, "Binary to classify");

  // export-curves
  ExperimentOptions curve_opts;
  std::string curve_group = "size-kind", curve_out;
  CLI::App* curves_cmd = app.add_subcommand("export-curves", "Mean AutoCorrelation curve per class as CSV");
  curves_cmd->add_option("--corpus", curve_opts.corpus, "Corpus root");
  curves_cmd->add_option("--labels", curve_opts.labels, "Label CSV");
  curves_cmd->add_option("--lag", curve_opts.lag, "Largest lag");
  curves_cmd->add_option("--cap", curve_opts.cap, "At most this many files per ISA");
  curves_cmd->add_option("--group", curve_group, "size-kind | fixed-bits");
  curves_cmd->add_option("--out", curve_out, "CSV output path (default: stdout)");

  // features
  ExperimentOptions feat_opts;
  std::string feat_out;
  CLI::App* features_cmd = app.add_subcommand("features", "Dump feature vectors as CSV");
  features_cmd->add_option("--corpus", feat_opts.corpus, "Corpus root");
  features_cmd->add_option("--labels", feat_opts.labels, "Label CSV");
  features_cmd->add_option("--feature", feat_opts.feature, "bigrams | endsig | autocorr");
  features_cmd->add_option("--lag", feat_opts.lag, "AutoCorrelation lag");
  features_cmd->add_option("--cap", feat_opts.cap, "At most this many files per ISA");
  features_cmd->add_option("--out", feat_out, "CSV output path (default: stdout)");

  // stats
  std::string stats_labels, stats_corpus;
  bool stats_json = false;
  CLI::App* stats_cmd = app.add_subcommand("stats", "Class counts and baselines from a label file");
  stats_cmd->add_option("--labels", stats_labels, "Label CSV");
  stats_cmd->add_option("--corpus", stats_corpus, "Optional corpus root for file counts");
  stats_cmd->add_flag("--json", stats_json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  // Innermost selected command.
  CLI::App* active = &app;
  for (;;) {
    auto subs = active->get_subcommands();
    if (subs.empty()) break;
    active = subs.front();
  }

  try {
    KeyValueConfig config;
    if (!g.config_file.empty()) {
      config = parse_config(fs::path(g.config_file));
      apply_config(active, config);
    }
    if (*synth_endian) return cmd_synth("endian", synth_e, g);
    if (*synth_fixed) return cmd_synth("fixedwidth", synth_f, g);
    if (*eval_cmd) return cmd_evaluate(eval_cmd, eval_opts, report_path, csv_path, config, g);
    if (*grid_c) return cmd_gridsearch(grid_c, "c", grid_opts, grid_arg, grid_out, config, g);
    if (*grid_lag) return cmd_gridsearch(grid_lag, "lag", grid_opts, grid_arg, grid_out, config, g);
    if (*train_cmd) return cmd_train(train_cmd, train_opts, model_out, config, g);
    if (*predict_cmd) return cmd_predict(endian_model, isvar_model, width_model, binary);
    if (*curves_cmd) return cmd_export_curves(curve_opts, curve_group, curve_out, g);
    if (*features_cmd) return cmd_features(feat_opts, feat_out, g);
    if (*stats_cmd) return cmd_stats(stats_labels, stats_corpus, stats_json);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << active->help();
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  std::cerr << app.help();
  return kExitUsage;
}

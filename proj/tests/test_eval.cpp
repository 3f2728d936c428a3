#include <gtest/gtest.h>

#include "isachar/eval.hpp"
#include "isachar/rng.hpp"
#include "isachar/synth.hpp"

using namespace isachar;

namespace {

CorpusManifest tiny_manifest(std::size_t isas, std::size_t files_per_isa) {
  CorpusManifest m;
  for (std::size_t g = 0; g < isas; ++g) {
    std::string isa = "isa" + std::to_string(g);
    m.registry[isa] = {isa, g % 2 ? Endianness::BigEndian : Endianness::LittleEndian, InstructionSizeSpec::fixed(32),
                       std::nullopt};
    for (std::size_t f = 0; f < files_per_isa; ++f) {
      m.samples.push_back({isa + "/" + std::to_string(f), isa, std::make_shared<const ByteBuffer>(ByteBuffer{1, 2})});
    }
  }
  return m;
}

/// One in-memory file per ISA of the shipped label table.
CorpusManifest cpurec_like() {
  CorpusManifest m;
  m.registry = parse_label_registry(std::filesystem::path(ISACHAR_SOURCE_DIR) / "labels" / "cpurec.csv");
  for (const auto& [isa, _] : m.registry) {
    m.samples.push_back({isa + "/" + isa + ".corpus", isa, std::make_shared<const ByteBuffer>(ByteBuffer(64, 0))});
  }
  return m;
}

std::vector<std::string> labels_for(const CorpusManifest& m, Task task) {
  std::vector<std::string> out;
  for (std::size_t i : eligible_samples(m, task)) out.push_back(*task_label(m.label_of(i), task));
  return out;
}

CorpusManifest small_fixedwidth(std::uint64_t seed) {
  FixedWidthSynthParams p;
  p.files_per_isa = 4;
  p.file_len = 8192;
  p.variable_isas = 3;
  p.seed = seed;
  return generate_synthetic_fixedwidth(p);
}

template <typename Fn>
Error error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error raised";
  return Error(ErrorCode::InvalidArgument, "none");
}

}  // namespace

TEST(Logocv, ThreeGroupsOfTwo) {
  CorpusManifest m = tiny_manifest(3, 2);
  LogoSplitPlan plan = plan_logocv(m, Task::FixedWidth);
  ASSERT_EQ(plan.folds.size(), 3u);
  EXPECT_EQ(plan.groups, (std::vector<std::string>{"isa0", "isa1", "isa2"}));
  for (const auto& fold : plan.folds) {
    EXPECT_EQ(fold.test.size(), 2u);
    EXPECT_EQ(fold.train.size(), 4u);
  }
  EXPECT_EQ(plan.folds[1].test, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(plan.folds[1].train, (std::vector<std::size_t>{0, 1, 4, 5}));
  EXPECT_EQ(check_plan(plan, m, Task::FixedWidth), "");
}

TEST(Logocv, CheckPlanCatchesLeaks) {
  CorpusManifest m = tiny_manifest(3, 2);
  LogoSplitPlan plan = plan_logocv(m, Task::FixedWidth);
  LogoSplitPlan leaked = plan;
  leaked.folds[0].train.push_back(0);
  EXPECT_NE(check_plan(leaked, m, Task::FixedWidth), "");
  LogoSplitPlan dropped = plan;
  dropped.folds[2].test.pop_back();
  EXPECT_NE(check_plan(dropped, m, Task::FixedWidth), "");
  LogoSplitPlan missing = plan;
  missing.folds.pop_back();
  missing.groups.pop_back();
  EXPECT_NE(check_plan(missing, m, Task::FixedWidth), "");
}

TEST(Logocv, SingleGroupIsInsufficient) {
  EXPECT_EQ(error_of([] { plan_logocv(tiny_manifest(1, 5), Task::FixedWidth); }).code(),
            ErrorCode::InsufficientGroups);
  // Two ISAs exist, but only one is eligible for the endianness task.
  CorpusManifest m = tiny_manifest(2, 2);
  m.registry["isa1"].endianness = Endianness::BiEndian;
  EXPECT_EQ(error_of([&] { plan_logocv(m, Task::Endianness); }).code(), ErrorCode::InsufficientGroups);
}

TEST(Logocv, CpuRecTableFoldCounts) {
  CorpusManifest m = cpurec_like();
  EXPECT_EQ(plan_logocv(m, Task::Endianness).folds.size(), 51u);
  EXPECT_EQ(plan_logocv(m, Task::FixedVsVariable).folds.size(), 43u);
  LogoSplitPlan width = plan_logocv(m, Task::FixedWidth);
  EXPECT_EQ(width.folds.size(), 25u);
  EXPECT_EQ(check_plan(width, m, Task::FixedWidth), "");
}

TEST(Baseline, CpuRecTable) {
  CorpusManifest m = cpurec_like();
  auto endian = compute_baseline(labels_for(m, Task::Endianness));
  EXPECT_EQ(endian.most_frequent_class, "LE");
  EXPECT_EQ(endian.most_frequent_count, 33u);
  EXPECT_EQ(endian.total_count, 51u);
  EXPECT_DOUBLE_EQ(endian.baseline, 33.0 / 51.0);
  auto isvar = compute_baseline(labels_for(m, Task::FixedVsVariable));
  EXPECT_EQ(isvar.most_frequent_class, "fixed");
  EXPECT_DOUBLE_EQ(isvar.baseline, 25.0 / 43.0);
  auto width = compute_baseline(labels_for(m, Task::FixedWidth));
  EXPECT_EQ(width.most_frequent_class, "32");
  EXPECT_DOUBLE_EQ(width.baseline, 17.0 / 25.0);
}

TEST(Baseline, SmallCasesAndTies) {
  auto r = compute_baseline({"a", "a", "b"});
  EXPECT_EQ(r.most_frequent_class, "a");
  EXPECT_DOUBLE_EQ(r.baseline, 2.0 / 3.0);
  auto tie = compute_baseline({"y", "x", "y", "x"});
  EXPECT_EQ(tie.most_frequent_class, "x");
  EXPECT_EQ(tie.tied_classes, (std::vector<std::string>{"x", "y"}));
  EXPECT_DOUBLE_EQ(tie.baseline, 0.5);
  EXPECT_EQ(error_of([] { compute_baseline({}); }).code(), ErrorCode::EmptyLabelList);
}

TEST(Evaluate, FeatureAccuracyIsMeanOfFoldAccuracies) {
  // Unequal fold sizes make the fold mean differ from pooled accuracy.
  CorpusManifest m = generate_synthetic_endian({3, 4, 4096, 2});
  // Drop files so ISAs have 1..4 files.
  CorpusManifest uneven = m;
  uneven.samples.clear();
  std::map<std::string, std::size_t> kept;
  std::size_t target = 1;
  std::map<std::string, std::size_t> limit;
  for (const auto& [isa, _] : m.registry) limit[isa] = target++ % 4 + 1;
  for (const auto& s : m.samples) {
    if (kept[s.isa_name]++ < limit[s.isa_name]) uneven.samples.push_back(s);
  }
  EvaluationReport r =
      run_evaluation(uneven, Task::Endianness, {FeatureKind::AutoCorrelation, 4}, classify::ClassifierSpec::knn(1));
  double sum = 0.0;
  std::size_t correct = 0, total = 0;
  for (const auto& f : r.per_fold) {
    EXPECT_DOUBLE_EQ(f.model_accuracy, static_cast<double>(f.correct) / static_cast<double>(f.n_test));
    sum += f.model_accuracy;
    correct += f.correct;
    total += f.n_test;
  }
  EXPECT_EQ(total, uneven.samples.size());
  EXPECT_DOUBLE_EQ(r.feature_accuracy, sum / static_cast<double>(r.per_fold.size()));
  EXPECT_DOUBLE_EQ(r.pooled_accuracy, static_cast<double>(correct) / static_cast<double>(total));
}

TEST(Evaluate, EndianSignaturesSeparateSyntheticCorpus) {
  CorpusManifest m = generate_synthetic_endian({3, 5, 16384, 4});
  EvaluationReport r = run_evaluation(m, Task::Endianness, {FeatureKind::EndiannessSignatures, 0},
                                      classify::ClassifierSpec::knn(3));
  EXPECT_EQ(r.per_fold.size(), 6u);
  EXPECT_GE(r.feature_accuracy, 0.95);
  EXPECT_DOUBLE_EQ(r.baseline.baseline, 0.5);
  EXPECT_TRUE(r.single_isa_classes.empty());
}

TEST(Evaluate, MostFrequentNeverBeatsBaseline) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    CorpusManifest m = small_fixedwidth(seed);
    for (Task task : {Task::FixedVsVariable, Task::FixedWidth}) {
      EvaluationReport r = run_evaluation(m, task, {FeatureKind::EndiannessSignatures, 0},
                                          classify::ClassifierSpec::most_frequent());
      EXPECT_LE(r.pooled_accuracy, r.baseline.baseline + 1e-12);
    }
  }
}

TEST(Evaluate, SingleIsaClassIsFlagged) {
  FixedWidthSynthParams p;
  p.widths_bits = {16, 32};
  p.isas_per_width = 3;
  p.variable_isas = 0;
  p.files_per_isa = 3;
  p.file_len = 4096;
  CorpusManifest m = generate_synthetic_fixedwidth(p);
  // Relabel one 32-bit ISA as 64-bit so "64" has a single ISA.
  m.registry["synthFW32_1"].inst_size = InstructionSizeSpec::fixed(64);
  EvaluationReport r =
      run_evaluation(m, Task::FixedWidth, {FeatureKind::AutoCorrelation, 8}, classify::ClassifierSpec::knn(1));
  EXPECT_EQ(r.single_isa_classes, (std::vector<std::string>{"64"}));
  for (const auto& f : r.per_fold) {
    EXPECT_EQ(f.class_unseen_in_training, f.isa_name == "synthFW32_1");
    if (f.class_unseen_in_training) {
      EXPECT_EQ(f.correct, 0u);
    }
  }
}

TEST(Evaluate, ParallelFoldsMatchSerialRun) {
  CorpusManifest m = small_fixedwidth(3);
  auto spec = classify::ClassifierSpec::random_forest(10, 3);
  EvaluationReport a = run_evaluation(m, Task::FixedWidth, {FeatureKind::AutoCorrelation, 16}, spec, {1});
  EvaluationReport b = run_evaluation(m, Task::FixedWidth, {FeatureKind::AutoCorrelation, 16}, spec, {4});
  ASSERT_EQ(a.per_fold.size(), b.per_fold.size());
  for (std::size_t i = 0; i < a.per_fold.size(); ++i) {
    EXPECT_EQ(a.per_fold[i].isa_name, b.per_fold[i].isa_name);
    EXPECT_EQ(a.per_fold[i].correct, b.per_fold[i].correct);
  }
  EXPECT_EQ(a.feature_accuracy, b.feature_accuracy);
}

TEST(Evaluate, ExtractionErrorsNameTheSample) {
  CorpusManifest m = generate_synthetic_endian({2, 2, 1024, 1});
  Error e = error_of([&] {
    run_evaluation(m, Task::Endianness, {FeatureKind::AutoCorrelation, 2000}, classify::ClassifierSpec::knn(1));
  });
  EXPECT_EQ(e.code(), ErrorCode::SampleTooShort);
  EXPECT_NE(e.stage().find("synth"), std::string::npos) << e.what();
}

TEST(GridSearch, TiesResolveToSmallerValue) {
  CorpusManifest m = generate_synthetic_endian({2, 4, 16384, 9});
  auto r = grid_search_c(m, Task::Endianness, {FeatureKind::EndiannessSignatures, 0}, {1e9, 1e8, 1e10});
  EXPECT_EQ(r.parameter, "C");
  ASSERT_EQ(r.table.size(), 3u);
  EXPECT_EQ(r.table[0].first, 1e9);  // grid order is kept
  for (const auto& [c, acc] : r.table) EXPECT_EQ(acc, 1.0) << c;
  EXPECT_EQ(r.best, 1e8);
}

TEST(GridSearch, PickBestPrefersAccuracyThenSmallerValue) {
  GridSearchResult r{"lag", {{64, 0.5}, {16, 0.9}, {128, 0.9}, {32, 0.8}}, 0, 0};
  detail::pick_best(r);
  EXPECT_EQ(r.best, 16);
  EXPECT_EQ(r.best_accuracy, 0.9);
}

TEST(GridSearch, InvalidGrids) {
  CorpusManifest m = generate_synthetic_endian({2, 2, 1024, 1});
  EXPECT_EQ(error_of([&] { grid_search_c(m, Task::Endianness, {FeatureKind::EndiannessSignatures, 0}, {}); }).code(),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(
      error_of([&] { grid_search_c(m, Task::Endianness, {FeatureKind::EndiannessSignatures, 0}, {1.0, -1.0}); })
          .code(),
      ErrorCode::InvalidArgument);
  EXPECT_EQ(error_of([&] { grid_search_lag(m, Task::Endianness, classify::ClassifierSpec::knn(1), {0}); }).code(),
            ErrorCode::InvalidArgument);
}

TEST(GridSearch, LagLargerThanSampleIsRejected) {
  FixedWidthSynthParams p;
  p.widths_bits = {32};
  p.isas_per_width = 2;
  p.variable_isas = 1;
  p.files_per_isa = 2;
  p.file_len = 512;
  CorpusManifest m = generate_synthetic_fixedwidth(p);
  Error e = error_of([&] {
    grid_search_lag(m, Task::FixedVsVariable, classify::ClassifierSpec::knn(1), {16, 1024});
  });
  EXPECT_EQ(e.code(), ErrorCode::LagTooLarge);
  EXPECT_NE(std::string(e.what()).find(".bin"), std::string::npos) << e.what();
}

TEST(GridSearch, LagSweepTruncationMatchesDirectExtraction) {
  CorpusManifest m = small_fixedwidth(5);
  auto spec = classify::ClassifierSpec::knn(1);
  auto sweep = grid_search_lag(m, Task::FixedWidth, spec, {4, 16});
  for (const auto& [lag, acc] : sweep.table) {
    auto direct = run_evaluation(m, Task::FixedWidth, {FeatureKind::AutoCorrelation, static_cast<int>(lag)}, spec);
    EXPECT_EQ(acc, direct.feature_accuracy) << lag;
  }
}

/// 32-bit fixed ISAs against variable ISAs whose instructions are mostly
/// 4 bytes long. A single period cannot tell them apart; the decay over
/// several periods can.
CorpusManifest mostly_four_byte_corpus(std::uint64_t seed) {
  auto stream = [seed](bool fixed, std::size_t isa, std::size_t file) {
    Rng isa_rng(seed, {isa, 0});
    std::vector<std::uint8_t> opcodes(4);
    for (auto& o : opcodes) o = isa_rng.byte();
    const double p_zero = 0.2 + 0.5 * isa_rng.uniform();
    Rng rng(seed, {isa, file + 1});
    ByteBuffer out;
    while (out.size() < 16384) {
      std::size_t len = 4;
      if (!fixed) {
        double u = rng.uniform();
        len = u < 0.6 ? 4 : (u < 0.8 ? 3 : 5);
      }
      out.push_back(opcodes[rng.below(opcodes.size())]);
      for (std::size_t j = 1; j < len; ++j) out.push_back(rng.chance(p_zero) ? 0 : rng.byte());
    }
    out.resize(16384);
    return out;
  };
  CorpusManifest m;
  for (std::size_t i = 0; i < 16; ++i) {
    const bool fixed = i < 8;
    std::string isa = (fixed ? "fixed" : "var") + std::to_string(i);
    m.registry[isa] = {isa, Endianness::LittleEndian,
                       fixed ? InstructionSizeSpec::fixed(32) : InstructionSizeSpec::variable(), std::nullopt};
    for (std::size_t f = 0; f < 6; ++f) {
      m.samples.push_back({isa + "/" + std::to_string(f), isa, std::make_shared<const ByteBuffer>(stream(fixed, i, f))});
    }
  }
  return m;
}

TEST(GridSearch, Width32CorpusNeedsTwoInstructionPeriods) {
  CorpusManifest m = mostly_four_byte_corpus(3);
  auto r = grid_search_lag(m, Task::FixedVsVariable, classify::ClassifierSpec::knn(1), {1, 2, 4, 8, 16, 32});
  EXPECT_GE(r.best, 8);
}

class PredictUnknown : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    CorpusManifest endian = generate_synthetic_endian({3, 5, 16384, 31});
    FixedWidthSynthParams p;
    p.files_per_isa = 5;
    p.file_len = 16384;
    p.seed = 32;
    fixed = new CorpusManifest(generate_synthetic_fixedwidth(p));
    endian_model = new TrainedModel(train(endian, Task::Endianness, {FeatureKind::EndiannessSignatures, 0}));
    isvar_model = new TrainedModel(train(*fixed, Task::FixedVsVariable, {FeatureKind::AutoCorrelation, 128}));
    width_model = new TrainedModel(train(*fixed, Task::FixedWidth, {FeatureKind::AutoCorrelation, 128}));
  }
  static void TearDownTestSuite() {
    delete fixed;
    delete endian_model;
    delete isvar_model;
    delete width_model;
  }

  static TrainedModel train(const CorpusManifest& m, Task task, const FeatureConfig& feature) {
    FeatureTable t = extract_feature_table(m, task, feature);
    classify::Matrix X;
    std::vector<std::string> y;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      if (!t.rows[i]) continue;
      X.push_back(*t.rows[i]);
      y.push_back(*t.labels[i]);
    }
    return classify::fit(classify::ClassifierSpec::knn(1), X, y, feature.name(), feature.lag_param());
  }

  static inline CorpusManifest* fixed = nullptr;
  static inline TrainedModel* endian_model = nullptr;
  static inline TrainedModel* isvar_model = nullptr;
  static inline TrainedModel* width_model = nullptr;
};

TEST_F(PredictUnknown, FixedWidthLittleEndianBinary) {
  // Seed 99 gives ISAs never seen in training.
  BinarySample sample(synth_fixed_width_file(32, 0, 0, 16384, 99, Endianness::LittleEndian));
  auto out = predict_unknown(sample, *endian_model, *isvar_model, *width_model);
  EXPECT_EQ(out.endianness, Endianness::LittleEndian);
  EXPECT_EQ(out.size_kind, SizeKind::Fixed);
  EXPECT_EQ(out.fixed_bits, 32);
  ASSERT_EQ(out.stages.size(), 3u);
  EXPECT_EQ(out.stages[0].stage, "endianness");
  EXPECT_EQ(out.stages[2].stage, "fixedwidth");
  EXPECT_EQ(out.stages[2].lag_param, 128);
}

TEST_F(PredictUnknown, VariableBinarySkipsWidthStage) {
  BinarySample sample(synth_variable_file(0, 0, 16384, 77));
  auto out = predict_unknown(sample, *endian_model, *isvar_model, *width_model);
  EXPECT_EQ(out.size_kind, SizeKind::Variable);
  EXPECT_FALSE(out.fixed_bits);
  EXPECT_EQ(out.stages.size(), 2u);
}

TEST_F(PredictUnknown, ErrorsNameTheStage) {
  Error tiny = error_of([&] { predict_unknown(BinarySample(ByteBuffer{0x42}), *endian_model, *isvar_model, *width_model); });
  EXPECT_EQ(tiny.code(), ErrorCode::SampleTooShort);
  EXPECT_EQ(tiny.stage(), "endianness");
  Error short_lag =
      error_of([&] { predict_unknown(BinarySample(ByteBuffer(64, 1)), *endian_model, *isvar_model, *width_model); });
  EXPECT_EQ(short_lag.code(), ErrorCode::SampleTooShort);
  EXPECT_EQ(short_lag.stage(), "isvar");
}

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ridgebench/bench/bench.hpp"

namespace rb {
namespace {

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// Fast settings: 32×32 images, 10 subjects, short extractor training.
BenchConfig tiny_config() {
  BenchConfig c = BenchConfig::desk();
  c.synth.subjects = 10;
  c.synth.impressions_per_finger = 1;
  c.synth.image_size = 32;
  c.synth.male_period = {9.0, 0.3};
  c.synth.female_period = {4.0, 0.3};
  c.extractor_settings.train.iterations = 20;
  c.extractor_settings.base_width = 4;
  for (auto& cc : c.classifiers) {
    cc.boost.n_estimators = 20;
    cc.fcnet.epochs = 20;
  }
  c.timing_min_seconds = 0.0;
  return c;
}

const std::vector<LabeledSample>& tiny_samples() {
  static const auto samples = load_bench_samples(tiny_config());
  return samples;
}

const BenchmarkReport& tiny_matrix() {
  static const auto report = run_matrix(tiny_samples(), tiny_config(), 11);
  return report;
}

// ---------------------------------------------------------------------------

TEST(PerGenderAccuracy, WorkedCounts) {
  auto g = per_gender_accuracy({0, 0, 1, 1}, {0, 0, 1, 1});
  EXPECT_EQ(g.male, 1.0);
  EXPECT_EQ(g.female, 1.0);
  EXPECT_EQ(g.average, 100.0);

  g = per_gender_accuracy({0, 1, 1, 1}, {0, 0, 1, 1});
  EXPECT_EQ(g.male, 0.5);
  EXPECT_EQ(g.female, 1.0);
  EXPECT_EQ(g.average, 75.0);

  g = per_gender_accuracy({0, 0, 0, 0}, {0, 1, 0, 1});
  EXPECT_EQ(g.male, 1.0);
  EXPECT_EQ(g.female, 0.0);
  EXPECT_EQ(g.average, 50.0);
}

TEST(PerGenderAccuracy, AverageIsOverallNotMeanOfRecalls) {
  // 3 males all right, 1 female wrong: recalls 1 and 0, overall 75%.
  const auto g = per_gender_accuracy({0, 0, 0, 0}, {0, 0, 0, 1});
  EXPECT_EQ(g.average, 75.0);
  EXPECT_NE(g.average, 50.0 * (*g.male + *g.female));
}

TEST(PerGenderAccuracy, ConstantPredictorScoresTheClassFraction) {
  for (std::size_t males = 1; males < 10; ++males) {
    Labels truth(10, 1);
    std::fill(truth.begin(), truth.begin() + static_cast<long>(males), 0);
    EXPECT_NEAR(per_gender_accuracy(Labels(10, 0), truth).average, 10.0 * static_cast<double>(males), 1e-12);
    EXPECT_NEAR(per_gender_accuracy(Labels(10, 1), truth).average, 10.0 * static_cast<double>(10 - males), 1e-12);
  }
}

TEST(PerGenderAccuracy, AbsentClassIsNull) {
  const auto g = per_gender_accuracy({0, 1, 0}, {0, 0, 0});
  EXPECT_NEAR(*g.male, 2.0 / 3.0, 1e-15);
  EXPECT_FALSE(g.female.has_value());
  EXPECT_THROW(per_gender_accuracy({}, {}), std::invalid_argument);
  EXPECT_THROW(per_gender_accuracy({0}, {0, 1}), std::invalid_argument);
}

TEST(FingerTable, AggregatesFollowDefinitions) {
  FingerTable t;
  const double acc[10] = {80, 91, 77.5, 60, 99, 85, 92.455, 70, 88, 64};
  for (std::size_t k = 0; k < 10; ++k) t.rows.push_back({kAllFingers[k], acc[k], 4});
  aggregate_fingers(t);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(*t.pair_means[k], (acc[k] + acc[k + 5]) / 2.0, 1e-12);
  EXPECT_NEAR(*t.left_mean, (80 + 91 + 77.5 + 60 + 99) / 5.0, 1e-12);
  EXPECT_NEAR(*t.right_mean, (85 + 92.455 + 70 + 88 + 64) / 5.0, 1e-12);
  EXPECT_EQ(t.best_finger, Finger::L5);

  t.rows[9].accuracy.reset();
  aggregate_fingers(t);
  EXPECT_FALSE(t.pair_means[4].has_value());
  EXPECT_FALSE(t.right_mean.has_value());
  EXPECT_TRUE(t.left_mean.has_value());
}

TEST(FingerTable, BestFingerTieKeepsFirst) {
  FingerTable t;
  for (auto f : kAllFingers) t.rows.push_back({f, 50.0, 1});
  t.rows[3].accuracy = 90.0;
  t.rows[7].accuracy = 90.0;
  aggregate_fingers(t);
  EXPECT_EQ(t.best_finger, Finger::L4);
}

// ---------------------------------------------------------------------------

TEST(BenchConfig, JsonRoundTripAndOverrides) {
  const auto desk = BenchConfig::desk();
  EXPECT_EQ(desk.classifiers.size(), 9u);
  EXPECT_EQ(desk.extractors.size(), 6u);
  EXPECT_EQ(BenchConfig::from_json(desk.to_json()).to_json(), desk.to_json());
  const auto paper = BenchConfig::paper();
  EXPECT_EQ(paper.synth.image_size, 256u);
  EXPECT_EQ(BenchConfig::from_json(paper.to_json()).to_json(), paper.to_json());

  const auto j = nlohmann::json::parse(R"({
    "profile": "desk",
    "dataset": {"synth": {"subjects": 12, "period_gap": 0.0}},
    "extractors": {"enabled": ["fft", "ddc_resnet"], "train": {"iterations": 7}},
    "classifiers": {"enabled": ["knn", "svm_rbf"], "params": {"knn": {"k": 3}}},
    "workers": 2
  })");
  const auto c = BenchConfig::from_json(j);
  EXPECT_EQ(c.synth.subjects, 12u);
  EXPECT_EQ(c.synth.male_period.mean, c.synth.female_period.mean);
  EXPECT_EQ(c.extractors, (std::vector<ExtractorId>{ExtractorId::fft, ExtractorId::ddc_resnet}));
  EXPECT_EQ(c.extractor_settings.train.iterations, 7u);
  EXPECT_EQ(c.classifier(Algorithm::knn).k, 3u);
  EXPECT_EQ(c.classifiers.size(), 2u);
  EXPECT_THROW(c.classifier(Algorithm::lda), std::invalid_argument);
  EXPECT_EQ(c.workers, 2u);
}

TEST(BenchConfig, RejectsUnknownKeysAndValues) {
  EXPECT_THROW(BenchConfig::from_json({{"profle", "desk"}}), std::invalid_argument);
  EXPECT_THROW(BenchConfig::from_json({{"profile", "huge"}}), std::invalid_argument);
  EXPECT_THROW(BenchConfig::from_json(nlohmann::json::parse(R"({"extractors": {"enabled": ["gabor"]}})")),
               std::invalid_argument);
  EXPECT_THROW(BenchConfig::from_json(nlohmann::json::parse(R"({"classifiers": {"params": {"knn": {"kk": 1}}}})")),
               std::invalid_argument);
  EXPECT_THROW(BenchConfig::from_json({{"workers", 0}}), std::invalid_argument);
}

// ---------------------------------------------------------------------------

TEST(FeatureCache, ComputesEachExtractorOncePerSplit) {
  const auto& samples = tiny_samples();
  const auto cfg = tiny_config();
  const auto split = split_subject_disjoint(samples, 3);
  FeatureCache cache;
  const auto a = cache.get(ExtractorId::dwt, samples, split, cfg.extractor_settings, 3);
  const auto b = cache.get(ExtractorId::dwt, samples, split, cfg.extractor_settings, 3);
  EXPECT_EQ(a.get(), b.get());
  EXPECT_EQ(cache.computed(), 1u);
  EXPECT_EQ(cache.hits(), 1u);

  // A fresh computation produces byte-identical features.
  FeatureCache other;
  const auto c = other.get(ExtractorId::dwt, samples, split, cfg.extractor_settings, 3);
  ASSERT_EQ(c->train.size(), a->train.size());
  EXPECT_EQ(std::memcmp(c->train.data(), a->train.data(), sizeof(double) * static_cast<std::size_t>(a->train.size())), 0);
  EXPECT_EQ(c->test, a->test);
  EXPECT_EQ(a->train.cols(), 3 * 5 + 1);  // 32×32 allows five levels

  const auto moved = split_subject_disjoint(samples, 4);
  cache.get(ExtractorId::dwt, samples, moved, cfg.extractor_settings, 3);
  EXPECT_EQ(cache.computed(), 2u);
}

TEST(FeatureCache, SplitHashIsOrderSensitive) {
  const auto& samples = tiny_samples();
  const std::vector<std::size_t> a = {0, 1, 2}, b = {1, 0, 2};
  EXPECT_NE(split_hash(samples, a), split_hash(samples, b));
  EXPECT_EQ(split_hash(samples, a), split_hash(samples, a));
}

TEST(FeatureExtractor, NeuralExtractorsTrainOnGivenImagesOnly) {
  const auto& samples = tiny_samples();
  std::vector<GrayImage> images;
  for (std::size_t i = 0; i < 10; ++i) images.push_back(samples[i].image);
  auto ex = FeatureExtractor::fit(ExtractorId::vgg, images, tiny_config().extractor_settings, 5);
  ASSERT_NE(ex->model(), nullptr);
  EXPECT_EQ(ex->model()->meta.iterations, 20u);
  const auto f = ex->extract(images);
  EXPECT_EQ(f.size(), 10u);
  EXPECT_EQ(f[0].length(), kLatentDim);
  EXPECT_EQ(FeatureExtractor::fit(ExtractorId::fft, images, {}, 5)->model(), nullptr);
}

// ---------------------------------------------------------------------------

TEST(RunMatrix, FullGridWithConsistentMetrics) {
  const auto& r = tiny_matrix();
  EXPECT_EQ(r.cells.size(), 54u);
  EXPECT_TRUE(validate_report(r).empty()) << validate_report(r).front();
  for (auto e : kAllExtractors) {
    for (auto a : kAllAlgorithms) {
      const MatrixCell* c = r.cell(e, a);
      ASSERT_NE(c, nullptr);
      ASSERT_FALSE(c->failure) << to_string(e) << "+" << to_string(a) << ": " << *c->failure;
      ASSERT_TRUE(c->average_accuracy && c->male_accuracy && c->female_accuracy);
      EXPECT_EQ(c->male_total + c->female_total, r.test_samples);
      EXPECT_NEAR(*c->average_accuracy,
                  100.0 * static_cast<double>(c->male_correct + c->female_correct) / static_cast<double>(r.test_samples),
                  1e-12);
    }
  }
  for (const auto& e : r.extractors) EXPECT_FALSE(e.failure);
}

TEST(RunMatrix, HighSeparationBeatsChanceEverywhere) {
  // Periods 9 vs 4 px at 64×64 with properly trained extractors.
  auto cfg = tiny_config();
  cfg.synth.subjects = 40;
  cfg.synth.image_size = 64;
  cfg.extractor_settings.base_width = 8;
  cfg.extractor_settings.train.iterations = 300;
  for (auto& cc : cfg.classifiers) cc = ClassifierConfig::defaults(cc.algorithm);
  const auto r = run_matrix(load_bench_samples(cfg), cfg, 5);
  ASSERT_EQ(r.cells.size(), 54u);
  for (const auto& c : r.cells) {
    ASSERT_FALSE(c.failure) << *c.failure;
    EXPECT_GT(*c.average_accuracy, 50.0) << to_string(c.extractor) << "+" << to_string(c.classifier);
  }
}

TEST(RunMatrix, SameSeedGivesIdenticalJson) {
  FeatureCache fresh;
  const auto again = run_matrix(tiny_samples(), tiny_config(), 11, &fresh);
  EXPECT_EQ(report_to_json(again, TimingFields::exclude).dump(), report_to_json(tiny_matrix(), TimingFields::exclude).dump());
  EXPECT_EQ(fresh.computed(), 6u);
}

TEST(RunMatrix, WorkerPoolDoesNotChangeResults) {
  auto cfg = tiny_config();
  cfg.extractors = {ExtractorId::fft, ExtractorId::svd};
  const auto serial = run_matrix(tiny_samples(), cfg, 2);
  cfg.workers = 4;
  const auto parallel = run_matrix(tiny_samples(), cfg, 2);
  EXPECT_EQ(report_to_json(serial, TimingFields::exclude)["cells"], report_to_json(parallel, TimingFields::exclude)["cells"]);
}

TEST(RunMatrix, FailingCellIsRecordedAndRunContinues) {
  auto cfg = tiny_config();
  cfg.extractors = {ExtractorId::dwt};
  for (auto& cc : cfg.classifiers) {
    if (cc.algorithm == Algorithm::fcnet) cc.fcnet.batch_size = 0;
  }
  const auto r = run_matrix(tiny_samples(), cfg, 1);
  ASSERT_EQ(r.cells.size(), 9u);
  std::size_t failed = 0;
  for (const auto& c : r.cells) {
    if (c.failure) {
      ++failed;
      EXPECT_EQ(c.classifier, Algorithm::fcnet);
      EXPECT_NE(c.failure->find("batch_size"), std::string::npos);
      EXPECT_FALSE(c.average_accuracy);
    }
  }
  EXPECT_EQ(failed, 1u);
  EXPECT_TRUE(validate_report(r).empty());
  EXPECT_NE(report_markdown(r).find("Failed cells"), std::string::npos);
}

// ---------------------------------------------------------------------------

TEST(Report, JsonRoundTripIsLossless) {
  BenchmarkReport r = tiny_matrix();
  FingerTable t;
  for (auto f : kAllFingers) t.rows.push_back({f, 100.0 / 3.0 + static_cast<int>(f), 3});
  t.rows[2].accuracy.reset();
  aggregate_fingers(t);
  r.fingers = t;
  r.timing = {{ExtractorId::fft, Algorithm::knn, 10, 1.0 / 3.0, 7, std::nullopt},
              {ExtractorId::fft, Algorithm::knn, 100, 0.1 + 0.2, 1, std::string("x")}};
  r.notes = {"a note"};
  const auto text = report_to_json(r).dump();
  const auto back = report_from_json(nlohmann::json::parse(text));
  EXPECT_TRUE(back == r);
  EXPECT_EQ(report_to_json(back).dump(), text);
  auto wrong = nlohmann::json::parse(text);
  wrong["schema_version"] = 2;
  EXPECT_THROW(report_from_json(wrong), std::invalid_argument);
}

TEST(Report, MarkdownMatrixIsSixByNine) {
  const auto md = report_markdown(tiny_matrix());
  std::istringstream in(md);
  std::string line;
  std::size_t body_rows = 0;
  bool in_matrix = false;
  while (std::getline(in, line)) {
    if (line.rfind("## Extractor", 0) == 0) in_matrix = true;
    else if (line.rfind("##", 0) == 0) in_matrix = false;
    if (!in_matrix || line.rfind("| ", 0) != 0) continue;
    EXPECT_EQ(std::count(line.begin(), line.end(), '|'), 11) << line;
    if (line.find("<br>") != std::string::npos) ++body_rows;
  }
  EXPECT_EQ(body_rows, 6u);
  EXPECT_NE(md.find("| ddc_resnet |"), std::string::npos);
}

TEST(Report, CsvRowCountsByConstruction) {
  BenchmarkReport r = tiny_matrix();
  FingerTable t;
  for (auto f : kAllFingers) t.rows.push_back({f, 50.0, 1});
  aggregate_fingers(t);
  r.fingers = t;
  for (auto e : kAllExtractors) {
    for (auto a : kAllAlgorithms) {
      for (auto b : kTimingBatchSizes) r.timing.push_back({e, a, b, 0.001 * static_cast<double>(b), 1, std::nullopt});
    }
  }
  const auto csv = report_csv(r);
  EXPECT_EQ(count_lines(csv.matrix) - 1 + count_lines(csv.fingers) - 1 + count_lines(csv.timing) - 1,
            54u + 10u + 54u * 3u);
  EXPECT_TRUE(validate_report(r).empty());

  const auto dir = std::filesystem::temp_directory_path() / "rb_bench_report_test";
  std::filesystem::remove_all(dir);
  const auto files = emit_report(r, dir);
  EXPECT_EQ(files.size(), 5u);
  std::ifstream in(dir / "report.json");
  EXPECT_TRUE(report_from_json(nlohmann::json::parse(in)) == r);
  std::filesystem::remove_all(dir);

  const auto blocker = std::filesystem::temp_directory_path() / "rb_bench_report_blocker";
  std::ofstream(blocker) << "file";
  EXPECT_THROW(emit_report(r, blocker / "sub"), std::runtime_error);
  std::filesystem::remove(blocker);
}

TEST(Report, ValidationCatchesInconsistencies) {
  BenchmarkReport r = tiny_matrix();
  r.cells[0].average_accuracy = *r.cells[0].average_accuracy + 1e-9;
  EXPECT_FALSE(validate_report(r).empty());

  r = tiny_matrix();
  r.cells.pop_back();
  EXPECT_FALSE(validate_report(r).empty());

  r = tiny_matrix();
  FingerTable t;
  for (auto f : kAllFingers) t.rows.push_back({f, 60.0, 1});
  aggregate_fingers(t);
  t.pair_means[1] = 61.0;
  r.fingers = t;
  EXPECT_FALSE(validate_report(r).empty());

  r = tiny_matrix();
  r.timing = {{ExtractorId::fft, Algorithm::knn, 10, 1.0, 1, std::nullopt},
              {ExtractorId::fft, Algorithm::knn, 100, 0.89, 1, std::nullopt}};
  EXPECT_FALSE(validate_report(r).empty());
  r.timing[1].seconds = 0.91;
  EXPECT_TRUE(validate_report(r).empty());
}

// ---------------------------------------------------------------------------

TEST(RunFingerAnalysis, TenRowsWithExactAggregates) {
  FeatureCache cache;
  const auto t = run_finger_analysis(tiny_samples(), tiny_config(), 11, &cache);
  ASSERT_EQ(t.rows.size(), 10u);
  std::size_t total = 0;
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_EQ(t.rows[k].finger, kAllFingers[k]);
    ASSERT_TRUE(t.rows[k].accuracy);
    total += t.rows[k].samples;
  }
  EXPECT_EQ(total, tiny_matrix().test_samples);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_NEAR(*t.pair_means[k], (*t.rows[k].accuracy + *t.rows[k + 5].accuracy) / 2.0, 1e-12);
  }
  double left = 0, right = 0;
  for (std::size_t k = 0; k < 5; ++k) {
    left += *t.rows[k].accuracy;
    right += *t.rows[k + 5].accuracy;
  }
  EXPECT_NEAR(*t.left_mean, left / 5.0, 1e-12);
  EXPECT_NEAR(*t.right_mean, right / 5.0, 1e-12);
  ASSERT_TRUE(t.best_finger);

  // Finger rows pool to the matrix cell for the same combination.
  const MatrixCell* cell = tiny_matrix().cell(ExtractorId::ddc_resnet, Algorithm::fcnet);
  double correct = 0;
  for (const auto& row : t.rows) correct += *row.accuracy * static_cast<double>(row.samples) / 100.0;
  EXPECT_NEAR(100.0 * correct / static_cast<double>(total), *cell->average_accuracy, 1e-9);
}

TEST(RunFingerAnalysis, MissingFingerIsNull) {
  std::vector<LabeledSample> subset;
  for (const auto& s : tiny_samples()) {
    if (s.finger != Finger::R3) subset.push_back(s);
  }
  auto cfg = tiny_config();
  cfg.finger_extractor = ExtractorId::dwt;
  cfg.finger_classifier = Algorithm::lda;
  const auto t = run_finger_analysis(subset, cfg, 2);
  EXPECT_FALSE(t.rows[7].accuracy);
  EXPECT_EQ(t.rows[7].samples, 0u);
  EXPECT_FALSE(t.pair_means[2]);
  EXPECT_FALSE(t.right_mean);
  EXPECT_TRUE(t.left_mean);
}

TEST(RunTiming, BatchSizesAndMonotoneCost) {
  auto cfg = tiny_config();
  cfg.extractors = {ExtractorId::svd, ExtractorId::ddc_resnet};
  cfg.classifiers = {ClassifierConfig::defaults(Algorithm::knn), ClassifierConfig::defaults(Algorithm::lda)};
  cfg.timing_min_seconds = 0.02;
  const auto rows = run_timing(tiny_samples(), cfg, 3);
  ASSERT_EQ(rows.size(), 2u * 2u * 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].batch_size, kTimingBatchSizes[i % 3]);
    EXPECT_FALSE(rows[i].failure);
    EXPECT_GT(rows[i].seconds, 0.0);
    EXPECT_TRUE(std::isfinite(rows[i].seconds));
    EXPECT_GE(rows[i].repeats, 1u);
  }
  for (std::size_t i = 0; i < rows.size(); i += 3) {
    EXPECT_GE(rows[i + 2].seconds, 0.9 * rows[i].seconds);
  }
  BenchmarkReport r;
  r.timing = rows;
  EXPECT_TRUE(validate_report(r).empty()) << validate_report(r).front();
}

}  // namespace
}  // namespace rb

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ridgebench/classify/classifier.hpp"
#include "ridgebench/data/dataset.hpp"
#include "ridgebench/data/synth.hpp"
#include "ridgebench/features/classical.hpp"
#include "ridgebench/models/autoencoder.hpp"

namespace rb {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::array<std::size_t, 3> kTimingBatchSizes = {10, 100, 1000};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ExtractorSettings {
  SpectrumMode fft_mode = SpectrumMode::magnitude;
  /// 0 picks min(8, deepest level the image size allows).
  std::size_t dwt_levels = 0;
  std::size_t base_width = 16;
  TrainConfig train = TrainConfig::desk();
};

struct BenchConfig {
  std::string profile = "desk";
  /// When set, samples come from this manifest instead of the generator.
  std::optional<std::filesystem::path> manifest;
  SynthSpec synth = SynthSpec::desk();
  std::size_t train_parts = 4;
  std::size_t test_parts = 1;
  std::vector<ExtractorId> extractors{kAllExtractors.begin(), kAllExtractors.end()};
  std::vector<ClassifierConfig> classifiers;
  ExtractorSettings extractor_settings;
  ExtractorId finger_extractor = ExtractorId::ddc_resnet;
  Algorithm finger_classifier = Algorithm::fcnet;
  std::vector<std::size_t> batch_sizes{kTimingBatchSizes.begin(), kTimingBatchSizes.end()};
  /// A timed batch is repeated until this much wall time has accumulated.
  double timing_min_seconds = 0.05;
  std::size_t workers = 1;

  static BenchConfig desk();
  static BenchConfig paper();
  static BenchConfig for_profile(std::string_view name);

  const ClassifierConfig& classifier(Algorithm a) const;
  nlohmann::json to_json() const;
  /// Keys present in `j` override the profile named by `j["profile"]`
  /// (default desk). Unknown keys are rejected.
  static BenchConfig from_json(const nlohmann::json& j);
  static BenchConfig load(const std::filesystem::path& path);
};

/// Loads the manifest if configured, otherwise synthesizes the dataset.
std::vector<LabeledSample> load_bench_samples(const BenchConfig& config);

Labels labels_of(const std::vector<LabeledSample>& samples, std::span<const std::size_t> indices);

// ---------------------------------------------------------------------------
// Feature extraction
// ---------------------------------------------------------------------------

class FeatureExtractor {
 public:
  /// Classical extractors need no training. Neural ones train an autoencoder
  /// on `train_images` only and freeze it.
  static std::unique_ptr<FeatureExtractor> fit(ExtractorId id, std::span<const GrayImage> train_images,
                                               const ExtractorSettings& settings, std::uint64_t seed);

  ExtractorId id() const { return id_; }
  double train_seconds() const { return train_seconds_; }
  std::vector<FeatureVector> extract(std::span<const GrayImage> images);
  /// Null for classical extractors.
  Autoencoder* model() { return model_ ? &*model_ : nullptr; }

 private:
  ExtractorId id_ = ExtractorId::fft;
  ExtractorSettings settings_;
  std::optional<Autoencoder> model_;
  double train_seconds_ = 0.0;
};

/// Order-sensitive FNV-1a hash of the sample identities at `indices`.
std::uint64_t split_hash(const std::vector<LabeledSample>& samples, std::span<const std::size_t> indices);

struct ExtractedFeatures {
  FeatureMatrix train;
  FeatureMatrix test;
  double train_seconds = 0.0;    // extractor training (neural only)
  double extract_seconds = 0.0;  // both splits
  std::shared_ptr<FeatureExtractor> extractor;
};

/// Features keyed by (extractor, train split hash, test split hash). Safe to
/// share between threads; each key is computed once.
class FeatureCache {
 public:
  std::shared_ptr<const ExtractedFeatures> get(ExtractorId id, const std::vector<LabeledSample>& samples,
                                               const DatasetSplit& split, const ExtractorSettings& settings,
                                               std::uint64_t seed);
  std::size_t computed() const;
  std::size_t hits() const;

 private:
  struct Entry {
    std::once_flag once;
    std::shared_ptr<const ExtractedFeatures> value;
    std::exception_ptr error;
  };
  mutable std::mutex mutex_;
  std::map<std::tuple<ExtractorId, std::uint64_t, std::uint64_t, std::uint64_t>, std::shared_ptr<Entry>> entries_;
  std::size_t computed_ = 0;
  std::size_t hits_ = 0;
};

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct GenderAccuracy {
  std::optional<double> male;    // recall over true males; null without males
  std::optional<double> female;  // likewise for females
  double average = 0.0;          // overall percent correct
  std::size_t male_total = 0, male_correct = 0;
  std::size_t female_total = 0, female_correct = 0;
};

GenderAccuracy per_gender_accuracy(const Labels& predicted, const Labels& truth);

struct MatrixCell {
  ExtractorId extractor = ExtractorId::fft;
  Algorithm classifier = Algorithm::knn;
  std::optional<std::string> failure;
  std::optional<double> average_accuracy;
  std::optional<double> male_accuracy;
  std::optional<double> female_accuracy;
  std::size_t male_total = 0, male_correct = 0;
  std::size_t female_total = 0, female_correct = 0;
  std::vector<std::string> warnings;
  double train_seconds = 0.0;
  double extract_seconds = 0.0;

  bool operator==(const MatrixCell&) const = default;
};

struct FingerRow {
  Finger finger = Finger::L1;
  std::optional<double> accuracy;  // percent; null for an empty subset
  std::size_t samples = 0;

  bool operator==(const FingerRow&) const = default;
};

struct FingerTable {
  ExtractorId extractor = ExtractorId::ddc_resnet;
  Algorithm classifier = Algorithm::fcnet;
  std::vector<FingerRow> rows;                       // L1..L5, R1..R5
  std::array<std::optional<double>, 5> pair_means;   // F1..F5 = mean(Lx, Rx)
  std::optional<double> left_mean;
  std::optional<double> right_mean;
  std::optional<Finger> best_finger;

  bool operator==(const FingerTable&) const = default;
};

/// Fills pair means, hand means and the best finger from `rows`.
void aggregate_fingers(FingerTable& table);

struct TimingRow {
  ExtractorId extractor = ExtractorId::fft;
  Algorithm classifier = Algorithm::knn;
  std::size_t batch_size = 0;
  double seconds = 0.0;  // mean over repeats
  std::size_t repeats = 0;
  std::optional<std::string> failure;

  bool operator==(const TimingRow&) const = default;
};

struct ExtractorRecord {
  ExtractorId extractor = ExtractorId::fft;
  std::size_t feature_dim = 0;
  double train_seconds = 0.0;
  double extract_seconds = 0.0;
  std::optional<std::string> failure;

  bool operator==(const ExtractorRecord&) const = default;
};

struct BenchmarkReport {
  int schema_version = kReportSchemaVersion;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  std::vector<ExtractorRecord> extractors;
  std::vector<MatrixCell> cells;
  std::optional<FingerTable> fingers;
  std::vector<TimingRow> timing;
  std::vector<std::string> notes;

  bool operator==(const BenchmarkReport&) const = default;
  const MatrixCell* cell(ExtractorId e, Algorithm a) const;
};

enum class TimingFields { include, exclude };

nlohmann::json report_to_json(const BenchmarkReport& report, TimingFields timing = TimingFields::include);
BenchmarkReport report_from_json(const nlohmann::json& j);
std::string report_markdown(const BenchmarkReport& report);
/// matrix.csv, fingers.csv, timing.csv; each with a header line.
struct CsvTables {
  std::string matrix;
  std::string fingers;
  std::string timing;
};
CsvTables report_csv(const BenchmarkReport& report);

/// Writes report.json, report.md and the three CSV tables into `dir`.
std::vector<std::filesystem::path> emit_report(const BenchmarkReport& report, const std::filesystem::path& dir);

/// Hard assertions over a report; an empty result means it is consistent.
std::vector<std::string> validate_report(const BenchmarkReport& report);

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

BenchmarkReport run_matrix(const std::vector<LabeledSample>& samples, const BenchConfig& config,
                           std::uint64_t seed, FeatureCache* cache = nullptr);

FingerTable run_finger_analysis(const std::vector<LabeledSample>& samples, const BenchConfig& config,
                                std::uint64_t seed, FeatureCache* cache = nullptr);

/// Inference-path seconds (extract + predict) per combination and batch
/// size. Batches cycle through the test split. Always single-threaded.
std::vector<TimingRow> run_timing(const std::vector<LabeledSample>& samples, const BenchConfig& config,
                                  std::uint64_t seed, FeatureCache* cache = nullptr);

}  // namespace rb

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

#include "ridgebench/bench/bench.hpp"

namespace rb {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

EncoderVariant variant_of(ExtractorId id) {
  switch (id) {
    case ExtractorId::resnet: return EncoderVariant::resnet;
    case ExtractorId::vgg: return EncoderVariant::vgg;
    case ExtractorId::ddc_resnet: return EncoderVariant::ddc_resnet;
    default: break;
  }
  throw std::invalid_argument("extractor " + std::string(to_string(id)) + " is not neural");
}

/// Runs fn(0..count-1) on `width` threads; fn must not throw.
template <class Fn>
void run_pool(std::size_t width, std::size_t count, Fn fn) {
  width = std::max<std::size_t>(1, std::min(width, count));
  if (width == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < width; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

/// Classifier seed for a combination, independent of grid position.
std::uint64_t cell_seed(std::uint64_t seed, ExtractorId e, Algorithm a) {
  return mix_seed(seed, 100 + static_cast<std::uint64_t>(e), static_cast<std::uint64_t>(a));
}

std::vector<GrayImage> gather_images(const std::vector<LabeledSample>& samples,
                                     std::span<const std::size_t> indices) {
  std::vector<GrayImage> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(samples[i].image);
  return out;
}

DatasetSplit make_split(const std::vector<LabeledSample>& samples, const BenchConfig& config,
                        std::uint64_t seed) {
  auto split = split_subject_disjoint(samples, seed, config.train_parts, config.test_parts);
  assert_subject_disjoint(samples, split);
  return split;
}

}  // namespace

// ---------------------------------------------------------------------------

std::unique_ptr<FeatureExtractor> FeatureExtractor::fit(ExtractorId id, std::span<const GrayImage> train_images,
                                                        const ExtractorSettings& settings, std::uint64_t seed) {
  auto out = std::unique_ptr<FeatureExtractor>(new FeatureExtractor());
  out->id_ = id;
  out->settings_ = settings;
  if (!is_neural(id)) return out;
  if (train_images.empty()) throw std::invalid_argument("extractor training needs images");
  const auto start = Clock::now();
  const std::size_t size = train_images.front().width();
  out->model_.emplace(Autoencoder::build(EncoderArch::make(variant_of(id), size, settings.base_width), seed));
  TrainConfig train = settings.train;
  train.seed = mix_seed(seed, 1);
  train_autoencoder(*out->model_, train_images, train);
  out->train_seconds_ = seconds_since(start);
  return out;
}

std::vector<FeatureVector> FeatureExtractor::extract(std::span<const GrayImage> images) {
  if (model_) return encode(*model_, images);
  std::vector<FeatureVector> out;
  out.reserve(images.size());
  for (const auto& image : images) {
    switch (id_) {
      case ExtractorId::fft: out.push_back(fft_features(image, settings_.fft_mode)); break;
      case ExtractorId::dwt: {
        const std::size_t deepest = max_dwt_levels(image.height(), image.width());
        const std::size_t levels = settings_.dwt_levels ? settings_.dwt_levels : std::min<std::size_t>(8, deepest);
        out.push_back(dwt_energy_features(image, levels));
        break;
      }
      case ExtractorId::svd: out.push_back(svd_features(image)); break;
      default: throw std::logic_error("neural extractor without a model");
    }
  }
  return out;
}

std::uint64_t split_hash(const std::vector<LabeledSample>& samples, std::span<const std::size_t> indices) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::string_view bytes) {
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (auto i : indices) {
    const auto& s = samples.at(i);
    feed(s.subject_id);
    feed("|" + std::string(to_string(s.finger)) + "|" + std::to_string(s.impression) + ";");
  }
  return h;
}

std::shared_ptr<const ExtractedFeatures> FeatureCache::get(ExtractorId id, const std::vector<LabeledSample>& samples,
                                                           const DatasetSplit& split,
                                                           const ExtractorSettings& settings, std::uint64_t seed) {
  const auto key = std::make_tuple(id, split_hash(samples, split.train), split_hash(samples, split.test), seed);
  std::shared_ptr<Entry> entry;
  {
    std::lock_guard lock(mutex_);
    auto& slot = entries_[key];
    if (!slot) slot = std::make_shared<Entry>();
    entry = slot;
  }
  bool computed_here = false;
  std::call_once(entry->once, [&] {
    computed_here = true;
    try {
      auto f = std::make_shared<ExtractedFeatures>();
      const auto train_images = gather_images(samples, split.train);
      const auto test_images = gather_images(samples, split.test);
      std::shared_ptr<FeatureExtractor> extractor =
          FeatureExtractor::fit(id, train_images, settings, mix_seed(seed, static_cast<std::uint64_t>(id) + 1));
      f->train_seconds = extractor->train_seconds();
      const auto start = Clock::now();
      f->train = to_feature_matrix(extractor->extract(train_images));
      f->test = to_feature_matrix(extractor->extract(test_images));
      f->extract_seconds = seconds_since(start);
      f->extractor = std::move(extractor);
      entry->value = std::move(f);
    } catch (...) {
      entry->error = std::current_exception();
    }
  });
  {
    std::lock_guard lock(mutex_);
    (computed_here ? computed_ : hits_) += 1;
  }
  if (entry->error) std::rethrow_exception(entry->error);
  return entry->value;
}

std::size_t FeatureCache::computed() const {
  std::lock_guard lock(mutex_);
  return computed_;
}

std::size_t FeatureCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

// ---------------------------------------------------------------------------

GenderAccuracy per_gender_accuracy(const Labels& predicted, const Labels& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("per_gender_accuracy: length mismatch");
  if (truth.empty()) throw std::invalid_argument("per_gender_accuracy: empty input");
  GenderAccuracy g;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool correct = predicted[i] == truth[i];
    if (truth[i] == 0) {
      ++g.male_total;
      g.male_correct += correct ? 1 : 0;
    } else {
      ++g.female_total;
      g.female_correct += correct ? 1 : 0;
    }
  }
  if (g.male_total) g.male = static_cast<double>(g.male_correct) / static_cast<double>(g.male_total);
  if (g.female_total) g.female = static_cast<double>(g.female_correct) / static_cast<double>(g.female_total);
  g.average = 100.0 * static_cast<double>(g.male_correct + g.female_correct) / static_cast<double>(truth.size());
  return g;
}

void aggregate_fingers(FingerTable& table) {
  if (table.rows.size() != kAllFingers.size()) throw std::invalid_argument("finger table needs 10 rows");
  auto row = [&](std::size_t i) { return table.rows[i].accuracy; };
  for (std::size_t k = 0; k < 5; ++k) {
    const auto l = row(k), r = row(5 + k);
    table.pair_means[k] = (l && r) ? std::optional<double>((*l + *r) / 2.0) : std::nullopt;
  }
  auto hand = [&](std::size_t first) -> std::optional<double> {
    double total = 0.0;
    for (std::size_t k = first; k < first + 5; ++k) {
      if (!row(k)) return std::nullopt;
      total += *row(k);
    }
    return total / 5.0;
  };
  table.left_mean = hand(0);
  table.right_mean = hand(5);
  table.best_finger.reset();
  std::optional<double> best;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    if (row(k) && (!best || *row(k) > *best)) {
      best = row(k);
      table.best_finger = table.rows[k].finger;
    }
  }
}

const MatrixCell* BenchmarkReport::cell(ExtractorId e, Algorithm a) const {
  for (const auto& c : cells) {
    if (c.extractor == e && c.classifier == a) return &c;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------

BenchmarkReport run_matrix(const std::vector<LabeledSample>& samples, const BenchConfig& config, std::uint64_t seed,
                           FeatureCache* cache) {
  FeatureCache local;
  if (!cache) cache = &local;
  const DatasetSplit split = make_split(samples, config, seed);
  const Labels y_train = labels_of(samples, split.train);
  const Labels y_test = labels_of(samples, split.test);

  BenchmarkReport report;
  report.seed = seed;
  report.config = config.to_json();
  report.train_samples = split.train.size();
  report.test_samples = split.test.size();

  const std::size_t ne = config.extractors.size();
  std::vector<std::shared_ptr<const ExtractedFeatures>> features(ne);
  report.extractors.resize(ne);
  run_pool(config.workers, ne, [&](std::size_t i) {
    auto& record = report.extractors[i];
    record.extractor = config.extractors[i];
    try {
      features[i] = cache->get(config.extractors[i], samples, split, config.extractor_settings, seed);
      record.feature_dim = static_cast<std::size_t>(features[i]->train.cols());
      record.train_seconds = features[i]->train_seconds;
      record.extract_seconds = features[i]->extract_seconds;
    } catch (const std::exception& e) {
      record.failure = e.what();
    }
  });

  const std::size_t nc = config.classifiers.size();
  report.cells.resize(ne * nc);
  run_pool(config.workers, ne * nc, [&](std::size_t k) {
    const std::size_t i = k / nc, j = k % nc;
    auto& cell = report.cells[k];
    cell.extractor = config.extractors[i];
    cell.classifier = config.classifiers[j].algorithm;
    if (!features[i]) {
      cell.failure = "feature extraction failed: " + report.extractors[i].failure.value_or("unknown");
      return;
    }
    cell.extract_seconds = features[i]->extract_seconds;
    try {
      const auto start = Clock::now();
      auto model = fit_classifier(features[i]->train, y_train, config.classifiers[j],
                                  cell_seed(seed, cell.extractor, cell.classifier));
      cell.train_seconds = seconds_since(start);
      const auto g = per_gender_accuracy(model->predict(features[i]->test), y_test);
      cell.average_accuracy = g.average;
      cell.male_accuracy = g.male;
      cell.female_accuracy = g.female;
      cell.male_total = g.male_total;
      cell.male_correct = g.male_correct;
      cell.female_total = g.female_total;
      cell.female_correct = g.female_correct;
      cell.warnings = model->warnings();
    } catch (const std::exception& e) {
      cell.failure = e.what();
    }
  });
  return report;
}

FingerTable run_finger_analysis(const std::vector<LabeledSample>& samples, const BenchConfig& config,
                                std::uint64_t seed, FeatureCache* cache) {
  FeatureCache local;
  if (!cache) cache = &local;
  const DatasetSplit split = make_split(samples, config, seed);
  const auto features = cache->get(config.finger_extractor, samples, split, config.extractor_settings, seed);
  const auto& cfg = config.classifier(config.finger_classifier);
  auto model = fit_classifier(features->train, labels_of(samples, split.train), cfg,
                              cell_seed(seed, config.finger_extractor, config.finger_classifier));
  const Labels predicted = model->predict(features->test);
  const Labels truth = labels_of(samples, split.test);

  FingerTable table;
  table.extractor = config.finger_extractor;
  table.classifier = config.finger_classifier;
  for (auto f : kAllFingers) {
    FingerRow row;
    row.finger = f;
    std::size_t correct = 0;
    for (std::size_t t = 0; t < split.test.size(); ++t) {
      if (samples[split.test[t]].finger != f) continue;
      ++row.samples;
      correct += predicted[t] == truth[t] ? 1 : 0;
    }
    if (row.samples) row.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(row.samples);
    table.rows.push_back(row);
  }
  aggregate_fingers(table);
  return table;
}

std::vector<TimingRow> run_timing(const std::vector<LabeledSample>& samples, const BenchConfig& config,
                                  std::uint64_t seed, FeatureCache* cache) {
  FeatureCache local;
  if (!cache) cache = &local;
  const DatasetSplit split = make_split(samples, config, seed);
  const Labels y_train = labels_of(samples, split.train);
  if (split.test.empty()) throw std::invalid_argument("timing: empty test split");
  const std::size_t largest = *std::max_element(config.batch_sizes.begin(), config.batch_sizes.end());
  std::vector<GrayImage> pool;
  pool.reserve(largest);
  for (std::size_t k = 0; k < largest; ++k) pool.push_back(samples[split.test[k % split.test.size()]].image);

  std::vector<TimingRow> rows;
  for (std::size_t i = 0; i < config.extractors.size(); ++i) {
    const ExtractorId id = config.extractors[i];
    std::shared_ptr<const ExtractedFeatures> features;
    std::string failure;
    try {
      features = cache->get(id, samples, split, config.extractor_settings, seed);
    } catch (const std::exception& e) {
      failure = std::string("feature extraction failed: ") + e.what();
    }
    for (const auto& cfg : config.classifiers) {
      std::unique_ptr<Classifier> model;
      std::string cell_failure = failure;
      if (features) {
        try {
          model = fit_classifier(features->train, y_train, cfg, cell_seed(seed, id, cfg.algorithm));
        } catch (const std::exception& e) {
          cell_failure = e.what();
        }
      }
      for (std::size_t b : config.batch_sizes) {
        TimingRow row{id, cfg.algorithm, b, 0.0, 0, std::nullopt};
        if (!model) {
          row.failure = cell_failure;
          rows.push_back(row);
          continue;
        }
        const std::span<const GrayImage> batch(pool.data(), b);
        auto infer = [&] { return model->predict(to_feature_matrix(features->extractor->extract(batch))).size(); };
        infer();  // warm-up, untimed
        const auto start = Clock::now();
        double elapsed = 0.0;
        do {
          if (infer() != b) throw std::logic_error("timing: prediction count mismatch");
          ++row.repeats;
          elapsed = seconds_since(start);
        } while (elapsed < config.timing_min_seconds);
        row.seconds = elapsed / static_cast<double>(row.repeats);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

}  // namespace rb

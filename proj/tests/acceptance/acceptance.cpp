// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            run all criteria
//   acceptance --only 5   run a subset (repeatable)

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "classifier_oracles.hpp"
#include "gradcheck.hpp"
#include "reference_conv.hpp"
#include "ridgebench/bench/bench.hpp"
#include "ridgebench/classify/knn.hpp"
#include "ridgebench/classify/svm.hpp"
#include "ridgebench/classify/tree.hpp"
#include "ridgebench/explain/grad_cam.hpp"
#include "ridgebench/features/classical.hpp"
#include "ridgebench/tensor/nn.hpp"
#include "ridgebench/tensor/ops.hpp"

namespace {

using namespace rb;
using namespace rb::testing;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = true;
  std::vector<std::string> parts;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    parts.push_back(what + (ok ? "" : " [FAIL]"));
  }
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// 1. Gradient audit

double audit_ops(std::size_t trials) {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  auto keep = [&](const GradCheck& r) { worst = std::max(worst, r.max_rel_error); };
  for (std::size_t trial = 0; trial < trials; ++trial) {
    auto x = random_tensor({2, 2, 5, 5}, rng);
    auto w = random_tensor({3, 2, 3, 3}, rng);
    auto b = random_tensor({3}, rng);
    auto gamma = random_tensor({3}, rng);
    auto beta = random_tensor({3}, rng);
    auto proj = random_values(2 * 3 * 5 * 5, rng);
    const std::size_t rate = 1 + trial % 3;
    ConvSpec s{2, 3, 3, 1 + trial % 2, rate, ConvSpec::same_padding(3, rate)};
    auto stats = RunningStats::make(3);
    auto projected = [&](const Tensor& y) {
      std::vector<double> c(y.numel());
      std::copy_n(proj.begin(), c.size(), c.begin());
      return weighted_sum(y, c);
    };
    auto net = [&] {
      auto y = conv2d(x, w, b, s);
      y = batch_norm(y, gamma, beta, stats, NormMode::train);
      return projected(leaky_relu(y, 0.01));
    };
    for (auto* t : {&x, &w, &gamma, &beta}) keep(check_gradient(net, *t));
    // Batch norm cancels the conv bias, so the bias is audited on the conv alone.
    auto conv_only = [&] { return projected(conv2d(x, w, b, s)); };
    keep(check_gradient(conv_only, b));
    auto eval_norm = [&] { return projected(relu(batch_norm(conv2d(x, w, b, s), gamma, beta, stats, NormMode::eval))); };
    for (auto* t : {&x, &w, &b, &gamma, &beta}) keep(check_gradient(eval_norm, *t));

    auto h = random_tensor({2, 6}, rng);
    auto lw = random_tensor({4, 6}, rng);
    auto lb = random_tensor({4}, rng);
    std::vector<int> cls{static_cast<int>(trial % 4), static_cast<int>((trial + 1) % 4)};
    std::vector<double> sc = random_values(6, rng), sh = random_values(6, rng);
    auto head = [&] { return softmax_cross_entropy(linear(affine_columns(sigmoid(h), sc, sh), lw, lb), cls); };
    for (auto* t : {&h, &lw, &lb}) keep(check_gradient(head, *t));

    auto img = random_tensor({2, 2, 2, 3}, rng);
    auto other = random_tensor({2, 1, 4, 6}, rng);
    auto target = random_tensor({2, 3, 4, 6}, rng, false);
    auto shape_ops = [&] {
      auto up = upsample_nearest(img, 2);
      auto cat = concat_channels(up, other);
      auto r = reshape(cat, {2, 3, 4, 6});
      auto m = mul(r, scale(r, 0.5));
      auto pooled = global_avg_pool(sub(m, r));
      return add(add(mse_loss(r, target), mean(select_row(pooled, 1))), scale(sum(relu(r)), 0.1));
    };
    for (auto* t : {&img, &other}) keep(check_gradient(shape_ops, *t));
  }
  return worst;
}

double audit_encoder(EncoderVariant v) {
  auto model = Autoencoder::build(EncoderArch::make(v, 32, 4), 21);
  std::mt19937_64 rng(7);
  const auto x = random_tensor({2, 1, 32, 32}, rng);
  const auto coeffs = random_values(2 * kLatentDim, rng);
  auto loss = [&] { return weighted_sum(model.encoder()(x, NormMode::train), coeffs); };
  double worst = check_gradient(loss, x, sample_indices(x.numel(), 40, rng)).max_rel_error;
  const auto params = model.parameters();
  for (const auto& e : params.entries()) {
    if (!e.trainable || e.name.rfind("encoder", 0) != 0) continue;
    worst = std::max(worst, check_gradient(loss, e.tensor, sample_indices(e.tensor.numel(), 3, rng)).max_rel_error);
  }
  return worst;
}

Outcome criterion_gradients() {
  Outcome o;
  const auto start = Clock::now();
  const double ops = audit_ops(100);
  o.check(ops < 1e-4, "ops max rel err " + fmt(ops) + " < 1e-4");
  for (auto v : {EncoderVariant::vgg, EncoderVariant::resnet, EncoderVariant::ddc_resnet}) {
    const double e = audit_encoder(v);
    o.check(e < 1e-3, std::string(to_string(v)) + " " + fmt(e) + " < 1e-3");
  }
  const double secs = seconds_since(start);
  o.check(secs < 300, "runtime " + fmt(secs) + " s < 300 s");
  return o;
}

// ---------------------------------------------------------------------------
// 2. Transform oracles

RealMatrix uniform_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  RealMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// Orthonormal 2-D DFT by direct double summation.
std::vector<std::complex<double>> naive_dft2(const RealMatrix& f) {
  const std::size_t rows = f.rows(), cols = f.cols();
  std::vector<std::complex<double>> out(rows * cols);
  for (std::size_t k = 0; k < rows; ++k)
    for (std::size_t l = 0; l < cols; ++l) {
      std::complex<double> acc = 0.0;
      for (std::size_t m = 0; m < rows; ++m)
        for (std::size_t n = 0; n < cols; ++n) {
          const double phase = -2.0 * std::numbers::pi * (double(m * k) / double(rows) + double(n * l) / double(cols));
          acc += f(m, n) * std::polar(1.0, phase);
        }
      out[k * cols + l] = acc / std::sqrt(double(rows * cols));
    }
  return out;
}

Outcome criterion_transforms() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(2);

  double fft_err = 0.0;
  for (std::size_t n : {4, 8, 16}) {
    for (int trial = 0; trial < 5; ++trial) {
      const RealMatrix f = uniform_matrix(n, n, rng);
      const auto fast = fft2_orthonormal(f);
      const auto slow = naive_dft2(f);
      for (std::size_t i = 0; i < slow.size(); ++i) {
        fft_err = std::max({fft_err, std::abs(fast[2 * i] - slow[i].real()), std::abs(fast[2 * i + 1] - slow[i].imag())});
      }
    }
  }
  o.check(fft_err < 1e-10, "fft vs double sum " + fmt(fft_err) + " < 1e-10");

  const RealMatrix image = uniform_matrix(256, 256, rng);
  const double energy = image.squaredNorm();
  double parseval = 0.0;
  for (std::size_t levels = 1; levels <= 8; ++levels) {
    const auto p = haar_pyramid(image, levels);
    double total = 0.0;
    for (const auto& band : p.bands) total += band.squaredNorm();
    parseval = std::max(parseval, std::abs(total - energy));
  }
  o.check(parseval < 1e-9, "dwt parseval levels 1..8 " + fmt(parseval) + " < 1e-9");

  double rebuild = 0.0, eigen = 0.0;
  for (auto [rows, cols] : {std::pair{32, 32}, std::pair{40, 24}, std::pair{24, 40}, std::pair{64, 64}}) {
    const Eigen::MatrixXd a = uniform_matrix(rows, cols, rng);
    const auto svd = jacobi_svd(a);
    const Eigen::MatrixXd rebuilt = svd.u * svd.singular_values.asDiagonal() * svd.v.transpose();
    rebuild = std::max(rebuild, (rebuilt - a).cwiseAbs().maxCoeff());
    const Eigen::MatrixXd gram =
        rows >= cols ? Eigen::MatrixXd(a.transpose() * a) : Eigen::MatrixXd(a * a.transpose());
    const Eigen::VectorXd lambdas = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues().reverse();
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
      eigen = std::max(eigen, std::abs(svd.singular_values(i) - std::sqrt(std::max(0.0, lambdas(i)))));
    }
  }
  o.check(rebuild < 1e-8, "svd reconstruction " + fmt(rebuild) + " < 1e-8");
  o.check(eigen < 1e-7, "svd vs eigen oracle " + fmt(eigen) + " < 1e-7");

  const double secs = seconds_since(start);
  o.check(secs < 60, "runtime " + fmt(secs) + " s < 60 s");
  return o;
}

// ---------------------------------------------------------------------------
// 3. Dilation equivalence

Outcome criterion_dilation() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, 1000);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rate = 2 + pick(rng) % 5;
    const std::size_t kernel = pick(rng) % 2 ? 3 : 5;
    const std::size_t in = 1 + pick(rng) % 3, out = 1 + pick(rng) % 4;
    const std::size_t stride = 1 + pick(rng) % 2;
    const std::size_t h = 9 + pick(rng) % 12, w = 9 + pick(rng) % 12;
    const std::size_t pad = ConvSpec::same_padding(kernel, rate);
    const auto x = random_tensor({2, in, h, w}, rng, false);
    const auto k = random_tensor({out, in, kernel, kernel}, rng, false);
    const auto b = random_tensor({out}, rng, false);
    const auto dilated = conv2d(x, k, b, ConvSpec{in, out, kernel, stride, rate, pad});
    const std::size_t big = rate * (kernel - 1) + 1;
    const auto plain = conv2d(x, inflate_kernel(k, rate), b, ConvSpec{in, out, big, stride, 1, pad});
    if (dilated.shape() != plain.shape()) {
      o.check(false, "shape mismatch at trial " + std::to_string(trial));
      return o;
    }
    for (std::size_t i = 0; i < plain.numel(); ++i) worst = std::max(worst, std::abs(dilated.at(i) - plain.at(i)));
  }
  o.check(worst < 1e-12, "100 trials max abs diff " + fmt(worst) + " < 1e-12");
  return o;
}

// ---------------------------------------------------------------------------
// 4. Classifier oracles

bool knn_matches_scan() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureMatrix train(300, 8);
  for (Eigen::Index i = 0; i < train.size(); ++i) train.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < 20; ++i) train.row(280 + i) = train.row(i * 3);
  Labels y(300);
  for (auto& v : y) v = static_cast<int>(rng() % 2);
  y[0] = 0;
  y[1] = 1;
  FeatureMatrix queries(1000, 8);
  for (Eigen::Index i = 0; i < queries.size(); ++i) queries.data()[i] = 1.3 * g(rng);
  for (Eigen::Index i = 0; i < 50; ++i) queries.row(i) = train.row(i * 5);

  for (std::size_t k : {1u, 3u, 5u}) {
    KnnClassifier knn(k);
    knn.fit(train, y, 0);
    const auto nn = knn.neighbors(queries);
    const auto pred = knn.predict(queries);
    const FeatureMatrix zt = knn.standardizer().apply(train);
    const FeatureMatrix zq = knn.standardizer().apply(queries);
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
      std::vector<std::pair<double, std::size_t>> scan;
      for (Eigen::Index t = 0; t < zt.rows(); ++t) scan.emplace_back((zq.row(q) - zt.row(t)).squaredNorm(), t);
      std::sort(scan.begin(), scan.end());
      std::size_t female = 0;
      for (std::size_t i = 0; i < k; ++i) {
        if (nn[static_cast<std::size_t>(q)][i] != scan[i].second) return false;
        female += static_cast<std::size_t>(y[scan[i].second]);
      }
      if (pred[static_cast<std::size_t>(q)] != (2 * female > k ? 1 : 0)) return false;
    }
  }
  return true;
}

std::size_t split_fixtures_matching() {
  std::size_t matching = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t n = 6 + (seed * 7) % 45;
    const std::size_t dim = 1 + seed % 5;
    const auto d = integer_fixture(n, dim, 2 + static_cast<int>(seed % 6), seed);
    const auto t = as_targets(d.y);
    std::vector<double> residual(n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 1);
    for (auto& r : residual) r = g(rng);
    bool ok = true;
    for (auto criterion : {SplitCriterion::info_gain, SplitCriterion::gain_ratio, SplitCriterion::squared_error}) {
      const auto& targets = criterion == SplitCriterion::squared_error ? residual : t;
      const auto got = best_split(d.x, targets, criterion);
      const auto want = brute_force_split(d.x, targets, all_rows(d.x), criterion);
      if (got.has_value() != want.found) ok = false;
      else if (want.found && (got->feature != want.feature || got->threshold != want.threshold ||
                              std::abs(got->score - want.score) > 1e-9)) ok = false;
    }
    matching += ok ? 1 : 0;
  }
  return matching;
}

Outcome criterion_classifiers() {
  Outcome o;
  o.check(knn_matches_scan(), "knn == brute-force scan on 1000 queries, k 1/3/5");
  const std::size_t splits = split_fixtures_matching();
  o.check(splits == 20, "tree splits match enumeration on " + std::to_string(splits) + "/20 fixtures");

  constexpr double kTol = 1e-3;
  double kkt = 0.0, objective = 0.0;
  std::size_t problems = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (auto kind : {KernelKind::linear, KernelKind::rbf, KernelKind::poly}) {
      for (double c : {1.0, 10.0}) {
        const auto p = random_problem(seed, kind);
        const auto r = smo_solve(p.gram, p.y, c, kTol);
        const Eigen::VectorXd f = p.gram * p.y.cwiseProduct(r.alpha);
        for (Eigen::Index i = 0; i < p.y.size(); ++i) {
          const double a = r.alpha(i);
          const double margin = p.y(i) * (f(i) + r.bias);
          double violation = 0.0;
          if (a < 0 || a > c) violation = 1.0;
          else if (a == 0.0) violation = std::max(0.0, 1.0 - margin);
          else if (a == c) violation = std::max(0.0, margin - 1.0);
          else violation = std::abs(margin - 1.0);
          kkt = std::max(kkt, violation);
        }
        kkt = std::max(kkt, std::abs(p.y.dot(r.alpha)));
        objective = std::max(objective, std::abs(svm_dual_objective(p.gram, p.y, r.alpha) -
                                                 qp_oracle_objective(p.gram, p.y, c)));
        ++problems;
      }
    }
  }
  o.check(kkt <= kTol, "smo kkt violation " + fmt(kkt) + " <= 1e-3 over " + std::to_string(problems) + " problems");
  o.check(objective < 1e-4, "smo vs qp oracle objective " + fmt(objective) + " < 1e-4");
  return o;
}

// ---------------------------------------------------------------------------
// 5. Synthetic end-to-end gate (shared with 8)

constexpr std::size_t kFolds = 5;

BenchConfig gate_config() {
  BenchConfig config = BenchConfig::desk();
  config.synth.subjects = 60;
  return config;
}

// Fold k holds out subjects 2j and 2j + 1 for every j with j mod kFolds == k,
// so each fold tests six males and six females.
DatasetSplit fold_split(const std::vector<LabeledSample>& samples, std::size_t subjects, std::size_t fold) {
  DatasetSplit split;
  std::set<std::string> train_subjects, test_subjects;
  for (std::size_t s = 0; s < subjects; ++s) {
    ((s / 2) % kFolds == fold ? test_subjects : train_subjects).insert(subject_name(s));
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (test_subjects.count(samples[i].subject_id) ? split.test : split.train).push_back(i);
  }
  split.train_subjects.assign(train_subjects.begin(), train_subjects.end());
  split.test_subjects.assign(test_subjects.begin(), test_subjects.end());
  assert_subject_disjoint(samples, split);
  return split;
}

struct FoldModel {
  DatasetSplit split;
  std::shared_ptr<const ExtractedFeatures> features;
  std::unique_ptr<Classifier> head;
};

struct CrossValidation {
  std::vector<LabeledSample> samples;
  std::vector<double> fold_accuracy;
  double accuracy = 0.0;  // pooled over all held-out images
  double seconds = 0.0;
  FoldModel first_fold;
};

// DDC-ResNet + fcnet, extractor and head trained on the training subjects of each fold.
CrossValidation cross_validate(const BenchConfig& config) {
  const auto start = Clock::now();
  CrossValidation cv;
  cv.samples = load_bench_samples(config);
  std::size_t correct = 0, total = 0;
  for (std::size_t fold = 0; fold < kFolds; ++fold) {
    FoldModel m;
    m.split = fold_split(cv.samples, config.synth.subjects, fold);
    FeatureCache cache;
    m.features = cache.get(ExtractorId::ddc_resnet, cv.samples, m.split, config.extractor_settings, kSeed + fold);
    m.head = fit_classifier(m.features->train, labels_of(cv.samples, m.split.train),
                            config.classifier(Algorithm::fcnet), kSeed + fold);
    const Labels truth = labels_of(cv.samples, m.split.test);
    const Labels predicted = m.head->predict(m.features->test);
    std::size_t k = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) k += predicted[i] == truth[i] ? 1 : 0;
    cv.fold_accuracy.push_back(100.0 * static_cast<double>(k) / static_cast<double>(truth.size()));
    correct += k;
    total += truth.size();
    if (fold == 0) cv.first_fold = std::move(m);
  }
  cv.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(total);
  cv.seconds = seconds_since(start);
  return cv;
}

CrossValidation& gate_run() {
  static CrossValidation run = cross_validate(gate_config());
  return run;
}

std::string fold_list(const std::vector<double>& folds) {
  std::string out;
  for (double f : folds) out += (out.empty() ? "" : " ") + fmt(f, 4);
  return out;
}

Outcome criterion_synthetic_gate() {
  Outcome o;
  auto& run = gate_run();
  o.check(run.accuracy >= 90.0, "ddc_resnet+fcnet 5-fold subject-disjoint " + fmt(run.accuracy, 4) +
                                    "% >= 90% (folds " + fold_list(run.fold_accuracy) + ")");
  BenchConfig control = gate_config();
  control.synth.set_period_gap(0.5 * (control.synth.male_period.mean + control.synth.female_period.mean), 0.0);
  const auto zero = cross_validate(control);
  o.check(std::abs(zero.accuracy - 50.0) <= 10.0, "zero-gap control " + fmt(zero.accuracy, 4) +
                                                      "% within 50 +- 10 (folds " + fold_list(zero.fold_accuracy) +
                                                      ")");
  const double secs = run.seconds + zero.seconds;
  o.check(secs < 1800, "runtime " + fmt(secs) + " s < 1800 s");
  return o;
}

// ---------------------------------------------------------------------------
// 6 and 7. Matrix harness, finger and timing reports

BenchConfig grid_config() {
  BenchConfig config = BenchConfig::desk();
  config.synth.subjects = 20;
  return config;
}

struct GridRun {
  BenchConfig config = grid_config();
  std::vector<LabeledSample> samples = load_bench_samples(config);
  FeatureCache cache;
};

GridRun& grid_run() {
  static GridRun run;
  return run;
}

Outcome criterion_matrix() {
  Outcome o;
  const auto start = Clock::now();
  auto& grid = grid_run();
  const auto first = run_matrix(grid.samples, grid.config, kSeed, &grid.cache);
  FeatureCache fresh;
  const auto second = run_matrix(grid.samples, grid.config, kSeed, &fresh);
  std::size_t populated = 0;
  for (const auto& cell : first.cells) populated += cell.average_accuracy && !cell.failure ? 1 : 0;
  o.check(first.cells.size() == 54 && populated == 54,
          std::to_string(populated) + "/" + std::to_string(first.cells.size()) + " cells populated of 54");
  const bool same = report_to_json(first, TimingFields::exclude).dump() ==
                    report_to_json(second, TimingFields::exclude).dump();
  o.check(same, std::string("same-seed JSON ") + (same ? "identical" : "differs"));
  const auto problems = validate_report(first);
  o.check(problems.empty(), std::to_string(problems.size()) + " report violations");
  const double secs = seconds_since(start);
  o.check(secs < 2700, "runtime " + fmt(secs) + " s < 2700 s");
  return o;
}

Outcome criterion_fingers_and_timing() {
  Outcome o;
  auto& grid = grid_run();
  const FingerTable table = run_finger_analysis(grid.samples, grid.config, kSeed, &grid.cache);
  double worst = 0.0;
  bool complete = table.rows.size() == 10;
  auto gap = [&](const std::optional<double>& got, double want) {
    if (!got) complete = false;
    else worst = std::max(worst, std::abs(*got - want));
  };
  double left = 0.0, right = 0.0;
  std::optional<Finger> best;
  double best_value = -1.0;
  for (std::size_t i = 0; complete && i < 10; ++i) {
    if (!table.rows[i].accuracy) {
      complete = false;
      break;
    }
    const double v = *table.rows[i].accuracy;
    (i < 5 ? left : right) += v / 5.0;
    if (v > best_value) {
      best_value = v;
      best = table.rows[i].finger;
    }
  }
  for (std::size_t p = 0; complete && p < 5; ++p) {
    gap(table.pair_means[p], 0.5 * (*table.rows[p].accuracy + *table.rows[p + 5].accuracy));
  }
  if (complete) {
    gap(table.left_mean, left);
    gap(table.right_mean, right);
  }
  o.check(complete && worst < 1e-12, "finger pair/hand means max diff " + fmt(worst) + " < 1e-12");
  o.check(complete && table.best_finger == best, "best finger is the argmax row");

  const auto rows = run_timing(grid.samples, grid.config, kSeed, &grid.cache);
  std::map<std::pair<ExtractorId, Algorithm>, std::map<std::size_t, double>> by_combo;
  std::size_t failures = 0;
  for (const auto& r : rows) {
    if (r.failure || !(r.seconds > 0)) ++failures;
    else by_combo[{r.extractor, r.classifier}][r.batch_size] = r.seconds;
  }
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (const auto& [combo, times] : by_combo) {
    double previous = 0.0;
    for (std::size_t b : kTimingBatchSizes) {
      const auto it = times.find(b);
      if (it == times.end()) {
        ++failures;
        continue;
      }
      if (previous > 0) worst_ratio = std::min(worst_ratio, it->second / previous);
      previous = it->second;
    }
  }
  o.check(failures == 0 && by_combo.size() == 54,
          std::to_string(by_combo.size()) + " timed combinations, " + std::to_string(failures) + " failures");
  o.check(worst_ratio >= 0.9, "timing min t(next)/t(prev) " + fmt(worst_ratio) + " >= 0.9");
  return o;
}

// ---------------------------------------------------------------------------
// 8. Grad-CAM

double toy_case_error() {
  const std::vector<double> x = {0.1, 0.9, 0.4, 0.0, 0.3, 0.7, 0.8, 0.2, 0.5};
  std::vector<double> m = {1, 2, 0, 1, 1, 1, 0, 2, 1, 3, 3, 3, 3, 3, 3, 3, 3, 0};
  Tensor input = Tensor::from({1, 1, 3, 3}, x, true);
  const Tensor act = conv2d(input, Tensor::from({2, 1, 1, 1}, {2.0, -1.0}), Tensor::from({2}, {0.5, 0.0}),
                            ConvSpec{1, 2, 1, 1, 1, 0});
  backward(sum(mul(act, Tensor::from({1, 2, 3, 3}, m))));
  const Heatmap h = cam_from_activation(act, 6, "toy", 1);
  // Channel weights 1 and 8/3 give ReLU(0.5 - (2/3)x), normalized by its max 0.5.
  double worst = std::abs(h.channel_weights[0] - 1.0) + std::abs(h.channel_weights[1] - 8.0 / 3.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double want = std::max(0.0, 0.5 - 2.0 / 3.0 * x[i]) / 0.5;
    worst = std::max(worst, std::abs(h.values[i] - want));
  }
  return worst;
}

Outcome criterion_grad_cam() {
  Outcome o;
  auto& run = gate_run();
  const FoldModel& model = run.first_fold;
  Encoder& encoder = model.features->extractor->model()->encoder();
  const Classifier& head = *model.head;

  std::size_t violations = 0, nonzero = 0, checked = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& sample = run.samples[model.split.test[i % model.split.test.size()]];
    GradCamOptions options;
    options.target_class = static_cast<int>(i % 2);
    const Heatmap h = grad_cam(encoder, head, sample.image, options);
    double max = 0.0;
    for (double v : h.values) {
      if (v < 0.0) ++violations;
      max = std::max(max, v);
    }
    if (h.raw_max > 0) {
      ++nonzero;
      if (max != 1.0) ++violations;
    } else if (max != 0.0) {
      ++violations;
    }
    for (double v : h.upsampled.pixels()) violations += v < 0.0 || v > 1.0 ? 1 : 0;
    if (h.upsampled.width() != 256 || h.upsampled.height() != 256) ++violations;
    ++checked;
  }
  o.check(violations == 0, "invariants on " + std::to_string(checked) + " images: " + std::to_string(violations) +
                               " violations, " + std::to_string(nonzero) + " nonzero maps");

  const double toy = toy_case_error();
  o.check(toy < 1e-10, "toy " + fmt(toy) + " < 1e-10");

  constexpr std::size_t kSources = 40;
  double mass = 0.0;
  std::size_t maps = 0;
  for (std::size_t i = 0; i < kSources; ++i) {
    const auto& sample = run.samples[model.split.test[(i * 7) % model.split.test.size()]];
    for (auto q : {Quadrant::top_left, Quadrant::top_right, Quadrant::bottom_left, Quadrant::bottom_right}) {
      GradCamOptions options;
      options.target_class = sample.gender == Gender::female ? 1 : 0;
      const Heatmap h = grad_cam(encoder, head, ridge_quadrant_fixture(sample.image, q), options);
      mass += quadrant_mass(h.upsampled).as_array()[static_cast<std::size_t>(q)];
      ++maps;
    }
  }
  mass /= static_cast<double>(maps);
  o.check(mass >= 0.6, "locality mean mass in signal quadrant " + fmt(mass) + " >= 0.60 over " +
                           std::to_string(maps) + " maps");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-8"};
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion_gradients},   {2, criterion_transforms},     {3, criterion_dilation},
      {4, criterion_classifiers}, {5, criterion_synthetic_gate}, {6, criterion_matrix},
      {7, criterion_fingers_and_timing}, {8, criterion_grad_cam}};

  bool all = true;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome.check(false, std::string("error: ") + e.what());
    }
    std::string detail;
    for (const auto& p : outcome.parts) detail += (detail.empty() ? "" : "; ") + p;
    std::cout << "criterion " << id << (outcome.pass ? " PASS: " : " FAIL: ") << detail << " ("
              << fmt(seconds_since(start), 4) << " s)" << std::endl;
    all = all && outcome.pass;
  }
  return all ? 0 : 1;
}

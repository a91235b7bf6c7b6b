#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "ridgebench/bench/bench.hpp"
#include "ridgebench/data/image_io.hpp"
#include "ridgebench/explain/grad_cam.hpp"

namespace {

using namespace rb;

struct GlobalOptions {
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::string profile = "desk";
};

BenchConfig resolve_config(const GlobalOptions& g) {
  if (g.config_path.empty()) return BenchConfig::for_profile(g.profile);
  std::ifstream in(g.config_path);
  if (!in) throw std::runtime_error("cannot open config " + g.config_path);
  auto j = nlohmann::json::parse(in);
  if (!j.contains("profile")) j["profile"] = g.profile;
  return BenchConfig::from_json(j);
}

std::vector<LabeledSample> samples_for(BenchConfig& config, const std::string& manifest) {
  if (!manifest.empty()) config.manifest = manifest;
  std::cerr << (config.manifest ? "loading " + config.manifest->string() : std::string("synthesizing dataset"))
            << "\n";
  return load_bench_samples(config);
}

int finish_report(const BenchmarkReport& report, const std::filesystem::path& out) {
  for (const auto& path : emit_report(report, out)) std::cout << path.string() << "\n";
  const auto problems = validate_report(report);
  for (const auto& p : problems) std::cerr << "assertion failed: " << p << "\n";
  return problems.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fingerprint gender-classification benchmark"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for splits, training and classifiers");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--profile", g.profile, "Built-in profile")->check(CLI::IsMember({"desk", "paper"}));

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic fingerprint dataset with a manifest");
  std::optional<std::size_t> subjects, impressions, size;
  std::optional<double> gap;
  synth->add_option("--subjects", subjects);
  synth->add_option("--impressions", impressions, "Impressions per finger");
  synth->add_option("--size", size, "Image side in pixels");
  synth->add_option("--gap", gap, "Male minus female ridge period (px)");

  // train-extractor
  auto* train = app.add_subcommand("train-extractor", "Train an autoencoder and save its encoder");
  std::string variant = "ddc_resnet", manifest;
  std::optional<std::size_t> iterations;
  train->add_option("--variant", variant)->check(CLI::IsMember({"vgg", "resnet", "ddc_resnet"}));
  train->add_option("--manifest", manifest, "Training images (default: configured dataset)");
  train->add_option("--iterations", iterations);

  // extract
  auto* extract = app.add_subcommand("extract", "Write one feature vector per image as CSV");
  std::string extractor_name = "fft", model_stem;
  extract->add_option("--extractor", extractor_name)
      ->check(CLI::IsMember({"fft", "dwt", "svd", "resnet", "vgg", "ddc_resnet"}));
  extract->add_option("--manifest", manifest);
  extract->add_option("--model", model_stem, "Checkpoint stem for neural extractors");

  // bench
  auto* bench = app.add_subcommand("bench", "Run benchmark tables");
  bench->require_subcommand(1);
  bench->add_option("--manifest", manifest);
  std::optional<std::size_t> workers;
  bench->add_option("--workers", workers, "Matrix worker threads");
  auto* matrix = bench->add_subcommand("matrix", "Extractor × classifier accuracy grid");
  auto* fingers = bench->add_subcommand("fingers", "Per-finger accuracy of the best combination");
  auto* timing = bench->add_subcommand("timing", "Inference time at batch sizes 10/100/1000");

  // explain
  auto* explain = app.add_subcommand("explain", "Grad-CAM heatmaps for an encoder with an fcnet head");
  std::vector<std::string> images;
  std::string target = "predicted";
  std::optional<std::size_t> block;
  std::size_t limit = 8, output_size = 256;
  double alpha = 0.4;
  explain->add_option("--model", model_stem, "Checkpoint stem")->required();
  explain->add_option("--manifest", manifest, "Samples used to fit the head (default: configured dataset)");
  explain->add_option("--image", images, "Images to explain (default: first --limit samples)");
  explain->add_option("--limit", limit);
  explain->add_option("--class", target)->check(CLI::IsMember({"male", "female", "predicted"}));
  explain->add_option("--block", block, "Encoder block (default: last)");
  explain->add_option("--size", output_size, "Heatmap side in pixels");
  explain->add_option("--alpha", alpha, "Overlay blend weight");

  CLI11_PARSE(app, argc, argv);

  try {
    BenchConfig config = resolve_config(g);
    const std::filesystem::path out = g.out;

    if (*synth) {
      auto spec = config.synth;
      if (subjects) spec.subjects = *subjects;
      if (impressions) spec.impressions_per_finger = *impressions;
      if (size) spec.image_size = *size;
      if (gap) spec.set_period_gap(0.5 * (spec.male_period.mean + spec.female_period.mean), *gap);
      spec.seed = g.seed;
      std::cout << write_synth_dataset(spec, out).string() << "\n";
      return 0;
    }

    if (*train) {
      const auto samples = samples_for(config, manifest);
      std::vector<GrayImage> imgs;
      for (const auto& s : samples) imgs.push_back(s.image);
      auto model = Autoencoder::build(
          EncoderArch::make(*parse_variant(variant), imgs.front().width(), config.extractor_settings.base_width),
          g.seed);
      TrainConfig tc = config.extractor_settings.train;
      if (iterations) tc.iterations = *iterations;
      tc.seed = g.seed;
      const auto result = train_autoencoder(model, imgs, tc);
      std::filesystem::create_directories(out);
      save_model(model, out / variant);
      std::cerr << "final loss " << result.loss_history.back() << "\n";
      std::cout << (out / variant).string() << ".ckpt\n";
      return 0;
    }

    if (*extract) {
      const auto samples = samples_for(config, manifest);
      const ExtractorId id = *parse_extractor(extractor_name);
      std::vector<FeatureVector> features;
      std::vector<GrayImage> imgs;
      for (const auto& s : samples) imgs.push_back(s.image);
      if (is_neural(id)) {
        if (model_stem.empty()) throw std::invalid_argument("--model is required for neural extractors");
        auto model = load_model(model_stem);
        features = encode(model, imgs);
      } else {
        features = FeatureExtractor::fit(id, {}, config.extractor_settings, g.seed)->extract(imgs);
      }
      std::vector<FeatureRow> rows;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        rows.push_back({samples[i].subject_id, std::string(to_string(samples[i].finger)),
                        std::string(to_string(samples[i].gender)), features[i]});
      }
      std::filesystem::create_directories(out);
      const auto path = out / ("features_" + extractor_name + ".csv");
      std::ofstream file(path);
      write_feature_csv(file, rows);
      std::cout << path.string() << "\n";
      return 0;
    }

    if (*bench) {
      if (workers) config.workers = *workers;
      const auto samples = samples_for(config, manifest);
      FeatureCache cache;
      BenchmarkReport report;
      report.seed = g.seed;
      report.config = config.to_json();
      if (*matrix) {
        report = run_matrix(samples, config, g.seed, &cache);
      } else if (*fingers) {
        report.fingers = run_finger_analysis(samples, config, g.seed, &cache);
      } else if (*timing) {
        report.timing = run_timing(samples, config, g.seed, &cache);
        report.notes.push_back("timing: each batch is repeated until " + std::to_string(config.timing_min_seconds) +
                               " s have elapsed and the mean is reported");
      }
      return finish_report(report, out);
    }

    if (*explain) {
      auto model = load_model(model_stem);
      const auto samples = samples_for(config, manifest);
      std::vector<GrayImage> imgs;
      for (const auto& s : samples) imgs.push_back(s.image);
      Labels y;
      for (const auto& s : samples) y.push_back(s.gender == Gender::female ? 1 : 0);
      const auto head = fit_classifier(to_feature_matrix(encode(model, imgs)), y,
                                       config.classifier(Algorithm::fcnet), g.seed);
      std::vector<std::pair<std::string, GrayImage>> targets;
      if (images.empty()) {
        for (std::size_t i = 0; i < std::min(limit, samples.size()); ++i) {
          targets.emplace_back(samples[i].subject_id + "_" + std::string(to_string(samples[i].finger)) + "_" +
                                   std::to_string(samples[i].impression),
                               samples[i].image);
        }
      } else {
        for (const auto& path : images) {
          targets.emplace_back(std::filesystem::path(path).stem().string(),
                               load_image(path, model.arch().input_size));
        }
      }
      for (const auto& [stem, image] : targets) {
        GradCamOptions options;
        options.block = block;
        options.output_size = output_size;
        if (target == "predicted") {
          std::vector<GrayImage> one{image};
          options.target_class = head->predict(to_feature_matrix(encode(model, one)))[0];
        } else {
          options.target_class = target == "female" ? 1 : 0;
        }
        const Heatmap h = grad_cam(model.encoder(), *head, image, options);
        write_explanation(out, stem, h, image, alpha);
        std::cout << (out / (stem + ".json")).string() << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

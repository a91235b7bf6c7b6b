#include <fstream>
#include <set>

#include "ridgebench/bench/bench.hpp"

namespace rb {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

json period_json(const PeriodDistribution& p) { return {{"mean", p.mean}, {"sd", p.sd}}; }

PeriodDistribution period_from(const json& j, PeriodDistribution p, const std::string& where) {
  reject_unknown(j, {"mean", "sd"}, where);
  read(j, "mean", p.mean);
  read(j, "sd", p.sd);
  return p;
}

json synth_json(const SynthSpec& s) {
  return {{"subjects", s.subjects},
          {"impressions_per_finger", s.impressions_per_finger},
          {"image_size", s.image_size},
          {"male_period", period_json(s.male_period)},
          {"female_period", period_json(s.female_period)},
          {"pattern_mix", s.pattern_mix},
          {"noise_level", s.noise_level},
          {"jitter", s.jitter},
          {"seed", s.seed}};
}

SynthSpec synth_from(const json& j, SynthSpec s) {
  reject_unknown(j, {"subjects", "impressions_per_finger", "image_size", "male_period", "female_period",
                     "pattern_mix", "noise_level", "jitter", "seed", "period_gap"},
                 "dataset.synth");
  read(j, "subjects", s.subjects);
  read(j, "impressions_per_finger", s.impressions_per_finger);
  read(j, "image_size", s.image_size);
  if (j.contains("male_period")) s.male_period = period_from(j["male_period"], s.male_period, "male_period");
  if (j.contains("female_period")) {
    s.female_period = period_from(j["female_period"], s.female_period, "female_period");
  }
  if (j.contains("period_gap")) {
    s.set_period_gap(0.5 * (s.male_period.mean + s.female_period.mean), j["period_gap"].get<double>());
  }
  read(j, "pattern_mix", s.pattern_mix);
  read(j, "noise_level", s.noise_level);
  read(j, "jitter", s.jitter);
  read(j, "seed", s.seed);
  s.validate();
  return s;
}

ExtractorId extractor_from(const json& j) {
  const auto name = j.get<std::string>();
  const auto id = parse_extractor(name);
  if (!id) throw std::invalid_argument("config: unknown extractor '" + name + "'");
  return *id;
}

Algorithm algorithm_from(const json& j) {
  const auto name = j.get<std::string>();
  const auto a = parse_algorithm(name);
  if (!a) throw std::invalid_argument("config: unknown classifier '" + name + "'");
  return *a;
}

std::vector<ClassifierConfig> default_classifiers() {
  std::vector<ClassifierConfig> out;
  for (auto a : kAllAlgorithms) out.push_back(ClassifierConfig::defaults(a));
  return out;
}

}  // namespace

BenchConfig BenchConfig::desk() {
  BenchConfig c;
  c.classifiers = default_classifiers();
  return c;
}

BenchConfig BenchConfig::paper() {
  BenchConfig c = desk();
  c.profile = "paper";
  c.synth = SynthSpec::paper();
  c.extractor_settings.train = TrainConfig{};
  return c;
}

BenchConfig BenchConfig::for_profile(std::string_view name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  throw std::invalid_argument("unknown profile '" + std::string(name) + "' (expected desk or paper)");
}

const ClassifierConfig& BenchConfig::classifier(Algorithm a) const {
  for (const auto& c : classifiers) {
    if (c.algorithm == a) return c;
  }
  throw std::invalid_argument("config: classifier " + std::string(to_string(a)) + " is not configured");
}

nlohmann::json BenchConfig::to_json() const {
  json extractor_names = json::array();
  for (auto e : extractors) extractor_names.push_back(std::string(to_string(e)));
  json classifier_names = json::array();
  json params = json::object();
  for (const auto& c : classifiers) {
    classifier_names.push_back(std::string(to_string(c.algorithm)));
    params[std::string(to_string(c.algorithm))] = c.to_json()["params"];
  }
  json dataset = {{"synth", synth_json(synth)}};
  dataset["manifest"] = manifest ? json(manifest->string()) : json(nullptr);
  const auto& t = extractor_settings.train;
  return {{"profile", profile},
          {"dataset", dataset},
          {"split", {{"train_parts", train_parts}, {"test_parts", test_parts}}},
          {"extractors",
           {{"enabled", extractor_names},
            {"fft_mode", extractor_settings.fft_mode == SpectrumMode::magnitude ? "magnitude" : "log_magnitude"},
            {"dwt_levels", extractor_settings.dwt_levels},
            {"base_width", extractor_settings.base_width},
            {"train", {{"batch_size", t.batch_size}, {"iterations", t.iterations}, {"learning_rate", t.learning_rate}}}}},
          {"classifiers", {{"enabled", classifier_names}, {"params", params}}},
          {"fingers",
           {{"extractor", std::string(to_string(finger_extractor))},
            {"classifier", std::string(to_string(finger_classifier))}}},
          {"timing", {{"batch_sizes", batch_sizes}, {"min_seconds", timing_min_seconds}}},
          {"workers", workers}};
}

BenchConfig BenchConfig::from_json(const nlohmann::json& j) {
  reject_unknown(j, {"profile", "dataset", "split", "extractors", "classifiers", "fingers", "timing", "workers"},
                 "config");
  BenchConfig c = for_profile(j.value("profile", std::string("desk")));
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    reject_unknown(d, {"manifest", "synth"}, "dataset");
    if (d.contains("manifest") && !d["manifest"].is_null()) c.manifest = d["manifest"].get<std::string>();
    if (d.contains("synth")) c.synth = synth_from(d["synth"], c.synth);
  }
  if (j.contains("split")) {
    reject_unknown(j["split"], {"train_parts", "test_parts"}, "split");
    read(j["split"], "train_parts", c.train_parts);
    read(j["split"], "test_parts", c.test_parts);
  }
  if (j.contains("extractors")) {
    const auto& e = j["extractors"];
    reject_unknown(e, {"enabled", "fft_mode", "dwt_levels", "base_width", "train"}, "extractors");
    if (e.contains("enabled")) {
      c.extractors.clear();
      for (const auto& name : e["enabled"]) c.extractors.push_back(extractor_from(name));
    }
    if (e.contains("fft_mode")) {
      const auto mode = e["fft_mode"].get<std::string>();
      if (mode == "magnitude") c.extractor_settings.fft_mode = SpectrumMode::magnitude;
      else if (mode == "log_magnitude") c.extractor_settings.fft_mode = SpectrumMode::log_magnitude;
      else throw std::invalid_argument("config: fft_mode must be magnitude or log_magnitude");
    }
    read(e, "dwt_levels", c.extractor_settings.dwt_levels);
    read(e, "base_width", c.extractor_settings.base_width);
    if (e.contains("train")) {
      auto& t = c.extractor_settings.train;
      reject_unknown(e["train"], {"batch_size", "iterations", "learning_rate"}, "extractors.train");
      read(e["train"], "batch_size", t.batch_size);
      read(e["train"], "iterations", t.iterations);
      read(e["train"], "learning_rate", t.learning_rate);
      t.validate();
    }
  }
  if (j.contains("classifiers")) {
    const auto& cl = j["classifiers"];
    reject_unknown(cl, {"enabled", "params"}, "classifiers");
    std::vector<Algorithm> enabled;
    if (cl.contains("enabled")) {
      for (const auto& name : cl["enabled"]) enabled.push_back(algorithm_from(name));
    } else {
      for (const auto& cc : c.classifiers) enabled.push_back(cc.algorithm);
    }
    const json params = cl.value("params", json::object());
    for (const auto& [name, value] : params.items()) {
      if (!parse_algorithm(name)) throw std::invalid_argument("config: unknown classifier '" + name + "'");
    }
    c.classifiers.clear();
    for (auto a : enabled) {
      const std::string name(to_string(a));
      c.classifiers.push_back(ClassifierConfig::from_json(a, params.contains(name) ? params[name] : json()));
    }
  }
  if (j.contains("fingers")) {
    reject_unknown(j["fingers"], {"extractor", "classifier"}, "fingers");
    if (j["fingers"].contains("extractor")) c.finger_extractor = extractor_from(j["fingers"]["extractor"]);
    if (j["fingers"].contains("classifier")) c.finger_classifier = algorithm_from(j["fingers"]["classifier"]);
  }
  if (j.contains("timing")) {
    reject_unknown(j["timing"], {"batch_sizes", "min_seconds"}, "timing");
    read(j["timing"], "batch_sizes", c.batch_sizes);
    read(j["timing"], "min_seconds", c.timing_min_seconds);
  }
  read(j, "workers", c.workers);
  if (c.workers == 0) throw std::invalid_argument("config: workers must be ≥ 1");
  if (c.train_parts == 0 || c.test_parts == 0) throw std::invalid_argument("config: split parts must be ≥ 1");
  return c;
}

BenchConfig BenchConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return from_json(json::parse(in));
}

std::vector<LabeledSample> load_bench_samples(const BenchConfig& config) {
  if (config.manifest) return load_samples(read_manifest(*config.manifest), config.synth.image_size);
  return synth_dataset(config.synth);
}

Labels labels_of(const std::vector<LabeledSample>& samples, std::span<const std::size_t> indices) {
  Labels y;
  y.reserve(indices.size());
  for (auto i : indices) y.push_back(samples[i].gender == Gender::female ? 1 : 0);
  return y;
}

}  // namespace rb

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ridgebench/bench/bench.hpp"

namespace rb {

namespace {

using nlohmann::json;

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json opt(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

template <class T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

ExtractorId extractor_from(const json& j) {
  const auto id = parse_extractor(j.get<std::string>());
  if (!id) throw std::invalid_argument("report: unknown extractor " + j.dump());
  return *id;
}

Algorithm algorithm_from(const json& j) {
  const auto a = parse_algorithm(j.get<std::string>());
  if (!a) throw std::invalid_argument("report: unknown classifier " + j.dump());
  return *a;
}

Finger finger_from(const json& j) {
  const auto f = parse_finger(j.get<std::string>());
  if (!f) throw std::invalid_argument("report: unknown finger " + j.dump());
  return *f;
}

std::string fixed(const std::optional<double>& v, int digits) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
  return buf;
}

std::string csv_num(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

const char* kFingerPairNames[5] = {"F1", "F2", "F3", "F4", "F5"};

}  // namespace

nlohmann::json report_to_json(const BenchmarkReport& r, TimingFields timing) {
  const bool with_time = timing == TimingFields::include;
  json extractors = json::array();
  for (const auto& e : r.extractors) {
    json x = {{"extractor", std::string(to_string(e.extractor))},
              {"feature_dim", e.feature_dim},
              {"failure", opt(e.failure)}};
    if (with_time) {
      x["train_seconds"] = e.train_seconds;
      x["extract_seconds"] = e.extract_seconds;
    }
    extractors.push_back(x);
  }
  json cells = json::array();
  for (const auto& c : r.cells) {
    json x = {{"extractor", std::string(to_string(c.extractor))},
              {"classifier", std::string(to_string(c.classifier))},
              {"failure", opt(c.failure)},
              {"average_accuracy", opt(c.average_accuracy)},
              {"male_accuracy", opt(c.male_accuracy)},
              {"female_accuracy", opt(c.female_accuracy)},
              {"male_total", c.male_total},
              {"male_correct", c.male_correct},
              {"female_total", c.female_total},
              {"female_correct", c.female_correct},
              {"warnings", c.warnings}};
    if (with_time) {
      x["train_seconds"] = c.train_seconds;
      x["extract_seconds"] = c.extract_seconds;
    }
    cells.push_back(x);
  }
  json fingers = nullptr;
  if (r.fingers) {
    const auto& t = *r.fingers;
    json rows = json::array();
    for (const auto& row : t.rows) {
      rows.push_back({{"finger", std::string(to_string(row.finger))},
                      {"accuracy", opt(row.accuracy)},
                      {"samples", row.samples}});
    }
    json pairs = json::array();
    for (std::size_t k = 0; k < 5; ++k) pairs.push_back({{"pair", kFingerPairNames[k]}, {"mean", opt(t.pair_means[k])}});
    fingers = {{"extractor", std::string(to_string(t.extractor))},
               {"classifier", std::string(to_string(t.classifier))},
               {"rows", rows},
               {"pair_means", pairs},
               {"left_mean", opt(t.left_mean)},
               {"right_mean", opt(t.right_mean)},
               {"best_finger", t.best_finger ? json(std::string(to_string(*t.best_finger))) : json(nullptr)}};
  }
  json out = {{"schema_version", r.schema_version},
              {"seed", r.seed},
              {"config", r.config},
              {"train_samples", r.train_samples},
              {"test_samples", r.test_samples},
              {"extractors", extractors},
              {"cells", cells},
              {"fingers", fingers},
              {"notes", r.notes}};
  json rows = json::array();
  for (const auto& t : r.timing) {
    json x = {{"extractor", std::string(to_string(t.extractor))},
              {"classifier", std::string(to_string(t.classifier))},
              {"batch_size", t.batch_size},
              {"failure", opt(t.failure)}};
    if (with_time) {
      x["seconds"] = t.seconds;
      x["repeats"] = t.repeats;
    }
    rows.push_back(x);
  }
  out["timing"] = rows;
  return out;
}

BenchmarkReport report_from_json(const nlohmann::json& j) {
  BenchmarkReport r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kReportSchemaVersion) {
    throw std::invalid_argument("report: unsupported schema version " + std::to_string(r.schema_version));
  }
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config = j.at("config");
  r.train_samples = j.at("train_samples").get<std::size_t>();
  r.test_samples = j.at("test_samples").get<std::size_t>();
  for (const auto& x : j.at("extractors")) {
    ExtractorRecord e;
    e.extractor = extractor_from(x.at("extractor"));
    e.feature_dim = x.at("feature_dim").get<std::size_t>();
    e.failure = opt_from<std::string>(x, "failure");
    e.train_seconds = x.value("train_seconds", 0.0);
    e.extract_seconds = x.value("extract_seconds", 0.0);
    r.extractors.push_back(e);
  }
  for (const auto& x : j.at("cells")) {
    MatrixCell c;
    c.extractor = extractor_from(x.at("extractor"));
    c.classifier = algorithm_from(x.at("classifier"));
    c.failure = opt_from<std::string>(x, "failure");
    c.average_accuracy = opt_from<double>(x, "average_accuracy");
    c.male_accuracy = opt_from<double>(x, "male_accuracy");
    c.female_accuracy = opt_from<double>(x, "female_accuracy");
    c.male_total = x.at("male_total").get<std::size_t>();
    c.male_correct = x.at("male_correct").get<std::size_t>();
    c.female_total = x.at("female_total").get<std::size_t>();
    c.female_correct = x.at("female_correct").get<std::size_t>();
    c.warnings = x.at("warnings").get<std::vector<std::string>>();
    c.train_seconds = x.value("train_seconds", 0.0);
    c.extract_seconds = x.value("extract_seconds", 0.0);
    r.cells.push_back(c);
  }
  if (!j.at("fingers").is_null()) {
    const auto& f = j["fingers"];
    FingerTable t;
    t.extractor = extractor_from(f.at("extractor"));
    t.classifier = algorithm_from(f.at("classifier"));
    for (const auto& x : f.at("rows")) {
      t.rows.push_back({finger_from(x.at("finger")), opt_from<double>(x, "accuracy"), x.at("samples").get<std::size_t>()});
    }
    const auto& pairs = f.at("pair_means");
    if (pairs.size() != 5) throw std::invalid_argument("report: expected 5 finger pair means");
    for (std::size_t k = 0; k < 5; ++k) t.pair_means[k] = opt_from<double>(pairs[k], "mean");
    t.left_mean = opt_from<double>(f, "left_mean");
    t.right_mean = opt_from<double>(f, "right_mean");
    if (!f.at("best_finger").is_null()) t.best_finger = finger_from(f["best_finger"]);
    r.fingers = t;
  }
  for (const auto& x : j.at("timing")) {
    r.timing.push_back({extractor_from(x.at("extractor")), algorithm_from(x.at("classifier")),
                        x.at("batch_size").get<std::size_t>(), x.value("seconds", 0.0),
                        x.value("repeats", std::size_t{0}), opt_from<std::string>(x, "failure")});
  }
  r.notes = j.at("notes").get<std::vector<std::string>>();
  return r;
}

std::string report_markdown(const BenchmarkReport& r) {
  std::ostringstream md;
  md << "# Benchmark report\n\nseed " << r.seed << ", " << r.train_samples << " train / " << r.test_samples
     << " test samples (subject-disjoint). Cells show overall accuracy (%) over male/female recall.\n";
  if (!r.cells.empty()) {
    std::vector<ExtractorId> rows;
    std::vector<Algorithm> cols;
    for (const auto& c : r.cells) {
      if (std::find(rows.begin(), rows.end(), c.extractor) == rows.end()) rows.push_back(c.extractor);
      if (std::find(cols.begin(), cols.end(), c.classifier) == cols.end()) cols.push_back(c.classifier);
    }
    md << "\n## Extractor × classifier accuracy\n\n| extractor |";
    for (auto a : cols) md << ' ' << to_string(a) << " |";
    md << "\n|---|";
    for (std::size_t k = 0; k < cols.size(); ++k) md << "---|";
    md << '\n';
    for (auto e : rows) {
      md << "| " << to_string(e) << " |";
      for (auto a : cols) {
        const MatrixCell* c = r.cell(e, a);
        if (!c) md << " |";
        else if (c->failure) md << " failed |";
        else md << ' ' << fixed(c->average_accuracy, 3) << "<br>" << fixed(c->male_accuracy, 4) << '/'
                << fixed(c->female_accuracy, 4) << " |";
      }
      md << '\n';
    }
    std::vector<std::string> failures;
    for (const auto& c : r.cells) {
      if (c.failure) failures.push_back(std::string(to_string(c.extractor)) + "+" + std::string(to_string(c.classifier)) + ": " + *c.failure);
    }
    if (!failures.empty()) {
      md << "\nFailed cells:\n\n";
      for (const auto& f : failures) md << "- " << f << '\n';
    }
  }
  if (r.fingers) {
    const auto& t = *r.fingers;
    md << "\n## Per-finger accuracy (" << to_string(t.extractor) << " + " << to_string(t.classifier)
       << ")\n\n| finger | accuracy (%) | samples |\n|---|---|---|\n";
    for (const auto& row : t.rows) {
      md << "| " << to_string(row.finger) << " | " << fixed(row.accuracy, 3) << " | " << row.samples << " |\n";
    }
    md << "\n| pair | mean (%) |\n|---|---|\n";
    for (std::size_t k = 0; k < 5; ++k) md << "| " << kFingerPairNames[k] << " | " << fixed(t.pair_means[k], 3) << " |\n";
    md << "| L average | " << fixed(t.left_mean, 3) << " |\n| R average | " << fixed(t.right_mean, 3) << " |\n";
    md << "\nBest finger: " << (t.best_finger ? std::string(to_string(*t.best_finger)) : "n/a") << '\n';
  }
  if (!r.timing.empty()) {
    std::vector<std::size_t> sizes;
    for (const auto& t : r.timing) {
      if (std::find(sizes.begin(), sizes.end(), t.batch_size) == sizes.end()) sizes.push_back(t.batch_size);
    }
    md << "\n## Inference time (s)\n\n| extractor | classifier |";
    for (auto b : sizes) md << " batch " << b << " |";
    md << "\n|---|---|";
    for (std::size_t k = 0; k < sizes.size(); ++k) md << "---|";
    md << '\n';
    for (std::size_t i = 0; i < r.timing.size(); i += sizes.size()) {
      md << "| " << to_string(r.timing[i].extractor) << " | " << to_string(r.timing[i].classifier) << " |";
      for (std::size_t k = 0; k < sizes.size() && i + k < r.timing.size(); ++k) {
        const auto& t = r.timing[i + k];
        md << ' ' << (t.failure ? std::string("failed") : fixed(t.seconds, 6)) << " |";
      }
      md << '\n';
    }
  }
  if (!r.notes.empty()) {
    md << "\n## Notes\n\n";
    for (const auto& n : r.notes) md << "- " << n << '\n';
  }
  return md.str();
}

CsvTables report_csv(const BenchmarkReport& r) {
  CsvTables out;
  std::ostringstream m;
  m << "extractor,classifier,average_accuracy,male_accuracy,female_accuracy,train_seconds,extract_seconds,failure\n";
  for (const auto& c : r.cells) {
    m << to_string(c.extractor) << ',' << to_string(c.classifier) << ',' << csv_num(c.average_accuracy) << ','
      << csv_num(c.male_accuracy) << ',' << csv_num(c.female_accuracy) << ',' << csv_num(c.train_seconds) << ','
      << csv_num(c.extract_seconds) << ',' << csv_text(c.failure.value_or("")) << '\n';
  }
  out.matrix = m.str();
  std::ostringstream f;
  f << "finger,accuracy,samples\n";
  if (r.fingers) {
    for (const auto& row : r.fingers->rows) {
      f << to_string(row.finger) << ',' << csv_num(row.accuracy) << ',' << row.samples << '\n';
    }
  }
  out.fingers = f.str();
  std::ostringstream t;
  t << "extractor,classifier,batch_size,seconds,repeats,failure\n";
  for (const auto& row : r.timing) {
    t << to_string(row.extractor) << ',' << to_string(row.classifier) << ',' << row.batch_size << ','
      << csv_num(row.seconds) << ',' << row.repeats << ',' << csv_text(row.failure.value_or("")) << '\n';
  }
  out.timing = t.str();
  return out;
}

std::vector<std::filesystem::path> emit_report(const BenchmarkReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create report directory " + dir.string() + ": " + ec.message());
  const auto csv = report_csv(report);
  const std::vector<std::pair<std::string, std::string>> files = {
      {"report.json", report_to_json(report).dump(2) + "\n"},
      {"report.md", report_markdown(report)},
      {"matrix.csv", csv.matrix},
      {"fingers.csv", csv.fingers},
      {"timing.csv", csv.timing}};
  std::vector<std::filesystem::path> written;
  for (const auto& [name, body] : files) {
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out || !(out << body)) throw std::runtime_error("cannot write " + path.string());
    written.push_back(path);
  }
  return written;
}

std::vector<std::string> validate_report(const BenchmarkReport& r) {
  std::vector<std::string> errors;
  auto label = [](ExtractorId e, Algorithm a) {
    return std::string(to_string(e)) + "+" + std::string(to_string(a));
  };
  for (const auto& c : r.cells) {
    const auto name = label(c.extractor, c.classifier);
    if (c.failure) {
      if (c.failure->empty()) errors.push_back(name + ": failed without a reason");
      continue;
    }
    if (!c.average_accuracy) {
      errors.push_back(name + ": missing average accuracy");
      continue;
    }
    if (*c.average_accuracy < 0.0 || *c.average_accuracy > 100.0) errors.push_back(name + ": average out of range");
    for (const auto& v : {c.male_accuracy, c.female_accuracy}) {
      if (v && (*v < 0.0 || *v > 1.0)) errors.push_back(name + ": per-gender accuracy out of range");
    }
    const double total = static_cast<double>(c.male_total + c.female_total);
    if (total == 0.0) {
      errors.push_back(name + ": empty test set");
    } else if (std::abs(*c.average_accuracy - 100.0 * static_cast<double>(c.male_correct + c.female_correct) / total) >
               1e-12) {
      errors.push_back(name + ": average does not equal total correct over total");
    }
  }
  const auto& cfg = r.config;
  if (cfg.is_object() && cfg.contains("extractors") && cfg.contains("classifiers") && !r.cells.empty()) {
    const std::size_t expected = cfg["extractors"]["enabled"].size() * cfg["classifiers"]["enabled"].size();
    if (r.cells.size() != expected) {
      errors.push_back("grid has " + std::to_string(r.cells.size()) + " cells, expected " + std::to_string(expected));
    }
  }
  if (r.fingers) {
    const auto& t = *r.fingers;
    if (t.rows.size() != 10) {
      errors.push_back("finger table has " + std::to_string(t.rows.size()) + " rows, expected 10");
    } else {
      FingerTable check = t;
      aggregate_fingers(check);
      auto differs = [](const std::optional<double>& a, const std::optional<double>& b) {
        return a.has_value() != b.has_value() || (a && std::abs(*a - *b) > 1e-12);
      };
      for (std::size_t k = 0; k < 5; ++k) {
        if (differs(check.pair_means[k], t.pair_means[k])) errors.push_back(std::string("finger pair mean ") + kFingerPairNames[k] + " inconsistent");
      }
      if (differs(check.left_mean, t.left_mean)) errors.push_back("left-hand mean inconsistent");
      if (differs(check.right_mean, t.right_mean)) errors.push_back("right-hand mean inconsistent");
    }
  }
  for (std::size_t i = 0; i < r.timing.size(); ++i) {
    const auto& t = r.timing[i];
    const auto name = label(t.extractor, t.classifier) + " batch " + std::to_string(t.batch_size);
    if (t.failure) continue;
    if (!(t.seconds > 0.0) || !std::isfinite(t.seconds)) errors.push_back(name + ": time not positive and finite");
    if (i > 0) {
      const auto& prev = r.timing[i - 1];
      const bool same = prev.extractor == t.extractor && prev.classifier == t.classifier && !prev.failure;
      if (same && t.batch_size > prev.batch_size && t.seconds < 0.9 * prev.seconds) {
        errors.push_back(name + ": faster than batch " + std::to_string(prev.batch_size) + " beyond 10% jitter");
      }
    }
  }
  return errors;
}

}  // namespace rb

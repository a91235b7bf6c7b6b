#include "ridgebench/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "ridgebench/data/image_io.hpp"

namespace rb {

std::string_view to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

std::optional<Gender> parse_gender(std::string_view text) {
  if (text == "male" || text == "M" || text == "m") return Gender::male;
  if (text == "female" || text == "F" || text == "f") return Gender::female;
  return std::nullopt;
}

std::string_view to_string(Finger f) {
  static constexpr std::array<std::string_view, 10> names = {"L1", "L2", "L3", "L4", "L5",
                                                             "R1", "R2", "R3", "R4", "R5"};
  return names[static_cast<std::size_t>(f)];
}

std::optional<Finger> parse_finger(std::string_view text) {
  for (auto f : kAllFingers) {
    if (to_string(f) == text) return f;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("path,", 0) == 0) continue;
    const auto fields = split_csv_line(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 5) throw DatasetError(where + ": expected 5 columns");
    ManifestEntry e;
    e.path = fields[0];
    if (e.path.is_relative()) e.path = base / e.path;
    e.subject_id = fields[1];
    const auto finger = parse_finger(fields[2]);
    if (!finger) throw DatasetError(where + ": unknown finger id '" + fields[2] + "'");
    e.finger = *finger;
    const auto gender = parse_gender(fields[3]);
    if (!gender) throw DatasetError(where + ": unknown gender '" + fields[3] + "'");
    e.gender = *gender;
    try {
      e.impression = std::stoul(fields[4]);
    } catch (const std::exception&) {
      throw DatasetError(where + ": bad impression index '" + fields[4] + "'");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write manifest " + path.string());
  const auto base = path.parent_path();
  out << "path,subject_id,finger_id,gender,impression\n";
  for (const auto& e : entries) {
    auto p = e.path;
    if (p.is_absolute() && !base.empty()) p = std::filesystem::relative(p, base);
    out << p.generic_string() << ',' << e.subject_id << ',' << to_string(e.finger) << ','
        << to_string(e.gender) << ',' << e.impression << '\n';
  }
}

std::vector<LabeledSample> load_samples(const std::vector<ManifestEntry>& entries,
                                        std::size_t target) {
  std::vector<LabeledSample> samples;
  samples.reserve(entries.size());
  for (const auto& e : entries) {
    samples.push_back({load_image(e.path, target), e.subject_id, e.finger, e.gender, e.impression});
  }
  return samples;
}

// ---------------------------------------------------------------------------

DatasetSplit split_subject_disjoint(const std::vector<LabeledSample>& samples, std::uint64_t seed,
                                    std::size_t train_parts, std::size_t test_parts) {
  if (train_parts == 0 || test_parts == 0) {
    throw DatasetError("split_subject_disjoint: ratio parts must be positive");
  }
  std::map<std::string, Gender> subject_gender;
  for (const auto& s : samples) {
    const auto [it, inserted] = subject_gender.emplace(s.subject_id, s.gender);
    if (!inserted && it->second != s.gender) {
      throw DatasetError("subject '" + s.subject_id + "' carries both gender labels");
    }
  }
  const std::size_t total = subject_gender.size();
  if (total < 5) {
    throw DatasetError("split_subject_disjoint: need at least 5 subjects, have " +
                       std::to_string(total));
  }

  std::array<std::vector<std::string>, 2> by_gender;
  for (const auto& [id, g] : subject_gender) by_gender[static_cast<int>(g)].push_back(id);
  for (int g = 0; g < 2; ++g) {
    if (by_gender[g].size() < 2) {
      throw DatasetError("stratification error: " +
                         std::string(to_string(static_cast<Gender>(g))) + " has " +
                         std::to_string(by_gender[g].size()) +
                         " subject(s); at least 2 are needed to populate both sides");
    }
  }

  // Largest-remainder allocation of the test quota across genders.
  const std::size_t parts = train_parts + test_parts;
  const auto test_total = static_cast<std::size_t>(
      std::lround(static_cast<double>(total * test_parts) / static_cast<double>(parts)));
  std::array<std::size_t, 2> quota{};
  std::array<double, 2> remainder{};
  std::size_t assigned = 0;
  for (int g = 0; g < 2; ++g) {
    const double exact = static_cast<double>(by_gender[g].size() * test_total) /
                         static_cast<double>(total);
    quota[g] = static_cast<std::size_t>(std::floor(exact));
    remainder[g] = exact - static_cast<double>(quota[g]);
    assigned += quota[g];
  }
  for (std::size_t left = test_total - assigned; left > 0; --left) {
    const int g = remainder[1] > remainder[0] ? 1 : 0;
    ++quota[g];
    remainder[g] = -1.0;
  }
  for (int g = 0; g < 2; ++g) quota[g] = std::clamp<std::size_t>(quota[g], 1, by_gender[g].size() - 1);

  std::mt19937_64 rng(seed);
  std::set<std::string> test_subjects;
  DatasetSplit split;
  for (int g = 0; g < 2; ++g) {
    auto ids = by_gender[g];
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i < quota[g]) {
        test_subjects.insert(ids[i]);
        split.test_subjects.push_back(ids[i]);
      } else {
        split.train_subjects.push_back(ids[i]);
      }
    }
  }
  std::sort(split.train_subjects.begin(), split.train_subjects.end());
  std::sort(split.test_subjects.begin(), split.test_subjects.end());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (test_subjects.count(samples[i].subject_id) ? split.test : split.train).push_back(i);
  }
  return split;
}

void assert_subject_disjoint(const std::vector<LabeledSample>& samples, const DatasetSplit& split) {
  std::set<std::string> train;
  for (auto i : split.train) train.insert(samples.at(i).subject_id);
  for (auto i : split.test) {
    if (train.count(samples.at(i).subject_id)) {
      throw DatasetError("split is not subject-disjoint: subject '" + samples[i].subject_id +
                         "' appears in train and test");
    }
  }
}

std::map<Finger, std::vector<std::size_t>> per_finger_subsets(
    const std::vector<LabeledSample>& samples, const std::vector<std::size_t>& indices) {
  std::map<Finger, std::vector<std::size_t>> subsets;
  for (auto f : kAllFingers) subsets[f];
  for (auto i : indices) subsets[samples.at(i).finger].push_back(i);
  return subsets;
}

std::map<Finger, std::vector<std::size_t>> per_finger_subsets(
    const std::vector<LabeledSample>& samples) {
  std::vector<std::size_t> all(samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return per_finger_subsets(samples, all);
}

}  // namespace rb

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ridgebench/data/gray_image.hpp"

namespace rb {

enum class Gender : int { male = 0, female = 1 };

std::string_view to_string(Gender g);
std::optional<Gender> parse_gender(std::string_view text);

/// L = left hand, R = right hand; 1 = little finger … 5 = thumb.
enum class Finger : int { L1, L2, L3, L4, L5, R1, R2, R3, R4, R5 };

inline constexpr std::array<Finger, 10> kAllFingers = {
    Finger::L1, Finger::L2, Finger::L3, Finger::L4, Finger::L5,
    Finger::R1, Finger::R2, Finger::R3, Finger::R4, Finger::R5};

std::string_view to_string(Finger f);
std::optional<Finger> parse_finger(std::string_view text);

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledSample {
  GrayImage image;
  std::string subject_id;
  Finger finger = Finger::L1;
  Gender gender = Gender::male;
  std::size_t impression = 0;
};

struct ManifestEntry {
  std::filesystem::path path;
  std::string subject_id;
  Finger finger = Finger::L1;
  Gender gender = Gender::male;
  std::size_t impression = 0;
};

/// Manifest CSV: `path,subject_id,finger_id,gender,impression`. Relative
/// paths are resolved against the manifest's directory on read.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<LabeledSample> load_samples(const std::vector<ManifestEntry>& entries,
                                        std::size_t target = 256);

/// Indices into the sample list, plus the subject ids on each side.
struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
};

/// Partitions subjects (not images) train:test = train_parts:test_parts,
/// stratified by gender.
DatasetSplit split_subject_disjoint(const std::vector<LabeledSample>& samples, std::uint64_t seed,
                                    std::size_t train_parts = 4, std::size_t test_parts = 1);

/// Throws if any subject contributes to both sides.
void assert_subject_disjoint(const std::vector<LabeledSample>& samples, const DatasetSplit& split);

/// Groups sample indices by finger. Always has all ten keys.
std::map<Finger, std::vector<std::size_t>> per_finger_subsets(
    const std::vector<LabeledSample>& samples, const std::vector<std::size_t>& indices);
std::map<Finger, std::vector<std::size_t>> per_finger_subsets(
    const std::vector<LabeledSample>& samples);

}  // namespace rb

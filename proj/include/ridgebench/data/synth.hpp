#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ridgebench/data/dataset.hpp"

namespace rb {

enum class PatternClass : int { whorl, loop, arch };

struct PeriodDistribution {
  double mean = 7.0;  // pixels per ridge
  double sd = 0.4;
};

struct SynthSpec {
  std::size_t subjects = 60;
  std::size_t impressions_per_finger = 3;
  std::size_t image_size = 64;
  PeriodDistribution male_period{7.5, 0.4};
  PeriodDistribution female_period{5.5, 0.4};
  /// Relative weights of whorl, loop, arch.
  std::array<double, 3> pattern_mix{0.30, 0.60, 0.10};
  /// Standard deviation of additive Gaussian pixel noise.
  double noise_level = 0.05;
  /// Peak elastic displacement between impressions, as a fraction of the ridge period.
  double jitter = 0.08;
  std::uint64_t seed = 1;

  /// Male and female periods are `base ± gap/2`.
  void set_period_gap(double base, double gap);
  void validate() const;

  static SynthSpec desk();
  static SynthSpec paper();
};

std::string subject_name(std::size_t subject);
/// Subjects alternate male/female, so any contiguous range is balanced.
Gender subject_gender(std::size_t subject);

/// Deterministic in (spec.seed, subject, finger, impression).
GrayImage synth_fingerprint(const SynthSpec& spec, std::size_t subject, Finger finger,
                            std::size_t impression);

/// Every subject × finger × impression, in that nesting order.
std::vector<LabeledSample> synth_dataset(const SynthSpec& spec);

/// Writes PGM images plus `manifest.csv` into `dir`; returns the manifest path.
std::filesystem::path write_synth_dataset(const SynthSpec& spec, const std::filesystem::path& dir);

}  // namespace rb

#include "ridgebench/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "ridgebench/data/image_io.hpp"

namespace rb {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per key path, e.g. (seed, subject) or (seed, subject, finger).
std::mt19937_64 keyed_rng(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (auto k : keys) h = splitmix(h ^ splitmix(k));
  return std::mt19937_64(h);
}

struct FingerLayout {
  PatternClass pattern = PatternClass::loop;
  double period = 7.0;
  double core_x = 0.0, core_y = 0.0;  // pixels
  double rotation = 0.0;              // radians
  double phase = 0.0;
  double whorl_aspect = 1.0;
  double loop_slant = 0.0;
  double arch_height = 0.0, arch_width = 1.0;
  double mask_a = 1.0, mask_b = 1.0;  // ellipse semi-axes
};

// Smooth displacement field shared by all pixels of one impression.
struct ElasticField {
  double shift_x = 0.0, shift_y = 0.0;
  std::array<double, 2> amp_x{}, amp_y{};
  std::array<double, 2> freq_x{}, freq_y{}, offset{};

  std::pair<double, double> at(double x, double y) const {
    double dx = shift_x, dy = shift_y;
    for (int k = 0; k < 2; ++k) {
      const double arg = freq_x[k] * x + freq_y[k] * y + offset[k];
      dx += amp_x[k] * std::sin(arg);
      dy += amp_y[k] * std::cos(arg);
    }
    return {dx, dy};
  }
};

PatternClass draw_pattern(const std::array<double, 3>& mix, std::mt19937_64& rng) {
  std::discrete_distribution<int> pick(mix.begin(), mix.end());
  return static_cast<PatternClass>(pick(rng));
}

FingerLayout finger_layout(const SynthSpec& spec, std::size_t subject, Finger finger) {
  auto subject_rng = keyed_rng({spec.seed, subject});
  const auto& dist =
      subject_gender(subject) == Gender::male ? spec.male_period : spec.female_period;
  const double subject_period =
      std::max(3.0, std::normal_distribution<double>(dist.mean, dist.sd)(subject_rng));

  auto rng = keyed_rng({spec.seed, subject, 1000 + static_cast<std::uint64_t>(finger)});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double size = static_cast<double>(spec.image_size);

  FingerLayout f;
  f.pattern = draw_pattern(spec.pattern_mix, rng);
  f.period = subject_period * (1.0 + 0.03 * normal(rng));
  f.core_x = size * (0.5 + 0.12 * (unit(rng) - 0.5));
  f.core_y = size * (0.45 + 0.12 * (unit(rng) - 0.5));
  f.rotation = 0.2 * normal(rng);
  f.phase = kTwoPi * unit(rng);
  f.whorl_aspect = 0.85 + 0.3 * unit(rng);
  f.loop_slant = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.15 + 0.25 * unit(rng));
  f.arch_height = size * (0.08 + 0.12 * unit(rng));
  f.arch_width = size * (0.15 + 0.08 * unit(rng));
  f.mask_a = size * (0.38 + 0.06 * unit(rng));
  f.mask_b = size * (0.45 + 0.04 * unit(rng));
  return f;
}

ElasticField elastic_field(const SynthSpec& spec, double period, std::uint64_t subject,
                           Finger finger, std::size_t impression) {
  auto rng = keyed_rng({spec.seed, subject, 1000 + static_cast<std::uint64_t>(finger),
                        1'000'000 + impression});
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Four terms per axis bounded by amplitude/4 each keeps the peak at `amplitude`.
  const double amplitude = spec.jitter * period;
  const double size = static_cast<double>(spec.image_size);
  ElasticField e;
  e.shift_x = 0.25 * amplitude * sym(rng);
  e.shift_y = 0.25 * amplitude * sym(rng);
  for (int k = 0; k < 2; ++k) {
    e.amp_x[k] = 0.25 * amplitude * sym(rng);
    e.amp_y[k] = 0.25 * amplitude * sym(rng);
    // Wavelengths between half and one image width: smooth, low-order warps.
    const double wavelength = size * (0.5 + 0.5 * unit(rng));
    const double angle = kTwoPi * unit(rng);
    e.freq_x[k] = kTwoPi / wavelength * std::cos(angle);
    e.freq_y[k] = kTwoPi / wavelength * std::sin(angle);
    e.offset[k] = kTwoPi * unit(rng);
  }
  return e;
}

// Ridge phase in radians at offset (u, w) from the core, in the finger's
// rotated frame; w grows towards the finger base.
double ridge_phase(const FingerLayout& f, double u, double w) {
  switch (f.pattern) {
    case PatternClass::whorl:
      return kTwoPi * std::hypot(u, w * f.whorl_aspect) / f.period;
    case PatternClass::loop:
      // Concentric arcs above the core, slanted parallel ridges below it.
      if (w < 0.0) return kTwoPi * std::hypot(u, w) / f.period;
      return kTwoPi * std::abs(u - f.loop_slant * w) / f.period;
    case PatternClass::arch: {
      const double bump = f.arch_height * std::exp(-u * u / (2.0 * f.arch_width * f.arch_width));
      return kTwoPi * (w + bump) / f.period;
    }
  }
  return 0.0;
}

}  // namespace

void SynthSpec::set_period_gap(double base, double gap) {
  male_period.mean = base + 0.5 * gap;
  female_period.mean = base - 0.5 * gap;
}

void SynthSpec::validate() const {
  if (subjects == 0) throw DatasetError("synth: subjects must be positive");
  if (impressions_per_finger == 0) throw DatasetError("synth: impressions_per_finger must be positive");
  if (image_size < 8) throw DatasetError("synth: image_size must be at least 8");
  if (!(male_period.mean > 0.0) || !(female_period.mean > 0.0) || male_period.sd < 0.0 ||
      female_period.sd < 0.0) {
    throw DatasetError("synth: ridge periods must be positive with non-negative spread");
  }
  // Equal means are allowed: that is the zero-gap control.
  if (female_period.mean > male_period.mean) {
    throw DatasetError("synth: female ridge period must not exceed the male period");
  }
  if (std::any_of(pattern_mix.begin(), pattern_mix.end(), [](double w) { return w < 0.0; }) ||
      pattern_mix[0] + pattern_mix[1] + pattern_mix[2] <= 0.0) {
    throw DatasetError("synth: pattern_mix weights must be non-negative with positive sum");
  }
  if (noise_level < 0.0 || jitter < 0.0) {
    throw DatasetError("synth: noise_level and jitter must be non-negative");
  }
}

SynthSpec SynthSpec::desk() { return SynthSpec{}; }

SynthSpec SynthSpec::paper() {
  SynthSpec s;
  s.subjects = 200;
  s.image_size = 256;
  s.male_period = {10.0, 0.8};
  s.female_period = {8.0, 0.8};
  return s;
}

std::string subject_name(std::size_t subject) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "S%04zu", subject);
  return buf;
}

Gender subject_gender(std::size_t subject) {
  return subject % 2 == 0 ? Gender::male : Gender::female;
}

GrayImage synth_fingerprint(const SynthSpec& spec, std::size_t subject, Finger finger,
                            std::size_t impression) {
  spec.validate();
  const FingerLayout f = finger_layout(spec, subject, finger);
  const ElasticField warp = elastic_field(spec, f.period, subject, finger, impression);
  auto noise_rng = keyed_rng({spec.seed, subject, 1000 + static_cast<std::uint64_t>(finger),
                              1'000'000 + impression, 0x6e6f697365ULL});
  std::normal_distribution<double> noise(0.0, 1.0);

  const std::size_t n = spec.image_size;
  const double cos_r = std::cos(f.rotation), sin_r = std::sin(f.rotation);
  const double mask_cx = 0.5 * static_cast<double>(n);
  const double mask_cy = 0.5 * static_cast<double>(n);
  const double edge = 0.08;

  GrayImage img(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double x0 = static_cast<double>(c) + 0.5;
      const double y0 = static_cast<double>(r) + 0.5;
      const auto [dx, dy] = warp.at(x0, y0);
      const double x = x0 + dx, y = y0 + dy;

      const double rho = std::hypot((x - mask_cx) / f.mask_a, (y - mask_cy) / f.mask_b);
      const double mask = std::clamp((1.0 - rho) / edge, 0.0, 1.0);

      const double ox = x - f.core_x, oy = y - f.core_y;
      const double u = cos_r * ox + sin_r * oy;
      const double w = -sin_r * ox + cos_r * oy;
      const double ridge = 0.5 + 0.5 * std::cos(ridge_phase(f, u, w) + f.phase);

      // White background, dark ridges inside the contact ellipse.
      double v = 1.0 - mask * 0.85 * ridge;
      if (spec.noise_level > 0.0) v += spec.noise_level * noise(noise_rng);
      img(r, c) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

std::vector<LabeledSample> synth_dataset(const SynthSpec& spec) {
  spec.validate();
  std::vector<LabeledSample> samples;
  samples.reserve(spec.subjects * kAllFingers.size() * spec.impressions_per_finger);
  for (std::size_t s = 0; s < spec.subjects; ++s) {
    for (auto finger : kAllFingers) {
      for (std::size_t k = 0; k < spec.impressions_per_finger; ++k) {
        samples.push_back(
            {synth_fingerprint(spec, s, finger, k), subject_name(s), finger, subject_gender(s), k});
      }
    }
  }
  return samples;
}

std::filesystem::path write_synth_dataset(const SynthSpec& spec, const std::filesystem::path& dir) {
  spec.validate();
  std::filesystem::create_directories(dir / "images");
  std::vector<ManifestEntry> entries;
  for (std::size_t s = 0; s < spec.subjects; ++s) {
    for (auto finger : kAllFingers) {
      for (std::size_t k = 0; k < spec.impressions_per_finger; ++k) {
        const auto rel = std::filesystem::path("images") /
                         (subject_name(s) + "_" + std::string(to_string(finger)) + "_" +
                          std::to_string(k) + ".pgm");
        write_pgm(dir / rel, synth_fingerprint(spec, s, finger, k));
        entries.push_back({rel, subject_name(s), finger, subject_gender(s), k});
      }
    }
  }
  const auto manifest = dir / "manifest.csv";
  write_manifest(manifest, entries);
  return manifest;
}

}  // namespace rb

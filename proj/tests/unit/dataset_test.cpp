#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

#include "ridgebench/data/dataset.hpp"
#include "ridgebench/data/image_io.hpp"
#include "ridgebench/data/synth.hpp"

namespace rb {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("rb_dataset_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_raw_pgm(const fs::path& path, std::size_t w, std::size_t h,
                   const std::function<std::uint8_t(std::size_t, std::size_t)>& value) {
  std::ofstream out(path, std::ios::binary);
  out << "P5\n# test\n" << w << ' ' << h << "\n255\n";
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) out.put(static_cast<char>(value(r, c)));
}

TEST(LoadImage, AllWhiteBecomesOne) {
  const auto dir = scratch_dir("white");
  write_raw_pgm(dir / "w.pgm", 256, 256, [](auto, auto) { return 255; });
  const auto img = load_image(dir / "w.pgm");
  ASSERT_EQ(img.width(), 256u);
  for (double v : img.pixels()) EXPECT_EQ(v, 1.0);
}

TEST(LoadImage, CheckerboardDownsampleAveragesToHalf) {
  const auto dir = scratch_dir("checker");
  write_raw_pgm(dir / "c.pgm", 512, 512, [](auto r, auto c) { return (r + c) % 2 ? 255 : 0; });
  const auto img = load_image(dir / "c.pgm");
  ASSERT_EQ(img.height(), 256u);
  for (double v : img.pixels()) EXPECT_NEAR(v, 0.5, 1e-15);
}

TEST(LoadImage, ResizeMatchesHandBilinear) {
  // 2x2 -> 4x4 with half-pixel centres: output (1,1) samples source (0.25, 0.25).
  GrayImage src(2, 2, std::vector<double>{0.0, 1.0, 2.0, 3.0});
  const auto out = resize_bilinear(src, 4, 4);
  const double fy = 0.25, fx = 0.25;
  const double expected = (1 - fy) * ((1 - fx) * 0.0 + fx * 1.0) + fy * ((1 - fx) * 2.0 + fx * 3.0);
  EXPECT_NEAR(out(1, 1), expected, 1e-15);
  EXPECT_NEAR(out(0, 0), 0.0, 1e-15);  // clamped to the corner
  EXPECT_NEAR(out(3, 3), 3.0, 1e-15);
}

TEST(LoadImage, SaveLoadRoundTripWithinQuantization) {
  const auto dir = scratch_dir("roundtrip");
  SynthSpec spec;
  spec.image_size = 64;
  const auto img = synth_fingerprint(spec, 3, Finger::R2, 1);
  write_pgm(dir / "a.pgm", img);
  write_png_gray(dir / "a.png", img);
  for (const char* name : {"a.pgm", "a.png"}) {
    const auto back = load_image(dir / name, 64);
    for (std::size_t i = 0; i < img.size(); ++i) {
      ASSERT_LE(std::abs(back.pixels()[i] - img.pixels()[i]), 0.5 / 255.0 + 1e-12) << name;
    }
  }
}

TEST(LoadImage, AsciiPgmAndUnsupportedFormat) {
  const auto dir = scratch_dir("formats");
  {
    std::ofstream out(dir / "a.pgm");
    out << "P2\n2 1\n255\n0 255\n";
  }
  const auto img = load_image(dir / "a.pgm", 2);
  EXPECT_DOUBLE_EQ(img(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(img(0, 1), 1.0);
  {
    std::ofstream out(dir / "b.bmp", std::ios::binary);
    out << "BM\x10\x00garbage";
  }
  try {
    load_image(dir / "b.bmp");
    FAIL() << "expected ImageFormatError";
  } catch (const ImageFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("header \"BM"), std::string::npos) << e.what();
  }
  {
    std::ofstream out(dir / "c.pgm");
    out << "P5\n2 2\n65535\n";
  }
  EXPECT_THROW(load_image(dir / "c.pgm"), ImageFormatError);
}

// ---------------------------------------------------------------------------

std::vector<LabeledSample> fake_samples(std::size_t subjects, std::size_t per_subject = 2) {
  std::vector<LabeledSample> out;
  for (std::size_t s = 0; s < subjects; ++s) {
    for (std::size_t k = 0; k < per_subject; ++k) {
      LabeledSample sample;
      sample.subject_id = subject_name(s);
      sample.gender = subject_gender(s);
      sample.finger = kAllFingers[k % 10];
      sample.impression = k;
      out.push_back(sample);
    }
  }
  return out;
}

std::set<std::string> subjects_of(const std::vector<LabeledSample>& samples,
                                  const std::vector<std::size_t>& idx) {
  std::set<std::string> out;
  for (auto i : idx) out.insert(samples[i].subject_id);
  return out;
}

TEST(SplitSubjectDisjoint, TwoHundredSubjectsSplitFourToOne) {
  const auto samples = fake_samples(200);
  const auto split = split_subject_disjoint(samples, 7);
  EXPECT_EQ(split.train_subjects.size(), 160u);
  EXPECT_EQ(split.test_subjects.size(), 40u);
  EXPECT_EQ(subjects_of(samples, split.train).size(), 160u);
  EXPECT_EQ(subjects_of(samples, split.test).size(), 40u);
  EXPECT_EQ(split.train.size() + split.test.size(), samples.size());
}

TEST(SplitSubjectDisjoint, PropertiesAcrossSizesAndSeeds) {
  for (std::size_t n = 5; n <= 61; n += 4) {
    const auto samples = fake_samples(n, 3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto split = split_subject_disjoint(samples, seed);
      const auto train = subjects_of(samples, split.train);
      const auto test = subjects_of(samples, split.test);
      for (const auto& s : test) EXPECT_FALSE(train.count(s)) << s;
      EXPECT_NO_THROW(assert_subject_disjoint(samples, split));
      const double ideal = static_cast<double>(n) / 5.0;
      EXPECT_LE(std::abs(static_cast<double>(test.size()) - ideal), 1.0) << "n=" << n;
      std::set<Gender> train_g, test_g;
      for (auto i : split.train) train_g.insert(samples[i].gender);
      for (auto i : split.test) test_g.insert(samples[i].gender);
      EXPECT_EQ(train_g.size(), 2u);
      EXPECT_EQ(test_g.size(), 2u);
    }
  }
}

TEST(SplitSubjectDisjoint, SeedDeterminism) {
  const auto samples = fake_samples(60);
  const auto a = split_subject_disjoint(samples, 11);
  const auto b = split_subject_disjoint(samples, 11);
  const auto c = split_subject_disjoint(samples, 12);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(a.test_subjects, c.test_subjects);
}

TEST(SplitSubjectDisjoint, Errors) {
  EXPECT_THROW(split_subject_disjoint(fake_samples(4), 0), DatasetError);
  auto one_female = fake_samples(6);
  for (auto& s : one_female) s.gender = Gender::male;
  one_female.front().gender = Gender::female;
  for (auto& s : one_female) {
    if (s.subject_id == one_female.front().subject_id) s.gender = Gender::female;
  }
  EXPECT_THROW(split_subject_disjoint(one_female, 0), DatasetError);
  auto mixed = fake_samples(10);
  mixed[0].gender = Gender::female;  // subject 0 is male elsewhere
  EXPECT_THROW(split_subject_disjoint(mixed, 0), DatasetError);

  DatasetSplit leaky{{0}, {1}, {}, {}};
  EXPECT_THROW(assert_subject_disjoint(fake_samples(5), leaky), DatasetError);
}

TEST(PerFingerSubsets, PartitionsInput) {
  const auto samples = fake_samples(7, 10);
  const auto subsets = per_finger_subsets(samples);
  ASSERT_EQ(subsets.size(), 10u);
  std::vector<std::size_t> all;
  for (const auto& [finger, idx] : subsets) {
    EXPECT_EQ(idx.size(), 7u);
    for (auto i : idx) EXPECT_EQ(samples[i].finger, finger);
    all.insert(all.end(), idx.begin(), idx.end());
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected(samples.size());
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(all, expected);

  const auto empty = per_finger_subsets({});
  EXPECT_EQ(empty.size(), 10u);
  for (const auto& [finger, idx] : empty) EXPECT_TRUE(idx.empty());
}

TEST(Manifest, RoundTrip) {
  const auto dir = scratch_dir("manifest");
  SynthSpec spec;
  spec.subjects = 2;
  spec.impressions_per_finger = 1;
  spec.image_size = 32;
  const auto manifest = write_synth_dataset(spec, dir);
  const auto entries = read_manifest(manifest);
  ASSERT_EQ(entries.size(), 20u);
  EXPECT_EQ(entries[0].subject_id, "S0000");
  EXPECT_EQ(entries[0].gender, Gender::male);
  EXPECT_EQ(entries[10].gender, Gender::female);
  EXPECT_EQ(entries[3].finger, Finger::L4);
  const auto samples = load_samples(entries, 32);
  const auto direct = synth_fingerprint(spec, 1, Finger::R5, 0);
  for (std::size_t i = 0; i < direct.size(); ++i) {
    ASSERT_NEAR(samples[19].image.pixels()[i], direct.pixels()[i], 0.5 / 255.0 + 1e-12);
  }
}

// ---------------------------------------------------------------------------

double pearson(const GrayImage& a, const GrayImage& b) {
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.pixels().begin(), a.pixels().end(), 0.0) / n;
  const double mb = std::accumulate(b.pixels().begin(), b.pixels().end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a.pixels()[i] - ma, db = b.pixels()[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  return sab / std::sqrt(saa * sbb);
}

std::size_t central_row_crossings(const GrayImage& img) {
  const std::size_t r = img.height() / 2;
  double mean = 0;
  for (std::size_t c = 0; c < img.width(); ++c) mean += img(r, c);
  mean /= static_cast<double>(img.width());
  std::size_t crossings = 0;
  for (std::size_t c = 1; c < img.width(); ++c) {
    if ((img(r, c - 1) - mean) * (img(r, c) - mean) < 0) ++crossings;
  }
  return crossings;
}

TEST(SynthFingerprint, DeterministicAndInRange) {
  SynthSpec spec;
  const auto a = synth_fingerprint(spec, 5, Finger::L3, 2);
  const auto b = synth_fingerprint(spec, 5, Finger::L3, 2);
  EXPECT_EQ(a, b);
  for (double v : a.pixels()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  spec.seed = 2;
  EXPECT_NE(synth_fingerprint(spec, 5, Finger::L3, 2), a);
}

TEST(SynthFingerprint, ImpressionsDifferOnlyByJitter) {
  SynthSpec spec;
  spec.noise_level = 0.0;
  for (std::size_t subject = 0; subject < 10; ++subject) {
    for (auto finger : {Finger::L1, Finger::R3, Finger::R5}) {
      const auto a = synth_fingerprint(spec, subject, finger, 0);
      const auto b = synth_fingerprint(spec, subject, finger, 1);
      double mad = 0;
      for (std::size_t i = 0; i < a.size(); ++i) mad += std::abs(a.pixels()[i] - b.pixels()[i]);
      mad /= static_cast<double>(a.size());
      EXPECT_GT(mad, 0.0);
      EXPECT_GT(pearson(a, b), 0.8) << "subject " << subject;
    }
  }
}

TEST(SynthFingerprint, FemaleRowsCrossMoreOften) {
  SynthSpec spec;
  spec.noise_level = 0.0;
  double male = 0, female = 0;
  for (std::size_t s = 0; s < 50; ++s) {
    double count = 0;
    for (auto finger : kAllFingers) count += central_row_crossings(synth_fingerprint(spec, s, finger, 0));
    (subject_gender(s) == Gender::male ? male : female) += count;
  }
  EXPECT_GT(female, male);
}

TEST(SynthFingerprint, ZeroGapPeriodsCoincide) {
  SynthSpec spec;
  spec.set_period_gap(6.5, 0.0);
  EXPECT_NO_THROW(spec.validate());
  EXPECT_EQ(spec.male_period.mean, spec.female_period.mean);
  spec.set_period_gap(6.5, -1.0);
  EXPECT_THROW(spec.validate(), DatasetError);
}

TEST(SynthDataset, LayoutAndBalance) {
  SynthSpec spec;
  spec.subjects = 4;
  spec.image_size = 32;
  const auto samples = synth_dataset(spec);
  ASSERT_EQ(samples.size(), 4u * 10u * 3u);
  std::size_t males = 0;
  for (const auto& s : samples) males += s.gender == Gender::male;
  EXPECT_EQ(males, samples.size() / 2);
  const auto subsets = per_finger_subsets(samples);
  for (const auto& [finger, idx] : subsets) EXPECT_EQ(idx.size(), 12u);
}

}  // namespace
}  // namespace rb

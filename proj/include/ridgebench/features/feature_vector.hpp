#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rb {

enum class ExtractorId { fft, dwt, svd, resnet, vgg, ddc_resnet };

inline constexpr std::array<ExtractorId, 6> kAllExtractors = {
    ExtractorId::fft,    ExtractorId::dwt, ExtractorId::svd,
    ExtractorId::resnet, ExtractorId::vgg, ExtractorId::ddc_resnet};

std::string_view to_string(ExtractorId id);
std::optional<ExtractorId> parse_extractor(std::string_view name);
bool is_neural(ExtractorId id);

struct FeatureVector {
  std::vector<double> values;
  ExtractorId extractor = ExtractorId::fft;

  std::size_t length() const { return values.size(); }
};

/// One row of the feature CSV export.
struct FeatureRow {
  std::string subject_id;
  std::string finger_id;
  std::string gender;
  FeatureVector features;
};

/// Writes `subject_id,finger_id,gender,f0..fK`; every row must have the
/// same length.
void write_feature_csv(std::ostream& out, const std::vector<FeatureRow>& rows);

}  // namespace rb

#include "ridgebench/features/feature_vector.hpp"

#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace rb {

std::string_view to_string(ExtractorId id) {
  switch (id) {
    case ExtractorId::fft: return "fft";
    case ExtractorId::dwt: return "dwt";
    case ExtractorId::svd: return "svd";
    case ExtractorId::resnet: return "resnet";
    case ExtractorId::vgg: return "vgg";
    case ExtractorId::ddc_resnet: return "ddc_resnet";
  }
  return "unknown";
}

std::optional<ExtractorId> parse_extractor(std::string_view name) {
  for (auto id : kAllExtractors) {
    if (to_string(id) == name) return id;
  }
  return std::nullopt;
}

bool is_neural(ExtractorId id) {
  return id == ExtractorId::resnet || id == ExtractorId::vgg || id == ExtractorId::ddc_resnet;
}

void write_feature_csv(std::ostream& out, const std::vector<FeatureRow>& rows) {
  const std::size_t width = rows.empty() ? 0 : rows.front().features.length();
  out << "subject_id,finger_id,gender";
  for (std::size_t i = 0; i < width; ++i) out << ",f" << i;
  out << '\n';
  out << std::setprecision(17);
  for (const auto& row : rows) {
    if (row.features.length() != width) {
      throw std::invalid_argument("write_feature_csv: rows have differing feature lengths");
    }
    out << row.subject_id << ',' << row.finger_id << ',' << row.gender;
    for (double v : row.features.values) out << ',' << v;
    out << '\n';
  }
}

}  // namespace rb

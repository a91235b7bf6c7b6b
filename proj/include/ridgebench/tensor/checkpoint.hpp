#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ridgebench/tensor/nn.hpp"

namespace rb {

// Binary checkpoint layout, all integers little-endian:
//   "RBCK" | version:u32
//   repeated until EOF:
//     name_len:u32 | name (UTF-8) | rank:u32 | dims:u64[rank] | data:f64[prod(dims)]
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointRecord {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

void write_checkpoint(const std::filesystem::path& path, const ParameterList& params);
std::vector<CheckpointRecord> read_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint values into `params` by name. Every entry in `params`
/// must be present with an identical shape.
void load_into(const std::vector<CheckpointRecord>& records, ParameterList& params);

}  // namespace rb

#include "ridgebench/tensor/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace rb {

namespace {

template <class T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <class T>
bool get_le(std::istream& in, T& value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) return false;
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  if constexpr (std::is_same_v<T, double>) {
    value = std::bit_cast<double>(bits);
  } else {
    value = static_cast<T>(bits);
  }
  return true;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const ParameterList& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  out.write("RBCK", 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  for (const auto& e : params.entries()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    const auto& shape = e.tensor.shape();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) put_le<std::uint64_t>(out, d);
    for (double v : e.tensor.data()) put_le<double>(out, v);
  }
  if (!out) throw CheckpointError("write failed for " + path.string());
}

std::vector<CheckpointRecord> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "RBCK", 4) != 0) {
    throw CheckpointError(path.string() + ": bad magic, not an RBCK checkpoint");
  }
  std::uint32_t version = 0;
  if (!get_le(in, version)) throw CheckpointError(path.string() + ": truncated header");
  if (version != kCheckpointVersion) {
    throw CheckpointError(path.string() + ": unsupported version " + std::to_string(version));
  }
  std::vector<CheckpointRecord> records;
  std::uint32_t name_len = 0;
  while (get_le(in, name_len)) {
    CheckpointRecord rec;
    rec.name.resize(name_len);
    std::uint32_t rank = 0;
    if (!in.read(rec.name.data(), name_len) || !get_le(in, rank)) {
      throw CheckpointError(path.string() + ": truncated record");
    }
    for (std::uint32_t i = 0; i < rank; ++i) {
      std::uint64_t d = 0;
      if (!get_le(in, d)) throw CheckpointError(path.string() + ": truncated dims for " + rec.name);
      rec.shape.push_back(static_cast<std::size_t>(d));
    }
    rec.data.resize(shape_numel(rec.shape));
    for (auto& v : rec.data) {
      if (!get_le(in, v)) throw CheckpointError(path.string() + ": truncated data for " + rec.name);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void load_into(const std::vector<CheckpointRecord>& records, ParameterList& params) {
  std::unordered_map<std::string, const CheckpointRecord*> by_name;
  for (const auto& r : records) by_name[r.name] = &r;
  for (const auto& e : params.entries()) {
    auto it = by_name.find(e.name);
    if (it == by_name.end()) throw CheckpointError("checkpoint is missing parameter " + e.name);
    if (it->second->shape != e.tensor.shape()) {
      throw CheckpointError("parameter " + e.name + " has shape " +
                            shape_string(it->second->shape) + " in checkpoint, expected " +
                            shape_string(e.tensor.shape()));
    }
    Tensor t = e.tensor;
    std::copy(it->second->data.begin(), it->second->data.end(), t.mutable_data().begin());
  }
}

}  // namespace rb

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ganduf::io {

/// Binary layout (all integers little-endian):
///   magic "GANDUFA\0" | u32 version | u32 dtype | u32 rank | u32 reserved |
///   u64 extents[rank] | u64 FNV-1a checksum of payload | payload (f64 LE)
inline constexpr std::uint32_t kArrayFormatVersion = 1;
inline constexpr std::uint32_t kDtypeFloat64 = 1;

struct NdArray {
  std::vector<std::uint64_t> shape;
  std::vector<double> data;

  std::size_t element_count() const;
  bool operator==(const NdArray&) const = default;
};

std::uint64_t fnv1a64(const unsigned char* bytes, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

void write_array(std::ostream& out, const NdArray& array);
/// `source` names the stream in error messages.
NdArray read_array(std::istream& in, const std::string& source);

void save_array(const std::filesystem::path& path, const NdArray& array);
NdArray load_array(const std::filesystem::path& path);

/// Checksum of a whole file's bytes (used for provenance of external inputs).
std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace ganduf::io

#include "ganduf/array_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ganduf/error.hpp"

namespace ganduf::io {

namespace {

constexpr std::array<char, 8> kMagic{'G', 'A', 'N', 'D', 'U', 'F', 'A', '\0'};

template <typename T>
void put_le(std::vector<unsigned char>& buf, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<unsigned char>((value >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

void read_exact(std::istream& in, unsigned char* dst, std::size_t n, const std::string& source, const char* what) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw TruncatedError(source + ": truncated while reading " + what);
  }
}

std::vector<unsigned char> encode_payload(const std::vector<double>& data) {
  std::vector<unsigned char> buf;
  buf.reserve(data.size() * 8);
  for (double v : data) put_le(buf, std::bit_cast<std::uint64_t>(v));
  return buf;
}

}  // namespace

std::size_t NdArray::element_count() const {
  std::size_t n = 1;
  for (auto e : shape) n *= static_cast<std::size_t>(e);
  return n;
}

std::uint64_t fnv1a64(const unsigned char* bytes, std::size_t size, std::uint64_t h) {
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_array(std::ostream& out, const NdArray& array) {
  if (array.element_count() != array.data.size()) {
    throw ContractError("array shape does not match its data length");
  }
  const auto payload = encode_payload(array.data);
  std::vector<unsigned char> header(kMagic.begin(), kMagic.end());
  put_le<std::uint32_t>(header, kArrayFormatVersion);
  put_le<std::uint32_t>(header, kDtypeFloat64);
  put_le<std::uint32_t>(header, static_cast<std::uint32_t>(array.shape.size()));
  put_le<std::uint32_t>(header, 0);
  for (auto e : array.shape) put_le<std::uint64_t>(header, e);
  put_le<std::uint64_t>(header, fnv1a64(payload.data(), payload.size()));
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("failed writing array payload");
}

NdArray read_array(std::istream& in, const std::string& source) {
  std::array<unsigned char, 24> fixed{};
  read_exact(in, fixed.data(), fixed.size(), source, "header");
  if (std::memcmp(fixed.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError(source + ": not an array file (bad magic bytes)");
  }
  const auto version = get_le<std::uint32_t>(fixed.data() + 8);
  if (version != kArrayFormatVersion) {
    throw VersionError(source + ": array format version " + std::to_string(version) + " is not supported (reader version " +
                       std::to_string(kArrayFormatVersion) + ")");
  }
  const auto dtype = get_le<std::uint32_t>(fixed.data() + 12);
  if (dtype != kDtypeFloat64) throw FormatError(source + ": unsupported dtype code " + std::to_string(dtype));
  const auto rank = get_le<std::uint32_t>(fixed.data() + 16);
  if (rank > 16) throw FormatError(source + ": implausible rank " + std::to_string(rank));

  std::vector<unsigned char> tail(8 * rank + 8);
  read_exact(in, tail.data(), tail.size(), source, "extents");
  NdArray arr;
  for (std::uint32_t r = 0; r < rank; ++r) arr.shape.push_back(get_le<std::uint64_t>(tail.data() + 8 * r));
  const auto checksum = get_le<std::uint64_t>(tail.data() + 8 * rank);

  const std::size_t count = arr.element_count();
  std::vector<unsigned char> payload(count * 8);
  read_exact(in, payload.data(), payload.size(), source, "payload");
  if (fnv1a64(payload.data(), payload.size()) != checksum) {
    throw ChecksumError(source + ": payload checksum mismatch");
  }
  arr.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) arr.data[i] = std::bit_cast<double>(get_le<std::uint64_t>(payload.data() + 8 * i));
  return arr;
}

void save_array(const std::filesystem::path& path, const NdArray& array) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_array(out, array);
}

NdArray load_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_array(in, path.string());
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace ganduf::io

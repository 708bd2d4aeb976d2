#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spot {

// Binary array container used by the processed-episode layout:
//   "SPVT" | u32 name_len | name | u32 rank | u64 extents[rank] | payload
// The payload is little-endian 64-bit, f64 or i64 depending on the array.
template <typename T>
struct NamedArray {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<T> values;

  std::uint64_t numel() const {
    std::uint64_t n = 1;
    for (auto e : shape) n *= e;
    return n;
  }
};

using ArrayF64 = NamedArray<double>;
using ArrayI64 = NamedArray<std::int64_t>;

void write_array(const std::filesystem::path& path, const std::string& name,
                 std::span<const std::uint64_t> shape, std::span<const double> values);
void write_array(const std::filesystem::path& path, const std::string& name,
                 std::span<const std::uint64_t> shape, std::span<const std::int64_t> values);

ArrayF64 read_array_f64(const std::filesystem::path& path);
ArrayI64 read_array_i64(const std::filesystem::path& path);

// Little-endian primitives shared with the checkpoint writer.
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f64(std::string& out, double v);

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string context)
      : bytes_(bytes), context_(std::move(context)) {}

  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string bytes(std::size_t n);
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const;

  const std::string& bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

std::string read_file_bytes(const std::filesystem::path& path);
// Writes to a sibling temp file then renames, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace spot

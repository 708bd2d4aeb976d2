#include "spot/common/array_io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "spot/common/error.hpp"

namespace spot {
namespace {

constexpr char kMagic[4] = {'S', 'P', 'V', 'T'};

template <typename T>
void write_impl(const std::filesystem::path& path, const std::string& name,
                std::span<const std::uint64_t> shape, std::span<const T> values) {
  std::uint64_t n = 1;
  for (auto e : shape) n *= e;
  if (n != values.size()) {
    throw DimensionError("array '" + name + "': payload has " + std::to_string(values.size()) +
                         " values but shape implies " + std::to_string(n));
  }
  std::string out(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (auto e : shape) put_u64(out, e);
  out.reserve(out.size() + values.size() * 8);
  for (T v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  write_file_atomic(path, out);
}

template <typename T>
NamedArray<T> read_impl(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  ByteReader r(bytes, path.string());
  if (r.bytes(4) != std::string(kMagic, 4)) throw ParseError(path.string() + ": bad array magic");
  NamedArray<T> arr;
  arr.name = r.bytes(r.u32());
  const auto rank = r.u32();
  for (std::uint32_t i = 0; i < rank; ++i) arr.shape.push_back(r.u64());
  const auto n = arr.numel();
  arr.values.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) arr.values[i] = std::bit_cast<T>(r.u64());
  if (!r.at_end()) throw ParseError(path.string() + ": trailing bytes after array payload");
  return arr;
}

}  // namespace

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void ByteReader::need(std::size_t n) const {
  if (pos_ + n > bytes_.size()) throw ParseError(context_ + ": truncated file");
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
  pos_ += 8;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::bytes(std::size_t n) {
  need(n);
  std::string s = bytes_.substr(pos_, n);
  pos_ += n;
  return s;
}

void write_array(const std::filesystem::path& path, const std::string& name,
                 std::span<const std::uint64_t> shape, std::span<const double> values) {
  write_impl<double>(path, name, shape, values);
}

void write_array(const std::filesystem::path& path, const std::string& name,
                 std::span<const std::uint64_t> shape, std::span<const std::int64_t> values) {
  write_impl<std::int64_t>(path, name, shape, values);
}

ArrayF64 read_array_f64(const std::filesystem::path& path) { return read_impl<double>(path); }
ArrayI64 read_array_i64(const std::filesystem::path& path) { return read_impl<std::int64_t>(path); }

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

}  // namespace spot

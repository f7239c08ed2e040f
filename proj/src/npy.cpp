#include "sbhd/npy.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

#include "sbhd/errors.hpp"
#include "sbhd/fileio.hpp"

namespace sbhd::npy {

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kPreludeLen = kMagicLen + 2 + 2;  // magic, version, header length

std::string shape_literal(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  if (shape.size() == 1) os << ',';
  os << ')';
  return os.str();
}

// Locates the value following `'key':` in a numpy header dict literal.
std::string_view dict_value(std::string_view header, std::string_view key, const std::string& origin) {
  const std::string quoted = "'" + std::string(key) + "'";
  const auto pos = header.find(quoted);
  if (pos == std::string_view::npos) throw StructuralError(origin + ": npy header missing " + quoted);
  auto colon = header.find(':', pos + quoted.size());
  if (colon == std::string_view::npos) throw StructuralError(origin + ": malformed npy header");
  std::string_view rest = header.substr(colon + 1);
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  return rest;
}

DType parse_descr(std::string_view value, const std::string& origin) {
  if (value.starts_with("'<f4'")) return DType::kFloat32;
  if (value.starts_with("'<f8'")) return DType::kFloat64;
  if (value.starts_with("'|u1'") || value.starts_with("'<u1'")) return DType::kUInt8;
  throw StructuralError(origin + ": unsupported npy dtype " + std::string(value.substr(0, 6)));
}

std::vector<std::size_t> parse_shape(std::string_view value, const std::string& origin) {
  if (value.empty() || value.front() != '(') throw StructuralError(origin + ": malformed npy shape");
  const auto close = value.find(')');
  if (close == std::string_view::npos) throw StructuralError(origin + ": malformed npy shape");
  std::vector<std::size_t> shape;
  std::string_view body = value.substr(1, close - 1);
  std::size_t start = 0;
  while (start < body.size()) {
    auto comma = body.find(',', start);
    if (comma == std::string_view::npos) comma = body.size();
    std::string token(body.substr(start, comma - start));
    token.erase(std::remove(token.begin(), token.end(), ' '), token.end());
    if (!token.empty()) {
      if (!std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw StructuralError(origin + ": malformed npy shape entry '" + token + "'");
      shape.push_back(std::stoull(token));
    }
    start = comma + 1;
  }
  return shape;
}

template <typename T>
Array make_array(DType dtype, std::vector<std::size_t> shape, std::span<const T> values) {
  Array a;
  a.dtype = dtype;
  a.shape = std::move(shape);
  if (a.element_count() != values.size()) throw StructuralError("npy: value count does not match shape");
  a.data.resize(values.size_bytes());
  std::memcpy(a.data.data(), values.data(), values.size_bytes());
  return a;
}

template <typename T>
std::vector<T> copy_out(const Array& a) {
  std::vector<T> out(a.element_count());
  std::memcpy(out.data(), a.data.data(), out.size() * sizeof(T));
  return out;
}

}  // namespace

std::string descr(DType dtype) {
  switch (dtype) {
    case DType::kFloat32: return "<f4";
    case DType::kFloat64: return "<f8";
    case DType::kUInt8: return "|u1";
  }
  return "?";
}

std::size_t item_size(DType dtype) {
  switch (dtype) {
    case DType::kFloat32: return 4;
    case DType::kFloat64: return 8;
    case DType::kUInt8: return 1;
  }
  return 0;
}

std::size_t Array::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<float> Array::as_float32() const {
  if (dtype == DType::kFloat32) return copy_out<float>(*this);
  if (dtype == DType::kFloat64) {
    auto wide = copy_out<double>(*this);
    return {wide.begin(), wide.end()};
  }
  throw StructuralError("npy: expected a floating-point array, got " + descr(dtype));
}

std::vector<double> Array::as_float64() const {
  if (dtype == DType::kFloat64) return copy_out<double>(*this);
  if (dtype == DType::kFloat32) {
    auto narrow = copy_out<float>(*this);
    return {narrow.begin(), narrow.end()};
  }
  throw StructuralError("npy: expected a floating-point array, got " + descr(dtype));
}

std::vector<std::uint8_t> Array::as_uint8() const {
  if (dtype != DType::kUInt8) throw StructuralError("npy: expected uint8 array, got " + descr(dtype));
  return copy_out<std::uint8_t>(*this);
}

std::string encode(const Array& array) {
  if (array.data.size() != array.element_count() * item_size(array.dtype))
    throw StructuralError("npy: data size does not match shape");
  std::string header = "{'descr': '" + descr(array.dtype) + "', 'fortran_order': False, 'shape': " +
                       shape_literal(array.shape) + ", }";
  // Pad so that the data offset is a multiple of 64, header ends in '\n'.
  const std::size_t unpadded = kPreludeLen + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  if (header.size() > 0xFFFF) throw StructuralError("npy: header too long for v1.0");

  std::string out;
  out.reserve(kPreludeLen + header.size() + array.data.size());
  out.append(kMagic, kMagicLen);
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(header.size() & 0xFF));
  out.push_back(static_cast<char>((header.size() >> 8) & 0xFF));
  out += header;
  out.append(reinterpret_cast<const char*>(array.data.data()), array.data.size());
  return out;
}

Array decode(std::span<const std::byte> bytes, const std::string& origin) {
  if (bytes.size() < kPreludeLen || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0)
    throw StructuralError(origin + ": not an npy file");
  const auto major = static_cast<unsigned>(bytes[6]);
  const auto minor = static_cast<unsigned>(bytes[7]);
  if (major != 1 || minor != 0) throw StructuralError(origin + ": only npy v1.0 is supported");
  const std::size_t header_len =
      static_cast<std::size_t>(bytes[8]) | (static_cast<std::size_t>(bytes[9]) << 8);
  if (bytes.size() < kPreludeLen + header_len) throw StructuralError(origin + ": truncated npy header");
  const std::string_view header(reinterpret_cast<const char*>(bytes.data()) + kPreludeLen, header_len);

  Array a;
  a.dtype = parse_descr(dict_value(header, "descr", origin), origin);
  if (!dict_value(header, "fortran_order", origin).starts_with("False"))
    throw StructuralError(origin + ": fortran-ordered npy arrays are not supported");
  a.shape = parse_shape(dict_value(header, "shape", origin), origin);

  const std::size_t expected = a.element_count() * item_size(a.dtype);
  const std::size_t offset = kPreludeLen + header_len;
  if (bytes.size() - offset != expected)
    throw StructuralError(origin + ": npy payload has " + std::to_string(bytes.size() - offset) +
                          " bytes, shape requires " + std::to_string(expected));
  a.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return a;
}

Array make_float32(std::vector<std::size_t> shape, std::span<const float> values) {
  return make_array(DType::kFloat32, std::move(shape), values);
}
Array make_float64(std::vector<std::size_t> shape, std::span<const double> values) {
  return make_array(DType::kFloat64, std::move(shape), values);
}
Array make_uint8(std::vector<std::size_t> shape, std::span<const std::uint8_t> values) {
  return make_array(DType::kUInt8, std::move(shape), values);
}

Array read(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  return decode(std::as_bytes(std::span(bytes.data(), bytes.size())), path.string());
}

void write(const std::filesystem::path& path, const Array& array) { write_file_atomic(path, encode(array)); }

void write_float32(const std::filesystem::path& path, const Grid<double>& grid) {
  std::vector<float> narrow(grid.values().begin(), grid.values().end());
  write(path, make_float32({grid.rows(), grid.cols()}, narrow));
}

void write_float32(const std::filesystem::path& path, const Grid<float>& grid) {
  write(path, make_float32({grid.rows(), grid.cols()}, grid.values()));
}

void write_uint8(const std::filesystem::path& path, const Grid<std::uint8_t>& grid) {
  write(path, make_uint8({grid.rows(), grid.cols()}, grid.values()));
}

Grid<double> read_float_grid(const std::filesystem::path& path) {
  const Array a = read(path);
  if (a.shape.size() != 2) throw StructuralError(path.string() + ": expected a 2-D array");
  return Grid<double>(a.shape[0], a.shape[1], a.as_float64());
}

Grid<std::uint8_t> read_uint8_grid(const std::filesystem::path& path) {
  const Array a = read(path);
  if (a.shape.size() != 2) throw StructuralError(path.string() + ": expected a 2-D array");
  return Grid<std::uint8_t>(a.shape[0], a.shape[1], a.as_uint8());
}

}  // namespace sbhd::npy

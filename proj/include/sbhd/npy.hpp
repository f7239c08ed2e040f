#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sbhd/grid.hpp"

namespace sbhd::npy {

// NPY v1.0 only, C order, little-endian. Supported dtypes are the three the
// toolkit exchanges: '<f4', '<f8' and '|u1'.

enum class DType { kFloat32, kFloat64, kUInt8 };

std::string descr(DType dtype);
std::size_t item_size(DType dtype);

struct Array {
  DType dtype = DType::kFloat32;
  std::vector<std::size_t> shape;
  std::vector<std::byte> data;

  std::size_t element_count() const;
  std::vector<float> as_float32() const;
  std::vector<double> as_float64() const;  // widens f4, exact for f8
  std::vector<std::uint8_t> as_uint8() const;
};

std::string encode(const Array& array);
Array decode(std::span<const std::byte> bytes, const std::string& origin = "<memory>");

Array make_float32(std::vector<std::size_t> shape, std::span<const float> values);
Array make_float64(std::vector<std::size_t> shape, std::span<const double> values);
Array make_uint8(std::vector<std::size_t> shape, std::span<const std::uint8_t> values);

Array read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Array& array);

// 2-D convenience wrappers. Doubles are narrowed to float32 on write.
void write_float32(const std::filesystem::path& path, const Grid<double>& grid);
void write_float32(const std::filesystem::path& path, const Grid<float>& grid);
void write_uint8(const std::filesystem::path& path, const Grid<std::uint8_t>& grid);
Grid<double> read_float_grid(const std::filesystem::path& path);
Grid<std::uint8_t> read_uint8_grid(const std::filesystem::path& path);

}  // namespace sbhd::npy

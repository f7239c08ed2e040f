#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "sbhd/grid.hpp"
#include "sbhd/local_frame.hpp"
#include "sbhd/mesh.hpp"
#include "sbhd/raycast.hpp"

namespace sbhd {

/// Gravity-aligned elevation raster. Row r lies at local y = origin.y + r*cell,
/// column c at local x = origin.x + c*cell; elevations are local z.
struct Dem {
  Grid<double> elevations;
  Grid<std::uint8_t> nodata;  // 1 where no terrain lies under the cell
  double cell_size = 0.05;
  Eigen::Vector2d grid_origin = Eigen::Vector2d::Zero();  // local (x, y) of cell (0, 0)
  LocalFrame frame;

  std::size_t rows() const { return elevations.rows(); }
  std::size_t cols() const { return elevations.cols(); }
  double x_of(std::size_t col) const { return grid_origin.x() + static_cast<double>(col) * cell_size; }
  double y_of(std::size_t row) const { return grid_origin.y() + static_cast<double>(row) * cell_size; }
  bool valid(std::size_t row, std::size_t col) const { return nodata(row, col) == 0; }
  std::size_t valid_count() const;

  /// Throws StructuralError on shape mismatches, cell_size <= 0, non-finite
  /// valid elevations or an invalid frame.
  void validate() const;
};

/// Grid origin that centers a rows x cols grid on the frame origin.
Eigen::Vector2d centered_grid_origin(std::size_t rows, std::size_t cols, double cell_size);

/// Builds a DEM from already-known elevations on a centered grid.
Dem make_dem(Grid<double> elevations, double cell_size, const LocalFrame& frame = {});

struct RasterOptions {
  TraceMode mode = TraceMode::kBvh;
  int threads = 1;
};

/// Highest intersection of the local -z ray through each cell center.
/// A mesh that misses the grid produces an all-nodata DEM and a warning.
Dem rasterize_dem(const TriangleMesh& mesh, const LocalFrame& frame, double cell_size, std::size_t width,
                  std::size_t height, const RasterOptions& options = {});

/// Same as rasterize_dem for a mesh already expressed in local coordinates.
Dem rasterize_local(const TriangleMesh& local_mesh, const LocalFrame& frame, double cell_size, std::size_t width,
                    std::size_t height, const RasterOptions& options = {});

/// Bilinear interpolation at local (x, y). Empty when the point lies outside
/// the grid hull or any of the four neighbors is nodata.
std::optional<double> bilinear_sample(const Dem& dem, double x, double y);

/// Two triangles per fully valid 2x2 cell block, in local coordinates, with
/// vertices at the cell centers. Not watertight.
TriangleMesh heightfield_mesh(const Dem& dem);

}  // namespace sbhd

#include "sbhd/dem.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "sbhd/errors.hpp"

namespace sbhd {

std::size_t Dem::valid_count() const {
  return static_cast<std::size_t>(std::count(nodata.values().begin(), nodata.values().end(), std::uint8_t{0}));
}

void Dem::validate() const {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw StructuralError("dem: cell_size must be > 0");
  if (!nodata.same_shape(elevations)) throw StructuralError("dem: nodata mask shape differs from elevations");
  if (!grid_origin.allFinite()) throw StructuralError("dem: non-finite grid origin");
  for (std::size_t i = 0; i < elevations.size(); ++i)
    if (nodata.values()[i] == 0 && !std::isfinite(elevations.values()[i]))
      throw StructuralError("dem: non-finite elevation at a valid cell");
  frame.validate();
}

Eigen::Vector2d centered_grid_origin(std::size_t rows, std::size_t cols, double cell_size) {
  return {-0.5 * static_cast<double>(cols - 1) * cell_size, -0.5 * static_cast<double>(rows - 1) * cell_size};
}

Dem make_dem(Grid<double> elevations, double cell_size, const LocalFrame& frame) {
  Dem dem;
  dem.nodata = Grid<std::uint8_t>(elevations.rows(), elevations.cols(), 0);
  dem.grid_origin = centered_grid_origin(elevations.rows(), elevations.cols(), cell_size);
  dem.elevations = std::move(elevations);
  dem.cell_size = cell_size;
  dem.frame = frame;
  dem.validate();
  return dem;
}

Dem rasterize_local(const TriangleMesh& local_mesh, const LocalFrame& frame, double cell_size, std::size_t width,
                    std::size_t height, const RasterOptions& options) {
  if (!(cell_size > 0.0)) throw DomainError("rasterize_dem: cell_size must be > 0");
  if (width == 0 || height == 0) throw DomainError("rasterize_dem: grid must have at least one cell");
  frame.validate();

  Dem dem;
  dem.cell_size = cell_size;
  dem.frame = frame;
  dem.grid_origin = centered_grid_origin(height, width, cell_size);
  dem.elevations = Grid<double>(height, width, 0.0);
  dem.nodata = Grid<std::uint8_t>(height, width, 1);

  const MeshRaycaster caster(local_mesh);
  const double z_start = caster.upper().z() + 1.0;
  const auto rows = static_cast<long>(height);

#pragma omp parallel for schedule(static) num_threads(std::max(1, options.threads))
  for (long r = 0; r < rows; ++r) {
    const auto row = static_cast<std::size_t>(r);
    for (std::size_t col = 0; col < width; ++col) {
      Ray ray;
      ray.origin = Vec3(dem.x_of(col), dem.y_of(row), z_start);
      ray.direction = -Vec3::UnitZ();
      const RayHit hit = caster.closest_hit(ray, options.mode);
      if (hit.hit) {
        dem.elevations(row, col) = hit.point.z();
        dem.nodata(row, col) = 0;
      }
    }
  }
  if (dem.valid_count() == 0)
    spdlog::warn("rasterize_dem: mesh does not intersect the {}x{} grid footprint; DEM is all nodata", height, width);
  return dem;
}

Dem rasterize_dem(const TriangleMesh& mesh, const LocalFrame& frame, double cell_size, std::size_t width,
                  std::size_t height, const RasterOptions& options) {
  frame.validate();
  // local = R * (p - o) = R * p - R * o
  const TriangleMesh local = mesh.transformed(frame.rotation, -(frame.rotation * frame.origin));
  return rasterize_local(local, frame, cell_size, width, height, options);
}

std::optional<double> bilinear_sample(const Dem& dem, double x, double y) {
  if (dem.rows() == 0 || dem.cols() == 0) return std::nullopt;
  constexpr double kHullTol = 1e-9;  // in cells
  const double max_c = static_cast<double>(dem.cols() - 1);
  const double max_r = static_cast<double>(dem.rows() - 1);
  double fc = (x - dem.grid_origin.x()) / dem.cell_size;
  double fr = (y - dem.grid_origin.y()) / dem.cell_size;
  if (!(fc >= -kHullTol && fc <= max_c + kHullTol && fr >= -kHullTol && fr <= max_r + kHullTol)) return std::nullopt;
  fc = std::clamp(fc, 0.0, max_c);
  fr = std::clamp(fr, 0.0, max_r);

  const auto c0 = static_cast<std::size_t>(std::min(std::floor(fc), std::max(max_c - 1.0, 0.0)));
  const auto r0 = static_cast<std::size_t>(std::min(std::floor(fr), std::max(max_r - 1.0, 0.0)));
  const std::size_t c1 = std::min(c0 + 1, dem.cols() - 1);
  const std::size_t r1 = std::min(r0 + 1, dem.rows() - 1);
  if (!dem.valid(r0, c0) || !dem.valid(r0, c1) || !dem.valid(r1, c0) || !dem.valid(r1, c1)) return std::nullopt;

  const double tc = fc - static_cast<double>(c0);
  const double tr = fr - static_cast<double>(r0);
  const auto& z = dem.elevations;
  const double bottom = (1.0 - tc) * z(r0, c0) + tc * z(r0, c1);
  const double top = (1.0 - tc) * z(r1, c0) + tc * z(r1, c1);
  return (1.0 - tr) * bottom + tr * top;
}

TriangleMesh heightfield_mesh(const Dem& dem) {
  std::vector<Vec3> vertices;
  std::vector<std::int64_t> index(dem.elevations.size(), -1);
  for (std::size_t r = 0; r < dem.rows(); ++r)
    for (std::size_t c = 0; c < dem.cols(); ++c)
      if (dem.valid(r, c)) {
        index[r * dem.cols() + c] = static_cast<std::int64_t>(vertices.size());
        vertices.emplace_back(dem.x_of(c), dem.y_of(r), dem.elevations(r, c));
      }
  std::vector<Face> faces;
  for (std::size_t r = 0; r + 1 < dem.rows(); ++r) {
    for (std::size_t c = 0; c + 1 < dem.cols(); ++c) {
      const auto a = index[r * dem.cols() + c], b = index[r * dem.cols() + c + 1];
      const auto d = index[(r + 1) * dem.cols() + c], e = index[(r + 1) * dem.cols() + c + 1];
      if (a < 0 || b < 0 || d < 0 || e < 0) continue;
      // Counter-clockwise seen from +z.
      faces.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(e)});
      faces.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(d)});
    }
  }
  return TriangleMesh(std::move(vertices), std::move(faces));
}

}  // namespace sbhd

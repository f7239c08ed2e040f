#include "sbhd/hazard.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "sbhd/errors.hpp"

namespace sbhd {

namespace {

constexpr double kStableTol = 1e-12;  // m, fourth pad at or below the plane
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sum of four terms in ascending order, so any permutation of the same
// terms (e.g. from a 90° rotation of the grid) gives the same bits.
double canonical_sum(std::array<double, 4> t) {
  if (t[0] > t[1]) std::swap(t[0], t[1]);
  if (t[2] > t[3]) std::swap(t[2], t[3]);
  if (t[0] > t[2]) std::swap(t[0], t[2]);
  if (t[1] > t[3]) std::swap(t[1], t[3]);
  if (t[1] > t[2]) std::swap(t[1], t[2]);
  return ((t[0] + t[1]) + t[2]) + t[3];
}

}  // namespace

void SafetyConfig::validate() const {
  if (!(lander_diameter > 0.0)) throw DomainError("safety config: lander_diameter must be > 0");
  if (!(slope_threshold > 0.0)) throw DomainError("safety config: slope_threshold must be > 0");
  if (!(roughness_threshold > 0.0)) throw DomainError("safety config: roughness_threshold must be > 0");
  if (orientation_samples < 1) throw DomainError("safety config: orientation_samples must be >= 1");
  if (pad_count != 4) throw DomainError("safety config: only 4-pad landers are supported");
}

std::size_t HazardMap::count(Safety s) const {
  return static_cast<std::size_t>(std::count(safe.values().begin(), safe.values().end(), code(s)));
}

double HazardMap::safe_fraction() const {
  const auto n_safe = count(Safety::kSafe);
  const auto n_valid = n_safe + count(Safety::kUnsafe);
  return n_valid == 0 ? 0.0 : static_cast<double>(n_safe) / static_cast<double>(n_valid);
}

Safety classify(double slope, double roughness, const SafetyConfig& config) {
  return (slope > config.slope_threshold || roughness > config.roughness_threshold) ? Safety::kUnsafe
                                                                                     : Safety::kSafe;
}

AlhatEvaluator::AlhatEvaluator(const SafetyConfig& config, double cell_size)
    : config_(config), cell_size_(cell_size) {
  config_.validate();
  if (!(cell_size > 0.0)) throw DomainError("hazard: cell_size must be > 0");
  const double radius = config_.lander_radius();
  margin_cells_ = radius / cell_size;

  // Negative offsets mirror positive ones exactly (same weights, swapped).
  auto stencil = [](double offset) {
    const double mag = std::abs(offset);
    const double whole = std::floor(mag);
    const double frac = mag - whole;
    const auto base = static_cast<long>(whole);
    if (offset >= 0.0) return AxisStencil{base, 1.0 - frac, frac};
    if (frac == 0.0) return AxisStencil{-base, 1.0, 0.0};
    return AxisStencil{-base - 1, frac, 1.0 - frac};
  };

  const int n = config_.orientation_samples;
  pads_.reserve(static_cast<std::size_t>(n) * 4);
  for (int k = 0; k < n; ++k) {
    const double theta = (static_cast<double>(k) * 90.0) / static_cast<double>(n) * (std::numbers::pi / 180.0);
    const double a = radius * std::cos(theta);
    const double b = radius * std::sin(theta);
    const double ac = a / cell_size;
    const double bc = b / cell_size;
    // Pads at θ, θ+90°, θ+180°, θ+270°, counter-clockwise.
    const std::array<std::array<double, 4>, 4> offsets = {{
        {a, b, ac, bc},
        {-b, a, -bc, ac},
        {-a, -b, -ac, -bc},
        {b, -a, bc, -ac},
    }};
    for (const auto& o : offsets) pads_.push_back(PadStencil{stencil(o[2]), stencil(o[3]), o[0], o[1]});
  }

  const auto reach = static_cast<long>(std::ceil(margin_cells_)) + 1;
  const double r2 = radius * radius * (1.0 + 1e-12);
  for (long dr = -reach; dr <= reach; ++dr)
    for (long dc = -reach; dc <= reach; ++dc) {
      const double dx = static_cast<double>(dc) * cell_size;
      const double dy = static_cast<double>(dr) * cell_size;
      if (dx * dx + dy * dy <= r2) footprint_.push_back({dr, dc, dx, dy});
    }
}

CellResult AlhatEvaluator::evaluate(const Dem& dem, std::size_t row, std::size_t col) const {
  CellResult out{kNaN, kNaN, false};
  const auto rows = static_cast<long>(dem.rows());
  const auto cols = static_cast<long>(dem.cols());
  const auto r = static_cast<long>(row);
  const auto c = static_cast<long>(col);
  constexpr double kEdgeTol = 1e-9;
  const double rd = static_cast<double>(r), cd = static_cast<double>(c);
  if (rd < margin_cells_ - kEdgeTol || cd < margin_cells_ - kEdgeTol ||
      rd > static_cast<double>(rows - 1) - margin_cells_ + kEdgeTol ||
      cd > static_cast<double>(cols - 1) - margin_cells_ + kEdgeTol)
    return out;

  const auto& z = dem.elevations;
  auto valid_at = [&](long rr, long cc) {
    return rr >= 0 && cc >= 0 && rr < rows && cc < cols &&
           dem.valid(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
  };
  auto elev = [&](long rr, long cc) { return z(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)); };

  bool all_valid = true;
  // Footprint terrain relative to the cell center (x, y) with absolute z.
  thread_local std::vector<std::array<double, 3>> terrain;
  terrain.clear();
  for (const FootprintCell& f : footprint_) {
    if (!valid_at(r + f.dr, c + f.dc)) {
      all_valid = false;
      continue;
    }
    terrain.push_back({f.dx, f.dy, elev(r + f.dr, c + f.dc)});
  }

  double worst_slope = -1.0, worst_rough = -std::numeric_limits<double>::infinity();
  bool any_orientation = false;
  const std::size_t n = pads_.size() / 4;
  for (std::size_t k = 0; k < n; ++k) {
    std::array<std::array<double, 3>, 4> pad{};
    bool pads_ok = true;
    for (int m = 0; m < 4; ++m) {
      const PadStencil& p = pads_[k * 4 + static_cast<std::size_t>(m)];
      const long c0 = c + p.col.base, r0 = r + p.row.base;
      const long c1 = p.col.w1 == 0.0 ? c0 : c0 + 1;
      const long r1 = p.row.w1 == 0.0 ? r0 : r0 + 1;
      if (!valid_at(r0, c0) || !valid_at(r0, c1) || !valid_at(r1, c0) || !valid_at(r1, c1)) {
        pads_ok = false;
        break;
      }
      const double h = canonical_sum({(p.col.w0 * p.row.w0) * elev(r0, c0), (p.col.w1 * p.row.w0) * elev(r0, c1),
                                      (p.col.w0 * p.row.w1) * elev(r1, c0), (p.col.w1 * p.row.w1) * elev(r1, c1)});
      pad[static_cast<std::size_t>(m)] = {p.dx, p.dy, h};
    }
    if (!pads_ok) {
      all_valid = false;
      continue;
    }

    // Resting plane: stable triple with maximal tilt; equal tilts are broken
    // by the larger roughness.
    struct Plane {
      double nx, ny, nz, norm, tilt;
      std::size_t base;
      bool stable;
    };
    std::array<Plane, 4> planes{};
    double best_tilt = -1.0;
    for (std::size_t omit = 0; omit < 4; ++omit) {
      const std::size_t i0 = (omit + 1) % 4;
      const auto& p0 = pad[i0];
      const auto& p1 = pad[(omit + 2) % 4];
      const auto& p2 = pad[(omit + 3) % 4];
      const auto& p3 = pad[omit];
      const double ux = p1[0] - p0[0], uy = p1[1] - p0[1], uz = p1[2] - p0[2];
      const double vx = p2[0] - p0[0], vy = p2[1] - p0[1], vz = p2[2] - p0[2];
      Plane& pl = planes[omit];
      pl.nx = uy * vz - uz * vy;
      pl.ny = uz * vx - ux * vz;
      pl.nz = ux * vy - uy * vx;  // > 0: pads run counter-clockwise
      pl.norm = std::sqrt((pl.nx * pl.nx + pl.ny * pl.ny) + pl.nz * pl.nz);
      pl.base = i0;
      const double fourth = (pl.nx * (p3[0] - p0[0]) + pl.ny * (p3[1] - p0[1]) + pl.nz * (p3[2] - p0[2])) / pl.norm;
      pl.stable = fourth <= kStableTol;
      pl.tilt = std::atan2(std::sqrt(pl.nx * pl.nx + pl.ny * pl.ny), pl.nz);
      if (pl.stable) best_tilt = std::max(best_tilt, pl.tilt);
    }
    const bool found = best_tilt >= 0.0;
    double best_rough = 0.0;
    for (const Plane& pl : planes) {
      if (!pl.stable || pl.tilt != best_tilt) continue;
      const auto& p0 = pad[pl.base];
      double high = -std::numeric_limits<double>::infinity();
      for (const auto& q : terrain) {
        const double h = pl.nx * (q[0] - p0[0]) + pl.ny * (q[1] - p0[1]) + pl.nz * (q[2] - p0[2]);
        high = std::max(high, h);
      }
      best_rough = std::max(best_rough, high / pl.norm);
    }
    if (!found) {
      // Not reachable for four pads on a circle (the upper hull always has
      // two stable triangles); treat as an invalid orientation regardless.
      all_valid = false;
      continue;
    }
    any_orientation = true;
    worst_slope = std::max(worst_slope, best_tilt * (180.0 / std::numbers::pi));
    worst_rough = std::max(worst_rough, best_rough);
  }

  if (any_orientation) {
    out.slope = worst_slope;
    out.roughness = worst_rough;
  }
  out.valid = all_valid && any_orientation;
  return out;
}

CellResult evaluate_cell(const Dem& dem, std::size_t row, std::size_t col, const SafetyConfig& config) {
  if (row >= dem.rows() || col >= dem.cols()) throw DomainError("evaluate_cell: cell outside grid");
  return AlhatEvaluator(config, dem.cell_size).evaluate(dem, row, col);
}

HazardMap evaluate_dem(const Dem& dem, const SafetyConfig& config, const HazardOptions& options) {
  dem.validate();
  const AlhatEvaluator evaluator(config, dem.cell_size);
  HazardMap map;
  map.config = config;
  map.cell_size = dem.cell_size;
  map.grid_origin = dem.grid_origin;
  map.frame = dem.frame;
  map.slope = Grid<double>(dem.rows(), dem.cols(), kNaN);
  map.roughness = Grid<double>(dem.rows(), dem.cols(), kNaN);
  map.safe = Grid<std::uint8_t>(dem.rows(), dem.cols(), code(Safety::kInvalid));

  const auto rows = static_cast<long>(dem.rows());
#pragma omp parallel for schedule(dynamic, 4) num_threads(std::max(1, options.threads))
  for (long r = 0; r < rows; ++r) {
    const auto row = static_cast<std::size_t>(r);
    for (std::size_t col = 0; col < dem.cols(); ++col) {
      const CellResult cell = evaluator.evaluate(dem, row, col);
      map.slope(row, col) = cell.slope;
      map.roughness(row, col) = cell.roughness;
      if (cell.valid) map.safe(row, col) = code(classify(cell.slope, cell.roughness, config));
    }
  }
  return map;
}

HazardMap rethreshold(const HazardMap& hazard, const SafetyConfig& config) {
  HazardMap out = hazard;
  out.config = config;
  for (std::size_t i = 0; i < out.safe.size(); ++i) {
    if (out.safe.values()[i] == code(Safety::kInvalid)) continue;
    out.safe.values()[i] = code(classify(out.slope.values()[i], out.roughness.values()[i], config));
  }
  return out;
}

HazardMap roughness_only_map(const HazardMap& hazard) {
  HazardMap out = hazard;
  for (std::size_t i = 0; i < out.safe.size(); ++i) {
    if (out.safe.values()[i] == code(Safety::kInvalid)) continue;
    out.safe.values()[i] = out.roughness.values()[i] > hazard.config.roughness_threshold ? code(Safety::kUnsafe)
                                                                                         : code(Safety::kSafe);
  }
  return out;
}

}  // namespace sbhd

#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "sbhd/camera.hpp"
#include "sbhd/dem.hpp"
#include "sbhd/mesh.hpp"
#include "sbhd/synth.hpp"

namespace fixtures {

using sbhd::Dem;
using sbhd::Grid;
using sbhd::Vec3;

inline constexpr double kDeg = std::numbers::pi / 180.0;

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sbhd_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Dem flat_dem(std::size_t n, double cell = 0.05, double z = 0.0) {
  return sbhd::make_dem(Grid<double>(n, n, z), cell);
}

/// z = tan(slope) * (x cos(azimuth) + y sin(azimuth)) on a centered grid.
inline Dem plane_dem(std::size_t n, double slope_deg, double azimuth_deg = 0.0, double cell = 0.05) {
  Dem dem = flat_dem(n, cell);
  const double t = std::tan(slope_deg * kDeg);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      dem.elevations(r, c) = t * (dem.x_of(c) * std::cos(azimuth_deg * kDeg) + dem.y_of(r) * std::sin(azimuth_deg * kDeg));
  return dem;
}

/// Seeded rough terrain: a random tilt up to 35 degrees, Gaussian bumps and
/// pits of 5 to 15 cm width, and millimetre-scale noise.
inline Dem random_rough_dem(std::uint64_t seed, std::size_t n = 64, double cell = 0.05) {
  sbhd::SplitMix64 rng(seed);
  Dem dem = flat_dem(n, cell);
  const double slope = rng.uniform(0.0, 35.0) * kDeg, az = rng.uniform(0.0, 2.0 * std::numbers::pi);
  struct Bump {
    double x, y, sigma, height;
  };
  std::vector<Bump> bumps(24);
  const double half = 0.5 * static_cast<double>(n - 1) * cell;
  for (auto& b : bumps) {
    b.x = rng.uniform(-half, half);
    b.y = rng.uniform(-half, half);
    b.sigma = rng.uniform(0.05, 0.15);
    b.height = rng.uniform(-0.04, 0.08);
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double x = dem.x_of(c), y = dem.y_of(r);
      double z = std::tan(slope) * (x * std::cos(az) + y * std::sin(az));
      for (const auto& b : bumps) {
        const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
        z += b.height * std::exp(-0.5 * d2 / (b.sigma * b.sigma));
      }
      z += rng.uniform(-0.003, 0.003);
      dem.elevations(r, c) = z;
    }
  return dem;
}

/// Thin square slab (watertight box) whose top face is the plane z = top.
inline sbhd::TriangleMesh plate(double half_width, double top = 0.0, double thickness = 0.5) {
  return sbhd::make_box(Vec3(-half_width, -half_width, top - thickness), Vec3(half_width, half_width, top));
}

inline sbhd::Intrinsics intrinsics(std::size_t w, std::size_t h, double f) {
  sbhd::Intrinsics in;
  in.width = w;
  in.height = h;
  in.fx = in.fy = f;
  in.cx = 0.5 * static_cast<double>(w - 1);
  in.cy = 0.5 * static_cast<double>(h - 1);
  return in;
}

/// Camera at height `d` above the origin looking straight down -z.
inline sbhd::CameraFrame nadir_camera(double d, const sbhd::Intrinsics& in) {
  return sbhd::look_at(Vec3(0, 0, d), Vec3::Zero(), Vec3::UnitY(), in);
}

/// Small boulder scene for projection and rendering comparisons.
inline sbhd::SceneSpec small_scene(std::uint64_t seed) {
  sbhd::SceneSpec s;
  s.seed = seed;
  s.base_radius = 5.0;
  s.subdivisions = 3;
  s.site_radius = 1.2;
  s.site_edge = 0.08;
  s.fractal_amplitude = 0.03;
  s.fractal_wavelength = 1.5;
  s.fractal_octaves = 3;
  s.boulder_count = 15;
  s.boulder_size_min = 0.1;
  s.boulder_size_max = 0.4;
  s.sun_direction = Vec3(0.6, 0.3, 0.75).normalized();
  return s;
}

}  // namespace fixtures

#pragma once

#include <cstdint>
#include <vector>

#include "sbhd/dem.hpp"
#include "sbhd/grid.hpp"

namespace sbhd {

/// Label codes shared by hazard rasters, pixel label maps and predictions.
enum class Safety : std::uint8_t { kUnsafe = 0, kSafe = 1, kInvalid = 255 };

constexpr std::uint8_t code(Safety s) { return static_cast<std::uint8_t>(s); }

struct SafetyConfig {
  double lander_diameter = 0.35;    // m
  double slope_threshold = 30.0;    // deg
  double roughness_threshold = 0.035;  // m
  int pad_count = 4;
  int orientation_samples = 30;     // evenly spaced over [0°, 90°)

  double lander_radius() const { return 0.5 * lander_diameter; }
  void validate() const;  // throws DomainError
};

struct CellResult {
  double slope = 0.0;      // deg, max over valid orientations
  double roughness = 0.0;  // m, max over valid orientations
  bool valid = false;
};

/// Worst-case slope/roughness rasters with tri-state verdicts.
struct HazardMap {
  Grid<double> slope;
  Grid<double> roughness;
  Grid<std::uint8_t> safe;  // Safety codes
  SafetyConfig config;
  // Geometry of the source DEM.
  double cell_size = 0.0;
  Eigen::Vector2d grid_origin = Eigen::Vector2d::Zero();
  LocalFrame frame;

  std::size_t rows() const { return safe.rows(); }
  std::size_t cols() const { return safe.cols(); }
  std::size_t count(Safety s) const;
  /// Safe cells over valid (safe + unsafe) cells; 0 when nothing is valid.
  double safe_fraction() const;
};

/// Per-cell ALHAT sweep with the footprint and orientation tables built once.
///
/// For each orientation θ four pads sit on the lander circle at θ + k·90°.
/// The resting plane is, among the pad triples that leave the fourth pad at
/// or below them, the one with the largest tilt. Slope is that plane's tilt
/// from the DEM x-y plane; roughness is the largest perpendicular height of
/// any footprint cell center above it. Both are maximized over orientations.
class AlhatEvaluator {
 public:
  AlhatEvaluator(const SafetyConfig& config, double cell_size);

  CellResult evaluate(const Dem& dem, std::size_t row, std::size_t col) const;
  const SafetyConfig& config() const { return config_; }

 private:
  // One axis of a pad's bilinear stencil: cells base and base+1 with weights.
  struct AxisStencil {
    long base;
    double w0, w1;
  };
  struct PadStencil {
    AxisStencil col, row;
    double dx, dy;  // pad offset from the cell center, m
  };
  struct FootprintCell {
    long dr, dc;
    double dx, dy;
  };

  SafetyConfig config_;
  double cell_size_;
  double margin_cells_;
  std::vector<PadStencil> pads_;  // orientation_samples * 4, grouped by orientation
  std::vector<FootprintCell> footprint_;
};

CellResult evaluate_cell(const Dem& dem, std::size_t row, std::size_t col, const SafetyConfig& config);

struct HazardOptions {
  int threads = 1;
};

HazardMap evaluate_dem(const Dem& dem, const SafetyConfig& config, const HazardOptions& options = {});

/// Verdict code for one valid cell.
Safety classify(double slope, double roughness, const SafetyConfig& config);

/// Re-thresholds on roughness alone; slope is carried through unchanged.
HazardMap roughness_only_map(const HazardMap& hazard);

/// Re-applies thresholds of `config` to the stored slope/roughness grids.
HazardMap rethreshold(const HazardMap& hazard, const SafetyConfig& config);

}  // namespace sbhd

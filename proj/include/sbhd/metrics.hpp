#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sbhd/camera.hpp"
#include "sbhd/grid.hpp"

namespace sbhd {

struct EvalMode {
  bool with_uncertainty = false;
  bool ignore_shadows = false;
};

/// Confusion counts. Screened pixels (prediction code 2) never enter
/// valid_pixels; a screened pixel whose truth is safe is also counted as
/// false_unsafe, so valid_pixels = TS + FS + TU + (FU - screened_safe).
struct ConfusionCounts {
  std::uint64_t true_safe = 0;
  std::uint64_t false_safe = 0;
  std::uint64_t true_unsafe = 0;
  std::uint64_t false_unsafe = 0;
  std::uint64_t screened_safe = 0;
  std::uint64_t screened_unsafe = 0;
  std::uint64_t valid_pixels = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& other);
  friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) { return a += b; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;

  std::uint64_t screened() const { return screened_safe + screened_unsafe; }
  bool consistent() const;
};

/// Prediction codes: 0 unsafe, 1 safe, 2 screened (with_uncertainty only).
/// Truth pixels coded 255 are skipped; with ignore_shadows, so are truth
/// shadow pixels. Throws StructuralError on shape mismatch or bad codes.
ConfusionCounts accumulate(const Grid<std::uint8_t>& prediction, const PixelLabelMap& truth, const EvalMode& mode);

/// Undefined (zero-denominator) values are empty, never 0 or 1.
struct MetricValues {
  std::optional<double> precision;
  std::optional<double> sensitivity;
  std::optional<double> accuracy;
  std::optional<double> miou;
  std::optional<double> screening_rate;
};

MetricValues compute_metrics(const ConfusionCounts& counts);

struct MetricsRow {
  std::string image_id;
  ConfusionCounts counts;
  MetricValues metrics;
  std::optional<ImageMeta> meta;
  std::optional<double> mean_entropy;
};

MetricsRow make_row(std::string image_id, const ConfusionCounts& counts, std::optional<ImageMeta> meta = std::nullopt,
                    std::optional<double> mean_entropy = std::nullopt);

struct MetricsReport {
  EvalMode mode;
  std::vector<MetricsRow> images;
  MetricsRow pooled;            // metrics of the summed counts
  MetricValues image_averaged;  // mean of each defined per-image value
};

MetricsReport build_report(std::vector<MetricsRow> images, const EvalMode& mode);

enum class BinAxis { kGsd, kViewingAngle, kVisibilityRatio };
BinAxis parse_bin_axis(const std::string& name);
std::string to_string(BinAxis axis);

struct BinRow {
  double lower = 0.0, upper = 0.0;
  std::size_t count = 0;
  MetricValues means;
  std::optional<double> mean_entropy;
};

struct BinnedTable {
  BinAxis axis = BinAxis::kGsd;
  std::vector<BinRow> bins;
};

/// Bins are [e_i, e_{i+1}) with the last one closed. Rows outside the edges
/// are dropped. Throws StructuralError when a row has no ImageMeta or the
/// edges are not strictly increasing.
BinnedTable bin_report(std::span<const MetricsRow> rows, BinAxis axis, std::span<const double> edges);

std::string format_report_csv(const MetricsReport& report);
std::string format_bins_csv(const BinnedTable& table);
nlohmann::json report_to_json(const MetricsReport& report);

}  // namespace sbhd

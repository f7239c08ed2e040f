#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sbhd/camera.hpp"
#include "sbhd/hazard.hpp"
#include "sbhd/io.hpp"
#include "sbhd/local_frame.hpp"
#include "sbhd/metrics.hpp"
#include "sbhd/synth.hpp"
#include "sbhd/uncertainty.hpp"

namespace sbhd {

inline constexpr int kSchemaVersion = 1;

/// Cameras spread on a ring above the landing site, all looking at it.
struct CameraRig {
  int count = 4;
  double distance = 6.0;             // m from the site origin
  double elevation_min = 50.0;       // deg above the local horizon
  double elevation_max = 90.0;
  double azimuth_offset = 0.0;       // deg, from local +x toward +y
  double fov = 30.0;                 // deg, horizontal
  std::size_t width = 128, height = 128;

  void validate() const;
};

/// Camera i sits at elevation lerp(min, max, i / (count - 1)) and azimuth
/// offset + 360 i / count. `sun` is copied onto every camera.
std::vector<CameraFrame> rig_cameras(const CameraRig& rig, const LocalFrame& site, const Vec3& sun);

/// Stand-in for the network: per-pixel logits centered on the truth label,
/// flipped on a random subset of pixels that also get wider pass-to-pass
/// noise. Deterministic in (seed, image index).
struct MockPredictor {
  std::uint64_t seed = 7;
  std::size_t passes = 8;
  double logit = 1.5;
  double noise = 0.5;          // per-pass logit noise on ordinary pixels
  double flip_rate = 0.15;
  double flip_noise = 2.5;     // per-pass logit noise on flipped pixels

  void validate() const;
};

PredictionStack mock_predictions(const MockPredictor& mock, const PixelLabelMap& truth, const std::string& image_id,
                                 std::size_t image_index);

enum class PredictionSource { kNone, kMock, kExternal };

struct PipelineConfig {
  int schema_version = kSchemaVersion;
  SceneSpec scene;
  double cell_size = 0.05;
  std::size_t dem_width = 80, dem_height = 80;
  SafetyConfig safety;
  CameraRig cameras;
  std::vector<CameraFrame> camera_list;  // replaces the rig when non-empty
  PredictionSource predictions = PredictionSource::kMock;
  std::filesystem::path predictions_dir;  // kExternal; relative paths resolve against the config file
  MockPredictor mock;
  ThresholdAveraging averaging = ThresholdAveraging::kPixel;
  std::optional<double> threshold;  // nats; computed from the stacks when unset
  BinAxis bin_axis = BinAxis::kGsd;
  std::vector<double> bin_edges;    // empty: no binned table

  void validate() const;
  nlohmann::json to_json() const;
  /// Requires schema_version; rejects unknown keys at every level.
  static PipelineConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
};

struct EvalItem {
  std::string image_id;
  LabeledImage truth;
  std::optional<PredictionStack> stack;       // MC-dropout passes
  std::optional<Grid<std::uint8_t>> labels;   // or ready-made label codes
};

struct EvalOptions {
  EvalMode mode;
  std::optional<UncertaintyThreshold> threshold;  // needed for stacks in with-uncertainty mode
  std::optional<BinAxis> bin_axis;
  std::vector<double> bin_edges;
};

struct EvalOutput {
  MetricsReport report;
  std::optional<BinnedTable> bins;
};

/// Predicted codes of one item under `options` (argmax, or screened argmax).
Grid<std::uint8_t> predicted_codes(const EvalItem& item, const EvalOptions& options, std::optional<double>* mean_entropy);

EvalOutput evaluate_items(const std::vector<EvalItem>& items, const EvalOptions& options);

/// metrics.csv, metrics.json and, with bins, bins_<axis>.csv under `dir`.
void write_eval_output(const std::filesystem::path& dir, const EvalOutput& output);

/// Pairs `<truth_dir>/<id>/labels.*` with `<pred_dir>/<id>.npy` (a prediction
/// stack or a 2-D '|u1' label raster) or `<pred_dir>/<id>/labels.npy`.
std::vector<EvalItem> load_eval_items(const std::filesystem::path& pred_dir, const std::filesystem::path& truth_dir);

/// Prediction stacks `*.npy` (with sidecars) in `dir`, sorted by file name.
std::vector<PredictionStack> load_prediction_stacks(const std::filesystem::path& dir);

/// Hex SHA-256 of every file under `dir` except manifest.json, sorted by path.
nlohmann::json build_manifest(const std::filesystem::path& dir);

/// First surface hit of a ray cast from outside the mesh toward its origin
/// along unit `direction`. Throws DomainError on a miss.
Vec3 surface_point_along(const TriangleMesh& mesh, const MeshRaycaster& caster, const Vec3& direction,
                         TraceMode mode = TraceMode::kBvh);

struct E2eOptions {
  int threads = 1;
  TraceMode mode = TraceMode::kBvh;
};

/// Scene, frame, DEM, hazards, labels and renders, predictions, entropy and
/// reports under `out_dir`, then manifest.json. Returns the manifest.
nlohmann::json run_e2e(const PipelineConfig& config, const std::filesystem::path& out_dir,
                       const E2eOptions& options = {});

}  // namespace sbhd

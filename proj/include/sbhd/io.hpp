#pragma once

#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sbhd/camera.hpp"
#include "sbhd/dem.hpp"
#include "sbhd/hazard.hpp"
#include "sbhd/local_frame.hpp"
#include "sbhd/metrics.hpp"
#include "sbhd/synth.hpp"
#include "sbhd/uncertainty.hpp"

namespace sbhd {

namespace fs = std::filesystem;

// JSON helpers. All readers throw StructuralError on malformed documents.

void require_keys(const nlohmann::json& doc, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional, const std::string& context);
nlohmann::json vec3_json(const Vec3& v);
Vec3 json_vec3(const nlohmann::json& j, const std::string& context);

nlohmann::json frame_to_json(const LocalFrame& frame);
LocalFrame frame_from_json(const nlohmann::json& doc);

nlohmann::json safety_config_to_json(const SafetyConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
SafetyConfig safety_config_from_json(const nlohmann::json& doc);

nlohmann::json image_meta_to_json(const ImageMeta& meta);
ImageMeta image_meta_from_json(const nlohmann::json& doc);

nlohmann::json threshold_to_json(const UncertaintyThreshold& threshold);
UncertaintyThreshold threshold_from_json(const nlohmann::json& doc);

// Directory-based rasters: each writer creates `dir` and a fixed set of files.

/// elevation.npy ('<f4'), nodata.npy ('|u1'), dem.json.
void write_dem(const fs::path& dir, const Dem& dem);
Dem read_dem(const fs::path& dir);

/// slope.npy, roughness.npy ('<f4'), safe.npy ('|u1'), hazard.json.
void write_hazard(const fs::path& dir, const HazardMap& hazard);
HazardMap read_hazard(const fs::path& dir);

struct LabeledImage {
  std::string image_id;
  PixelLabelMap map;
  std::optional<CameraFrame> camera;
};

/// labels.npy, shadow.npy ('|u1'), labels.json with ImageMeta and camera.
void write_labels(const fs::path& dir, const LabeledImage& labeled);
LabeledImage read_labels(const fs::path& dir);

/// image.npy ('<f4') and shadow.npy ('|u1').
void write_render(const fs::path& dir, const RenderedImage& render);

/// `path` names the .npy payload; the sidecar is the same path with a .json
/// extension.
fs::path sidecar_path(const fs::path& npy_path);
void write_prediction_stack(const fs::path& npy_path, const PredictionStack& stack);
PredictionStack read_prediction_stack(const fs::path& npy_path);

/// entropy.npy, mean_probs.npy (H, W, 2) '<f4', argmax.npy '|u1'; with a
/// threshold also screened.npy '|u1'. uncertainty.json summarizes.
void write_uncertainty(const fs::path& dir, const std::string& image_id, const UncertaintyMap& map,
                       const std::optional<UncertaintyThreshold>& threshold,
                       const std::optional<ScreenedLabels>& screened);

/// CSV with header x,y,z (extra header lines are not allowed), or a '<f8'/'<f4'
/// NPY of shape (N, 3).
std::vector<Vec3> read_points(const fs::path& path);

}  // namespace sbhd

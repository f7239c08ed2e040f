#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "sbhd/dem.hpp"
#include "sbhd/grid.hpp"
#include "sbhd/hazard.hpp"
#include "sbhd/mesh.hpp"
#include "sbhd/raycast.hpp"

namespace sbhd {

struct Intrinsics {
  double fx = 1.0, fy = 1.0;  // px
  double cx = 0.0, cy = 0.0;  // px
  std::size_t width = 0, height = 0;
};

/// Distortion-free pinhole camera. camera = rotation * body + translation;
/// the camera looks along its +z axis, +x right, +y down. Pixel (col, row)
/// has its center at image coordinates (col, row).
struct CameraFrame {
  Intrinsics intrinsics;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  std::optional<Vec3> sun_direction;  // unit vector toward the sun, body frame

  Vec3 center() const { return -(rotation.transpose() * translation); }
  Vec3 boresight() const { return rotation.row(2).transpose(); }  // camera +z in body frame
  /// Unit body-frame direction through the center of pixel (col, row).
  Vec3 pixel_direction(double col, double row) const;

  void validate() const;  // throws StructuralError / DomainError

  static CameraFrame from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

/// Camera at `eye` looking at `target`; `up_hint` picks the image -y axis.
CameraFrame look_at(const Vec3& eye, const Vec3& target, const Vec3& up_hint, const Intrinsics& intrinsics);

struct PixelHit {
  bool hit = false;
  double distance = 0.0;  // along the ray, m
  double depth = 0.0;     // camera-frame z of the hit, m
  Vec3 point = Vec3::Zero();
  std::uint32_t face = 0;
  bool shadowed = false;
};

struct ImageMeta {
  double gsd = 0.0;            // m/px
  double imaging_depth = 0.0;  // m, mean ray distance
  double viewing_angle = 0.0;  // deg, DEM -z vs boresight
  double visibility_ratio = 0.0;
  std::size_t hit_pixels = 0;
  std::size_t lit_pixels = 0;
};

struct PixelLabelMap {
  Grid<std::uint8_t> labels;  // Safety codes
  Grid<std::uint8_t> shadow;  // 0 lit, 1 shadow
  std::optional<ImageMeta> meta;
};

struct TraceOptions {
  TraceMode mode = TraceMode::kBvh;
  int threads = 1;
  /// Sun-ray start offset along the face normal, m. Unset: 1e-4 x mean edge length.
  std::optional<double> shadow_offset;
};

/// Shadow test shared by projection and rendering: a point is shadowed when
/// its face turns away from the sun or the sun ray is blocked.
bool in_shadow(const MeshRaycaster& caster, const Vec3& point, std::uint32_t face, const Vec3& sun, double offset,
               TraceMode mode);

double default_shadow_offset(const TriangleMesh& mesh);

/// Casts one ray per pixel. Sun occlusion is evaluated when the camera has a
/// sun direction. Returns all-miss when the camera sits inside a watertight mesh.
Grid<PixelHit> trace_pixels(const TriangleMesh& mesh, const MeshRaycaster& caster, const CameraFrame& camera,
                            const TraceOptions& options = {});

/// Empty when no pixel hits terrain.
std::optional<ImageMeta> compute_image_meta(const LocalFrame& dem_frame, const CameraFrame& camera,
                                            const Grid<PixelHit>& hits);

/// Verdict of the hazard cell nearest to each hit point. Misses, hits outside
/// the grid and invalid cells get code 255.
PixelLabelMap labels_from_hits(const HazardMap& hazard, const CameraFrame& camera, const Grid<PixelHit>& hits);

PixelLabelMap project_labels(const HazardMap& hazard, const Dem& dem, const CameraFrame& camera,
                             const TriangleMesh& mesh, const TraceOptions& options = {});

/// Shadow mask for imagery without a sun vector: pixel < fraction × the
/// image's 99th-percentile intensity.
Grid<std::uint8_t> shadow_from_intensity(const Grid<float>& image, double fraction = 0.05);

}  // namespace sbhd

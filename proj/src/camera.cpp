#include "sbhd/camera.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <spdlog/spdlog.h>

#include "sbhd/errors.hpp"

namespace sbhd {

Vec3 CameraFrame::pixel_direction(double col, double row) const {
  const Vec3 cam((col - intrinsics.cx) / intrinsics.fx, (row - intrinsics.cy) / intrinsics.fy, 1.0);
  return (rotation.transpose() * cam).normalized();
}

void CameraFrame::validate() const {
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0)) throw DomainError("camera: fx and fy must be > 0");
  if (intrinsics.width == 0 || intrinsics.height == 0) throw DomainError("camera: image size must be positive");
  if (!rotation.allFinite() || !translation.allFinite()) throw StructuralError("camera: non-finite pose");
  if ((rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9)
    throw DomainError("camera: pose rotation is not orthonormal");
  if (sun_direction && std::abs(sun_direction->norm() - 1.0) > 1e-9)
    throw DomainError("camera: sun_direction must be a unit vector");
}

CameraFrame CameraFrame::from_json(const nlohmann::json& doc) {
  static const std::set<std::string> kKeys = {"fx", "fy", "cx", "cy", "width", "height",
                                              "rotation", "translation", "sun_direction", "image_id"};
  if (!doc.is_object()) throw StructuralError("camera: expected a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!kKeys.contains(key)) throw StructuralError("camera: unknown key '" + key + "'");
  CameraFrame cam;
  try {
    cam.intrinsics.fx = doc.at("fx").get<double>();
    cam.intrinsics.fy = doc.at("fy").get<double>();
    cam.intrinsics.cx = doc.at("cx").get<double>();
    cam.intrinsics.cy = doc.at("cy").get<double>();
    cam.intrinsics.width = doc.at("width").get<std::size_t>();
    cam.intrinsics.height = doc.at("height").get<std::size_t>();
    const auto rot = doc.at("rotation").get<std::vector<double>>();
    const auto trans = doc.at("translation").get<std::vector<double>>();
    if (rot.size() != 9 || trans.size() != 3)
      throw StructuralError("camera: rotation needs 9 values and translation 3");
    for (int i = 0; i < 9; ++i) cam.rotation(i / 3, i % 3) = rot[static_cast<std::size_t>(i)];
    cam.translation = Vec3(trans[0], trans[1], trans[2]);
    if (doc.contains("sun_direction") && !doc.at("sun_direction").is_null()) {
      const auto sun = doc.at("sun_direction").get<std::vector<double>>();
      if (sun.size() != 3) throw StructuralError("camera: sun_direction needs 3 values");
      cam.sun_direction = Vec3(sun[0], sun[1], sun[2]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(std::string("camera: ") + e.what());
  }
  cam.validate();
  return cam;
}

nlohmann::json CameraFrame::to_json() const {
  nlohmann::json doc;
  doc["fx"] = intrinsics.fx;
  doc["fy"] = intrinsics.fy;
  doc["cx"] = intrinsics.cx;
  doc["cy"] = intrinsics.cy;
  doc["width"] = intrinsics.width;
  doc["height"] = intrinsics.height;
  std::vector<double> rot(9);
  for (int i = 0; i < 9; ++i) rot[static_cast<std::size_t>(i)] = rotation(i / 3, i % 3);
  doc["rotation"] = rot;
  doc["translation"] = {translation.x(), translation.y(), translation.z()};
  if (sun_direction) doc["sun_direction"] = {sun_direction->x(), sun_direction->y(), sun_direction->z()};
  return doc;
}

CameraFrame look_at(const Vec3& eye, const Vec3& target, const Vec3& up_hint, const Intrinsics& intrinsics) {
  const Vec3 z = (target - eye).normalized();
  Vec3 down = -(up_hint - z * z.dot(up_hint));
  if (down.norm() < 1e-9) throw DomainError("look_at: up hint is parallel to the viewing direction");
  down.normalize();
  const Vec3 x = down.cross(z);
  CameraFrame cam;
  cam.intrinsics = intrinsics;
  cam.rotation.row(0) = x.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = z.transpose();
  cam.translation = -(cam.rotation * eye);
  return cam;
}

double default_shadow_offset(const TriangleMesh& mesh) { return 1e-4 * mesh.mean_edge_length(); }

bool in_shadow(const MeshRaycaster& caster, const Vec3& point, std::uint32_t face, const Vec3& sun, double offset,
               TraceMode mode) {
  const Vec3& n = caster.face_normal(face);
  if (n.dot(sun) <= 0.0) return true;
  Ray ray;
  ray.origin = point + offset * n;
  ray.direction = sun;
  return caster.any_hit(ray, mode);
}

Grid<PixelHit> trace_pixels(const TriangleMesh& mesh, const MeshRaycaster& caster, const CameraFrame& camera,
                            const TraceOptions& options) {
  camera.validate();
  const std::size_t h = camera.intrinsics.height, w = camera.intrinsics.width;
  Grid<PixelHit> hits(h, w);
  const Vec3 eye = camera.center();
  if (mesh.watertight() && winding_number(mesh, eye) > 0.5) {
    spdlog::warn("trace_pixels: camera center lies inside the mesh; every pixel is a miss");
    return hits;
  }
  const double offset = options.shadow_offset.value_or(default_shadow_offset(mesh));
  const auto rows = static_cast<long>(h);

#pragma omp parallel for schedule(dynamic, 4) num_threads(std::max(1, options.threads))
  for (long r = 0; r < rows; ++r) {
    const auto row = static_cast<std::size_t>(r);
    for (std::size_t col = 0; col < w; ++col) {
      Ray ray;
      ray.origin = eye;
      ray.direction = camera.pixel_direction(static_cast<double>(col), static_cast<double>(row));
      const RayHit hit = caster.closest_hit(ray, options.mode);
      if (!hit.hit) continue;
      PixelHit& px = hits(row, col);
      px.hit = true;
      px.distance = hit.t;
      px.point = hit.point;
      px.face = hit.face;
      px.depth = (camera.rotation * hit.point + camera.translation).z();
      if (camera.sun_direction)
        px.shadowed = in_shadow(caster, hit.point, hit.face, *camera.sun_direction, offset, options.mode);
    }
  }
  return hits;
}

std::optional<ImageMeta> compute_image_meta(const LocalFrame& dem_frame, const CameraFrame& camera,
                                            const Grid<PixelHit>& hits) {
  ImageMeta meta;
  double gsd_sum = 0.0, depth_sum = 0.0;
  for (const PixelHit& px : hits.values()) {
    if (!px.hit) continue;
    ++meta.hit_pixels;
    if (!px.shadowed) ++meta.lit_pixels;
    gsd_sum += 0.5 * (px.depth / camera.intrinsics.fx + px.depth / camera.intrinsics.fy);
    depth_sum += px.distance;
  }
  if (meta.hit_pixels == 0) return std::nullopt;
  const auto n = static_cast<double>(meta.hit_pixels);
  meta.gsd = gsd_sum / n;
  meta.imaging_depth = depth_sum / n;
  meta.visibility_ratio = static_cast<double>(meta.lit_pixels) / n;
  const double c = std::clamp((-dem_frame.z_axis()).dot(camera.boresight()), -1.0, 1.0);
  meta.viewing_angle = std::acos(c) * 180.0 / std::numbers::pi;
  return meta;
}

PixelLabelMap labels_from_hits(const HazardMap& hazard, const CameraFrame& camera, const Grid<PixelHit>& hits) {
  PixelLabelMap out;
  out.labels = Grid<std::uint8_t>(hits.rows(), hits.cols(), code(Safety::kInvalid));
  out.shadow = Grid<std::uint8_t>(hits.rows(), hits.cols(), 0);
  for (std::size_t r = 0; r < hits.rows(); ++r) {
    for (std::size_t c = 0; c < hits.cols(); ++c) {
      const PixelHit& px = hits(r, c);
      if (!px.hit) continue;
      out.shadow(r, c) = px.shadowed ? 1 : 0;
      const Vec3 local = hazard.frame.to_local(px.point);
      const double fc = std::round((local.x() - hazard.grid_origin.x()) / hazard.cell_size);
      const double fr = std::round((local.y() - hazard.grid_origin.y()) / hazard.cell_size);
      if (fc < 0 || fr < 0 || fc >= static_cast<double>(hazard.cols()) || fr >= static_cast<double>(hazard.rows()))
        continue;
      out.labels(r, c) = hazard.safe(static_cast<std::size_t>(fr), static_cast<std::size_t>(fc));
    }
  }
  out.meta = compute_image_meta(hazard.frame, camera, hits);
  return out;
}

PixelLabelMap project_labels(const HazardMap& hazard, const Dem& dem, const CameraFrame& camera,
                             const TriangleMesh& mesh, const TraceOptions& options) {
  if (hazard.rows() != dem.rows() || hazard.cols() != dem.cols() || hazard.cell_size != dem.cell_size)
    throw StructuralError("project_labels: hazard map and DEM geometry differ");
  const MeshRaycaster caster(mesh);
  const Grid<PixelHit> hits = trace_pixels(mesh, caster, camera, options);
  return labels_from_hits(hazard, camera, hits);
}

Grid<std::uint8_t> shadow_from_intensity(const Grid<float>& image, double fraction) {
  Grid<std::uint8_t> mask(image.rows(), image.cols(), 0);
  if (image.empty()) return mask;
  std::vector<float> sorted(image.values().begin(), image.values().end());
  const auto k = static_cast<std::size_t>(std::floor(0.99 * static_cast<double>(sorted.size() - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  const double threshold = fraction * static_cast<double>(sorted[k]);
  for (std::size_t i = 0; i < image.size(); ++i)
    mask.values()[i] = static_cast<double>(image.values()[i]) < threshold ? 1 : 0;
  return mask;
}

}  // namespace sbhd

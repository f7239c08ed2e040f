#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "sbhd/camera.hpp"
#include "sbhd/errors.hpp"
#include "sbhd/hazard.hpp"
#include "sbhd/synth.hpp"

using namespace sbhd;

namespace {

struct Site {
  TriangleMesh mesh;
  Dem dem;
  HazardMap hazard;
};

Site site_from(const Dem& source) {
  Site s;
  s.mesh = heightfield_mesh(source);
  s.dem = rasterize_local(s.mesh, LocalFrame{}, source.cell_size, source.cols(), source.rows());
  s.hazard = evaluate_dem(s.dem, SafetyConfig{});
  return s;
}

std::size_t count_code(const Grid<std::uint8_t>& g, std::uint8_t v) {
  return static_cast<std::size_t>(std::count(g.values().begin(), g.values().end(), v));
}

}  // namespace

TEST(Camera, LookAtBuildsAProperRotation) {
  const CameraFrame cam = look_at(Vec3(1, 2, 3), Vec3::Zero(), Vec3::UnitZ(), fixtures::intrinsics(8, 8, 10));
  EXPECT_NO_THROW(cam.validate());
  EXPECT_NEAR(cam.rotation.determinant(), 1.0, 1e-14);
  EXPECT_LT((cam.center() - Vec3(1, 2, 3)).norm(), 1e-14);
  EXPECT_LT((cam.boresight() + Vec3(1, 2, 3).normalized()).norm(), 1e-14);
  // Principal point ray is the boresight.
  EXPECT_LT((cam.pixel_direction(3.5, 3.5) - cam.boresight()).norm(), 1e-14);
  EXPECT_THROW(look_at(Vec3(0, 0, 1), Vec3::Zero(), Vec3::UnitZ(), fixtures::intrinsics(8, 8, 10)), DomainError);
}

TEST(Camera, NadirOverFlatGroundIsAllSafe) {
  const Site s = site_from(fixtures::flat_dem(41));
  const CameraFrame cam = fixtures::nadir_camera(2.0, fixtures::intrinsics(32, 32, 200.0));
  const PixelLabelMap map = project_labels(s.hazard, s.dem, cam, s.mesh);
  EXPECT_EQ(count_code(map.labels, code(Safety::kSafe)), 32u * 32u);
  ASSERT_TRUE(map.meta);
  EXPECT_NEAR(map.meta->gsd, 2.0 / 200.0, 1e-12);
  EXPECT_NEAR(map.meta->imaging_depth, 2.0, 5e-3);
  EXPECT_NEAR(map.meta->viewing_angle, 0.0, 1e-6);
  EXPECT_EQ(map.meta->hit_pixels, 32u * 32u);
}

TEST(Camera, DoublingFocalLengthHalvesGsd) {
  const Site s = site_from(fixtures::flat_dem(41));
  const auto a = project_labels(s.hazard, s.dem, fixtures::nadir_camera(2.0, fixtures::intrinsics(16, 16, 100.0)), s.mesh);
  const auto b = project_labels(s.hazard, s.dem, fixtures::nadir_camera(2.0, fixtures::intrinsics(16, 16, 200.0)), s.mesh);
  EXPECT_NEAR(a.meta->gsd / b.meta->gsd, 2.0, 1e-12);
}

TEST(Camera, SteepGroundIsAllUnsafe) {
  const Site s = site_from(fixtures::plane_dem(41, 40.0, 10.0));
  const CameraFrame cam = fixtures::nadir_camera(3.0, fixtures::intrinsics(24, 24, 300.0));
  const PixelLabelMap map = project_labels(s.hazard, s.dem, cam, s.mesh);
  EXPECT_EQ(count_code(map.labels, code(Safety::kUnsafe)), 24u * 24u);
}

TEST(Camera, ViewingAngleFollowsElevation) {
  const Site s = site_from(fixtures::flat_dem(41));
  const double elev = 60.0 * fixtures::kDeg;
  const Vec3 eye(3 * std::cos(elev), 0, 3 * std::sin(elev));
  const CameraFrame cam = look_at(eye, Vec3::Zero(), Vec3::UnitZ(), fixtures::intrinsics(16, 16, 200.0));
  const PixelLabelMap map = project_labels(s.hazard, s.dem, cam, s.mesh);
  ASSERT_TRUE(map.meta);
  EXPECT_NEAR(map.meta->viewing_angle, 30.0, 1e-9);
}

TEST(Camera, HalfShadowedRidgeHasVisibilityOneHalf) {
  // Ridge z = -|x|: the +x flank faces the sun, the -x flank faces away.
  Dem ridge = fixtures::flat_dem(41);
  for (std::size_t r = 0; r < 41; ++r)
    for (std::size_t c = 0; c < 41; ++c) ridge.elevations(r, c) = -std::abs(ridge.x_of(c));
  const Site s = site_from(ridge);
  CameraFrame cam = fixtures::nadir_camera(2.0, fixtures::intrinsics(32, 32, 100.0));
  cam.sun_direction = Vec3(1, 0, 0.5).normalized();
  const PixelLabelMap map = project_labels(s.hazard, s.dem, cam, s.mesh);
  ASSERT_TRUE(map.meta);
  EXPECT_EQ(map.meta->hit_pixels, 32u * 32u);
  EXPECT_DOUBLE_EQ(map.meta->visibility_ratio, 0.5);
  for (std::size_t r = 0; r < 32; ++r)
    for (std::size_t c = 0; c < 32; ++c) EXPECT_EQ(map.shadow(r, c), c < 16 ? 1 : 0);
}

TEST(Camera, OccluderCastsShadow) {
  // A hovering slab between the ground and the sun shadows the ground under it.
  const TriangleMesh ground = fixtures::plate(3.0, 0.0);
  const TriangleMesh slab = make_box(Vec3(-0.3, -3, 1.0), Vec3(0.3, 3, 1.1));
  std::vector<Vec3> v = ground.vertices();
  std::vector<Face> f = ground.faces();
  const auto base = static_cast<std::uint32_t>(v.size());
  v.insert(v.end(), slab.vertices().begin(), slab.vertices().end());
  for (Face face : slab.faces()) f.push_back({face[0] + base, face[1] + base, face[2] + base});
  const TriangleMesh mesh(v, f);
  const MeshRaycaster caster(mesh);
  const Vec3 sun = Vec3::UnitZ();
  const double off = default_shadow_offset(mesh);
  // The plate's upward face.
  std::uint32_t top = 0;
  for (std::uint32_t i = 0; i < ground.face_count(); ++i)
    if (caster.face_normal(i).z() > 0.99) top = i;
  EXPECT_TRUE(in_shadow(caster, Vec3(0.1, 0.5, 0), top, sun, off, TraceMode::kBvh));
  EXPECT_FALSE(in_shadow(caster, Vec3(1.0, 0.5, 0), top, sun, off, TraceMode::kBvh));
  EXPECT_TRUE(in_shadow(caster, Vec3(1.0, 0.5, 0), top, -sun, off, TraceMode::kBvh));  // back-facing
}

TEST(Camera, InsideTheMeshSeesNothing) {
  const TriangleMesh cube = make_unit_cube();
  const MeshRaycaster caster(cube);
  const CameraFrame cam = look_at(Vec3(0.1, 0, 0), Vec3(1, 0, 0), Vec3::UnitZ(), fixtures::intrinsics(8, 8, 10));
  const Grid<PixelHit> hits = trace_pixels(cube, caster, cam);
  for (const PixelHit& px : hits.values()) EXPECT_FALSE(px.hit);
  EXPECT_FALSE(compute_image_meta(LocalFrame{}, cam, hits));
}

TEST(Camera, OffGridAndMissedPixelsAreInvalid) {
  const Site s = site_from(fixtures::flat_dem(21));
  // Wide field of view sees past the 1 m grid into empty space.
  const CameraFrame cam = fixtures::nadir_camera(2.0, fixtures::intrinsics(32, 32, 8.0));
  const PixelLabelMap map = project_labels(s.hazard, s.dem, cam, s.mesh);
  EXPECT_GT(count_code(map.labels, code(Safety::kInvalid)), 0u);
  EXPECT_GT(count_code(map.labels, code(Safety::kSafe)), 0u);
  EXPECT_EQ(map.labels(0, 0), code(Safety::kInvalid));
}

TEST(Camera, BvhAndBruteForceLabelsAgree) {
  const TriangleMesh mesh = generate_scene(fixtures::small_scene(5));
  const LocalFrame frame;  // site at +z with the body's own axes
  const Dem dem = rasterize_dem(mesh, frame, 0.05, 30, 30);
  const HazardMap hazard = evaluate_dem(dem, SafetyConfig{});
  CameraFrame cam = look_at(Vec3(1.5, 0.5, 8.0), Vec3(0, 0, 5), Vec3::UnitZ(), fixtures::intrinsics(48, 48, 60));
  cam.sun_direction = Vec3(0.6, 0.3, 0.75).normalized();
  TraceOptions brute;
  brute.mode = TraceMode::kBruteForce;
  const auto a = project_labels(hazard, dem, cam, mesh);
  const auto b = project_labels(hazard, dem, cam, mesh, brute);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.shadow, b.shadow);
}

TEST(Camera, JsonRoundTrip) {
  CameraFrame cam = look_at(Vec3(1, -2, 3), Vec3(0.1, 0, 0), Vec3::UnitZ(), fixtures::intrinsics(64, 48, 55.5));
  cam.sun_direction = Vec3(0, 0.6, 0.8);
  const CameraFrame back = CameraFrame::from_json(cam.to_json());
  EXPECT_EQ(back.rotation, cam.rotation);
  EXPECT_EQ(back.translation, cam.translation);
  EXPECT_EQ(back.intrinsics.width, 64u);
  EXPECT_EQ(back.intrinsics.cy, cam.intrinsics.cy);
  EXPECT_EQ(*back.sun_direction, *cam.sun_direction);
  auto doc = cam.to_json();
  doc["skew"] = 0;
  EXPECT_THROW(CameraFrame::from_json(doc), StructuralError);
  doc = cam.to_json();
  doc["fx"] = -1.0;
  EXPECT_THROW(CameraFrame::from_json(doc), DomainError);
}

TEST(Camera, IntensityShadowMask) {
  Grid<float> img(10, 10, 0.8f);
  img(0, 0) = 0.01f;
  img(1, 1) = 0.05f;
  const Grid<std::uint8_t> mask = shadow_from_intensity(img, 0.05);
  EXPECT_EQ(mask(0, 0), 1);
  EXPECT_EQ(mask(1, 1), 0);  // 0.05 >= 0.05 * 0.8
  EXPECT_EQ(count_code(mask, 1), 1u);
}

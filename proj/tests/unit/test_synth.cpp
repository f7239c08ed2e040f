#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "sbhd/errors.hpp"
#include "sbhd/hazard.hpp"
#include "sbhd/synth.hpp"

using namespace sbhd;

TEST(SplitMix64, MatchesReferenceStream) {
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng.next(), 0x06C45D188009454FULL);
  SplitMix64 u(1234);
  for (int i = 0; i < 10000; ++i) {
    const double x = u.uniform();
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
  }
}

TEST(Synth, PlainSphereHasBaseRadius) {
  SceneSpec spec = fixtures::small_scene(1);
  spec.fractal_amplitude = 0.0;
  spec.boulder_count = 0;
  const TriangleMesh m = generate_scene(spec);
  EXPECT_TRUE(m.watertight());
  for (const Vec3& p : m.vertices()) EXPECT_NEAR(p.norm(), spec.base_radius, 1e-12);
}

TEST(Synth, SiteIsRefinedToTheTargetEdge) {
  const SceneSpec spec = fixtures::small_scene(2);
  const TriangleMesh m = generate_scene(spec);
  EXPECT_TRUE(m.watertight());
  double longest_in_site = 0.0;
  for (const Edge& e : m.edges()) {
    const Vec3 a = m.vertices()[e.v0], b = m.vertices()[e.v1];
    const Vec3 mid = (a + b).normalized();
    if (std::acos(std::min(1.0, mid.dot(spec.site_direction))) * spec.base_radius < 0.5 * spec.site_radius)
      longest_in_site = std::max(longest_in_site, (a.normalized() - b.normalized()).norm() * spec.base_radius);
  }
  EXPECT_LE(longest_in_site, spec.site_edge * 1.0001);
}

TEST(Synth, DeterministicInTheSpec) {
  const SceneSpec spec = fixtures::small_scene(3);
  const TriangleMesh a = generate_scene(spec), b = generate_scene(spec);
  EXPECT_EQ(a.vertices(), b.vertices());
  EXPECT_EQ(a.faces(), b.faces());
  const TriangleMesh c = generate_scene(fixtures::small_scene(4));
  EXPECT_NE(a.vertices(), c.vertices());
}

TEST(Synth, SurfaceRadiusMatchesVertices) {
  const SceneSpec spec = fixtures::small_scene(6);
  const TriangleMesh m = generate_scene(spec);
  for (std::size_t i = 0; i < m.vertex_count(); i += 97)
    EXPECT_NEAR(m.vertices()[i].norm(), scene_surface_radius(spec, m.vertices()[i]), 1e-12);
}

TEST(Synth, BouldersRaiseTheUnsafeFraction) {
  SceneSpec smooth = fixtures::small_scene(8);
  smooth.boulder_count = 0;
  SceneSpec rocky = smooth;
  rocky.boulder_count = 40;
  rocky.boulder_size_min = 0.2;
  rocky.boulder_size_max = 0.4;
  auto unsafe_fraction = [](const SceneSpec& s) {
    const Dem dem = rasterize_dem(generate_scene(s), LocalFrame{}, 0.05, 40, 40);
    return 1.0 - evaluate_dem(dem, SafetyConfig{}).safe_fraction();
  };
  const double a = unsafe_fraction(smooth), b = unsafe_fraction(rocky);
  EXPECT_GT(b, a + 0.05);
}

TEST(Synth, LambertianShadingOfAPlate) {
  const TriangleMesh plate = fixtures::plate(2.0);
  const MeshRaycaster caster(plate);
  const CameraFrame cam = fixtures::nadir_camera(2.0, fixtures::intrinsics(16, 16, 40.0));
  const RenderedImage overhead = render_image(plate, caster, cam, Vec3::UnitZ());
  for (float v : overhead.image.values()) EXPECT_FLOAT_EQ(v, 1.0f);
  const double inc = 60.0 * fixtures::kDeg;
  const RenderedImage oblique = render_image(plate, caster, cam, Vec3(std::sin(inc), 0, std::cos(inc)));
  for (float v : oblique.image.values()) EXPECT_NEAR(v, 0.5f, 1e-6);
  EXPECT_EQ(std::count(oblique.shadow.values().begin(), oblique.shadow.values().end(), 1), 0);
  const RenderedImage below = render_image(plate, caster, cam, -Vec3::UnitZ());
  for (std::size_t i = 0; i < below.image.size(); ++i) {
    EXPECT_EQ(below.image.values()[i], 0.0f);
    EXPECT_EQ(below.shadow.values()[i], 1);
  }
}

TEST(Synth, RenderedShadowsMatchProjectedShadows) {
  const SceneSpec spec = fixtures::small_scene(9);
  const TriangleMesh mesh = generate_scene(spec);
  const Dem dem = rasterize_dem(mesh, LocalFrame{}, 0.05, 30, 30);
  const HazardMap hazard = evaluate_dem(dem, SafetyConfig{});
  CameraFrame cam = look_at(Vec3(-1.0, 2.0, 7.5), Vec3(0, 0, 5), Vec3::UnitZ(), fixtures::intrinsics(40, 40, 50));
  cam.sun_direction = spec.sun_direction;
  const PixelLabelMap labels = project_labels(hazard, dem, cam, mesh);
  const RenderedImage img = render_image(mesh, MeshRaycaster(mesh), cam, spec.sun_direction);
  EXPECT_EQ(labels.shadow, img.shadow);
  EXPECT_GT(std::count(img.shadow.values().begin(), img.shadow.values().end(), 1), 0);
}

TEST(Synth, SpecJsonRoundTripAndValidation) {
  const SceneSpec spec = fixtures::small_scene(10);
  const SceneSpec back = SceneSpec::from_json(spec.to_json());
  EXPECT_EQ(back.to_json(), spec.to_json());
  auto doc = spec.to_json();
  doc["boulders"] = 3;
  EXPECT_THROW(SceneSpec::from_json(doc), StructuralError);
  doc = spec.to_json();
  doc["base_radius"] = -1.0;
  EXPECT_THROW(SceneSpec::from_json(doc), DomainError);
  doc = spec.to_json();
  doc["seed"] = "abc";
  EXPECT_THROW(SceneSpec::from_json(doc), StructuralError);
}

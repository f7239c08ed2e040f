#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "sbhd/dem.hpp"
#include "sbhd/raycast.hpp"
#include "sbhd/synth.hpp"

using namespace sbhd;

TEST(Raycast, TriangleHitAndMiss) {
  const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
  Ray ray;
  ray.origin = Vec3(0.25, 0.25, 2);
  ray.direction = Vec3(0, 0, -1);
  const auto hit = intersect_triangle(ray, a, b, c);
  ASSERT_TRUE(hit);
  EXPECT_DOUBLE_EQ(hit->t, 2.0);
  ray.origin = Vec3(0.75, 0.75, 2);
  EXPECT_FALSE(intersect_triangle(ray, a, b, c));
  // Shared edge counts as a hit.
  ray.origin = Vec3(0.5, 0.5, 2);
  EXPECT_TRUE(intersect_triangle(ray, a, b, c));
  // Two-sided.
  ray.origin = Vec3(0.25, 0.25, -2);
  ray.direction = Vec3(0, 0, 1);
  EXPECT_TRUE(intersect_triangle(ray, a, b, c));
}

TEST(Raycast, BvhMatchesBruteForceExactly) {
  const TriangleMesh mesh = generate_scene(fixtures::small_scene(3));
  const MeshRaycaster caster(mesh);
  SplitMix64 rng(99);
  std::size_t hits = 0;
  for (int i = 0; i < 2000; ++i) {
    Ray ray;
    ray.origin = Vec3(rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-8, 8));
    const Vec3 target(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    ray.direction = target - ray.origin;
    const RayHit bvh = caster.closest_hit(ray, TraceMode::kBvh);
    const RayHit brute = caster.closest_hit(ray, TraceMode::kBruteForce);
    ASSERT_EQ(bvh.hit, brute.hit) << i;
    if (!bvh.hit) continue;
    ++hits;
    EXPECT_EQ(bvh.t, brute.t);
    EXPECT_EQ(bvh.face, brute.face);
    EXPECT_EQ(caster.any_hit(ray, TraceMode::kBvh), true);
  }
  EXPECT_GT(hits, 1000u);
}

TEST(Dem, FlatPlateRastersToConstantHeight) {
  const Dem dem = rasterize_local(fixtures::plate(2.0, 0.5), LocalFrame{}, 0.05, 40, 30);
  EXPECT_EQ(dem.rows(), 30u);
  EXPECT_EQ(dem.cols(), 40u);
  EXPECT_EQ(dem.valid_count(), 1200u);
  for (double z : dem.elevations.values()) EXPECT_NEAR(z, 0.5, 1e-12);
  EXPECT_NO_THROW(dem.validate());
}

TEST(Dem, TiltedPlaneHeightfieldRoundTrips) {
  const Dem plane = fixtures::plane_dem(33, 20.0, 35.0);
  const TriangleMesh mesh = heightfield_mesh(plane);
  EXPECT_EQ(mesh.face_count(), 2u * 32u * 32u);
  for (TraceMode mode : {TraceMode::kBvh, TraceMode::kBruteForce}) {
    RasterOptions opt;
    opt.mode = mode;
    const Dem back = rasterize_local(mesh, LocalFrame{}, plane.cell_size, 33, 33, opt);
    EXPECT_EQ(back.valid_count(), 33u * 33u);
    for (std::size_t i = 0; i < plane.elevations.size(); ++i)
      EXPECT_NEAR(back.elevations.values()[i], plane.elevations.values()[i], 1e-12);
  }
}

TEST(Dem, RasterizesABodyFixedMeshThroughItsFrame) {
  const LocalFrame frame = frame_from_gravity(Vec3(0, 0, 3), Vec3(0.2, 0.1, -1));
  // Plate in local coordinates moved into the body frame.
  const TriangleMesh local = fixtures::plate(1.5, 0.0);
  const TriangleMesh body = local.transformed(frame.rotation.transpose(), frame.origin);
  const Dem dem = rasterize_dem(body, frame, 0.05, 20, 20);
  EXPECT_EQ(dem.valid_count(), 400u);
  for (double z : dem.elevations.values()) EXPECT_NEAR(z, 0.0, 1e-12);
}

TEST(Dem, HighestSurfaceWinsAndGapsAreNodata) {
  // Two stacked plates: only the top of the upper one is seen.
  std::vector<Vec3> v;
  std::vector<Face> f;
  for (const TriangleMesh& m : {fixtures::plate(0.4, 0.0), fixtures::plate(0.2, 1.0, 0.2)}) {
    const auto base = static_cast<std::uint32_t>(v.size());
    v.insert(v.end(), m.vertices().begin(), m.vertices().end());
    for (Face face : m.faces()) f.push_back({face[0] + base, face[1] + base, face[2] + base});
  }
  const Dem dem = rasterize_local(TriangleMesh(v, f), LocalFrame{}, 0.05, 24, 24);
  std::size_t top = 0, low = 0, none = 0;
  for (std::size_t r = 0; r < dem.rows(); ++r)
    for (std::size_t c = 0; c < dem.cols(); ++c) {
      const double x = dem.x_of(c), y = dem.y_of(r);
      if (std::abs(x) > 0.4 || std::abs(y) > 0.4) {
        EXPECT_FALSE(dem.valid(r, c));
        ++none;
      } else if (std::abs(x) < 0.2 && std::abs(y) < 0.2) {
        EXPECT_NEAR(dem.elevations(r, c), 1.0, 1e-12);
        ++top;
      } else if (std::abs(x) > 0.2 || std::abs(y) > 0.2) {
        EXPECT_NEAR(dem.elevations(r, c), 0.0, 1e-12);
        ++low;
      }
    }
  EXPECT_GT(top, 0u);
  EXPECT_GT(low, 0u);
  EXPECT_GT(none, 0u);
}

TEST(Dem, MissedGridIsAllNodata) {
  const TriangleMesh far = make_box(Vec3(10, 10, 0), Vec3(11, 11, 1));
  const Dem dem = rasterize_local(far, LocalFrame{}, 0.05, 10, 10);
  EXPECT_EQ(dem.valid_count(), 0u);
  EXPECT_NO_THROW(dem.validate());
}

TEST(Dem, BilinearSampling) {
  Grid<double> z(3, 3);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) z(r, c) = static_cast<double>(r * 10 + c);
  Dem dem = make_dem(z, 0.5);  // centered: x, y in [-0.5, 0.5]
  EXPECT_DOUBLE_EQ(*bilinear_sample(dem, -0.5, -0.5), 0.0);
  EXPECT_DOUBLE_EQ(*bilinear_sample(dem, 0.5, 0.5), 22.0);  // last corner
  EXPECT_DOUBLE_EQ(*bilinear_sample(dem, -0.25, -0.25), 5.5);
  EXPECT_DOUBLE_EQ(*bilinear_sample(dem, 0.5, 0.0), 12.0);  // last column
  EXPECT_FALSE(bilinear_sample(dem, 0.51, 0.0));
  EXPECT_FALSE(bilinear_sample(dem, 0.0, -0.6));
  dem.nodata(0, 0) = 1;
  EXPECT_FALSE(bilinear_sample(dem, -0.25, -0.25));
  EXPECT_TRUE(bilinear_sample(dem, 0.25, 0.25));
}

TEST(Dem, HeightfieldSkipsBlocksWithNodata) {
  Dem dem = fixtures::flat_dem(5);
  const std::size_t full = heightfield_mesh(dem).face_count();
  EXPECT_EQ(full, 32u);
  dem.nodata(2, 2) = 1;
  EXPECT_EQ(heightfield_mesh(dem).face_count(), 32u - 8u);
  dem.nodata(0, 0) = 1;
  EXPECT_EQ(heightfield_mesh(dem).face_count(), 32u - 10u);
}

TEST(Dem, ThreadCountDoesNotChangeOutput) {
  const TriangleMesh mesh = heightfield_mesh(fixtures::random_rough_dem(5, 40));
  RasterOptions one, four;
  four.threads = 4;
  const Dem a = rasterize_local(mesh, LocalFrame{}, 0.037, 50, 50, one);
  const Dem b = rasterize_local(mesh, LocalFrame{}, 0.037, 50, 50, four);
  EXPECT_EQ(a.elevations.values().size(), b.elevations.values().size());
  EXPECT_EQ(a.nodata, b.nodata);
  for (std::size_t i = 0; i < a.elevations.size(); ++i)
    if (a.nodata.values()[i] == 0) {
      EXPECT_EQ(a.elevations.values()[i], b.elevations.values()[i]);
    }
}

#include <gtest/gtest.h>

#include "sbhd/errors.hpp"
#include "sbhd/local_frame.hpp"

using namespace sbhd;

TEST(LocalFrame, ZOpposesGravityAndIsOrthonormal) {
  const Vec3 g(0.3, -0.2, -1.5);
  const LocalFrame f = frame_from_gravity(Vec3(1, 2, 3), g);
  EXPECT_NO_THROW(f.validate());
  EXPECT_LT((f.z_axis() + g.normalized()).norm(), 1e-14);
  EXPECT_NEAR(f.rotation.determinant(), 1.0, 1e-14);
  // x axis is body +x projected onto the tangent plane.
  const Vec3 z = f.z_axis();
  const Vec3 x_expected = (Vec3::UnitX() - z * z.x()).normalized();
  EXPECT_LT((f.x_axis() - x_expected).norm(), 1e-14);
}

TEST(LocalFrame, FallsBackToBodyYWhenXIsVertical) {
  const LocalFrame f = frame_from_gravity(Vec3::Zero(), Vec3(-9.8, 0, 0));
  EXPECT_LT((f.z_axis() - Vec3::UnitX()).norm(), 1e-15);
  EXPECT_LT((f.x_axis() - Vec3::UnitY()).norm(), 1e-15);
  EXPECT_NO_THROW(f.validate());
}

TEST(LocalFrame, RoundTripsPoints) {
  const LocalFrame f = frame_from_gravity(Vec3(0.5, -1, 2), Vec3(1, 1, -3));
  const Vec3 p(4, -2, 7);
  EXPECT_LT((f.to_body(f.to_local(p)) - p).norm(), 1e-13);
  EXPECT_LT(f.to_local(f.origin).norm(), 1e-15);
}

TEST(LocalFrame, ZeroGravityIsDomainError) {
  EXPECT_THROW(frame_from_gravity(Vec3::Zero(), Vec3::Zero()), DomainError);
}

TEST(LocalFrame, ValidateRejectsNonOrthonormalAndReflections) {
  LocalFrame f;
  f.rotation(0, 1) = 0.1;
  EXPECT_THROW(f.validate(), StructuralError);
  LocalFrame mirrored;
  mirrored.rotation(2, 2) = -1;
  EXPECT_THROW(mirrored.validate(), StructuralError);
}

TEST(LocalFrame, SphereFrameIsRadial) {
  const TriangleMesh s = make_icosphere(2.0, 3);
  const PolyhedronGravity g(s);
  const Vec3 site = s.vertices()[0];
  const FrameResult r = build_local_frame(s, g, GravityParams{}, site);
  EXPECT_GT(r.evaluation_point.norm(), site.norm());
  // Gravity of a near-sphere points at its center to well under a degree.
  EXPECT_GT(r.frame.z_axis().dot(site.normalized()), std::cos(0.5 * 3.14159265 / 180));
  EXPECT_LT((r.frame.origin - site).norm(), 1e-15);
}

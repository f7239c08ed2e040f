#pragma once

#include <optional>

#include "sbhd/gravity.hpp"
#include "sbhd/mesh.hpp"

namespace sbhd {

/// Gravity-aligned local frame. `rotation` maps body-fixed offsets into local
/// coordinates: local = rotation * (body - origin). Its rows are the local
/// x, y and z axes expressed in the body frame; z points against gravity.
struct LocalFrame {
  Vec3 origin = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  Vec3 x_axis() const { return rotation.row(0).transpose(); }
  Vec3 y_axis() const { return rotation.row(1).transpose(); }
  Vec3 z_axis() const { return rotation.row(2).transpose(); }

  Vec3 to_local(const Vec3& body) const { return rotation * (body - origin); }
  Vec3 to_body(const Vec3& local) const { return rotation.transpose() * local + origin; }
  Vec3 direction_to_local(const Vec3& body_dir) const { return rotation * body_dir; }

  /// Orthonormality and handedness to `tol`. Throws StructuralError otherwise.
  void validate(double tol = 1e-9) const;
};

/// Frame whose +z opposes `gravity`. The x axis is the body +x projected onto
/// the plane normal to z, or body +y when +x is (nearly) parallel to z.
/// Throws DomainError for a zero gravity vector.
LocalFrame frame_from_gravity(const Vec3& origin, const Vec3& gravity);

struct FrameOptions {
  /// Outward nudge of the gravity evaluation point, in meters. Unset means
  /// 1e-3 times the mesh mean edge length.
  std::optional<double> surface_epsilon;
};

struct FrameResult {
  LocalFrame frame;
  Vec3 gravity = Vec3::Zero();      // acceleration at the nudged point
  Vec3 evaluation_point = Vec3::Zero();
};

/// Builds the frame at `surface_point`, evaluating gravity just outside the
/// surface along the normal of the closest face.
FrameResult build_local_frame(const TriangleMesh& mesh, const PolyhedronGravity& gravity,
                              const GravityParams& params, const Vec3& surface_point,
                              const FrameOptions& options = {});

}  // namespace sbhd

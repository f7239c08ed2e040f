#include "sbhd/local_frame.hpp"

#include <cmath>

#include "sbhd/errors.hpp"

namespace sbhd {

void LocalFrame::validate(double tol) const {
  if (!rotation.allFinite() || !origin.allFinite()) throw StructuralError("local frame: non-finite entries");
  const double ortho = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tol) throw StructuralError("local frame: rotation is not orthonormal");
  if (rotation.determinant() < 0.0) throw StructuralError("local frame: rotation is not right-handed");
}

LocalFrame frame_from_gravity(const Vec3& origin, const Vec3& gravity) {
  const double g = gravity.norm();
  if (!(g > 0.0) || !std::isfinite(g)) throw DomainError("local frame: gravity vector is zero or non-finite");
  const Vec3 z = -gravity / g;
  // Projection falls back to +y when +x is within ~0.06° of the z axis.
  constexpr double kDegenerate = 1e-3;
  Vec3 x = Vec3::UnitX() - z * z.x();
  if (x.norm() < kDegenerate) x = Vec3::UnitY() - z * z.y();
  x.normalize();
  // Re-orthogonalize once; the projection above leaves O(eps) residue.
  x = (x - z * z.dot(x)).normalized();
  const Vec3 y = z.cross(x);

  LocalFrame frame;
  frame.origin = origin;
  frame.rotation.row(0) = x.transpose();
  frame.rotation.row(1) = y.transpose();
  frame.rotation.row(2) = z.transpose();
  return frame;
}

FrameResult build_local_frame(const TriangleMesh& mesh, const PolyhedronGravity& gravity,
                              const GravityParams& params, const Vec3& surface_point,
                              const FrameOptions& options) {
  const double eps = options.surface_epsilon.value_or(1e-3 * mesh.mean_edge_length());
  if (!(eps > 0.0)) throw DomainError("local frame: surface epsilon must be > 0");
  const ClosestFace nearest = closest_face(mesh, surface_point);
  FrameResult result;
  result.evaluation_point = nearest.point + eps * mesh.face_normal(nearest.face);
  result.gravity = gravity.acceleration(params, result.evaluation_point);
  result.frame = frame_from_gravity(surface_point, result.gravity);
  return result;
}

}  // namespace sbhd

#pragma once

#include <vector>

#include "sbhd/mesh.hpp"

namespace sbhd {

struct GravityParams {
  double density = 1190.0;                    // kg/m^3
  double gravitational_constant = 6.67430e-11;  // CODATA 2018, m^3 kg^-1 s^-2

  void validate() const;
};

struct GravitySample {
  Vec3 acceleration = Vec3::Zero();  // m/s^2
  double potential = 0.0;            // m^2/s^2, positive convention (g = grad U)
  double solid_angle_sum = 0.0;      // sr; 0 outside, 4π inside
};

/// Exterior gravitation of a constant-density polyhedron by edge and face
/// dyad summation (Werner & Scheeres). Dyads are built once in the
/// constructor; evaluation is const and reentrant.
class PolyhedronGravity {
 public:
  /// Throws StructuralError if `mesh` is not watertight.
  explicit PolyhedronGravity(const TriangleMesh& mesh);

  /// Acceleration at an exterior point. Throws DomainError when the point is
  /// inside (solid-angle sum above 2π) or on the surface.
  Vec3 acceleration(const GravityParams& params, const Vec3& point) const;

  /// Unchecked evaluation: returns the raw sums even for interior points.
  GravitySample evaluate(const GravityParams& params, const Vec3& point) const;

  double solid_angle_sum(const Vec3& point) const;

  std::size_t face_count() const { return faces_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

 private:
  struct EdgeTerm {
    std::uint32_t v0, v1;
    double length;
    Mat3 dyad;
  };
  struct FaceTerm {
    Face vertices;
    Mat3 dyad;
  };

  struct Sums {
    Vec3 edge_grad = Vec3::Zero();
    Vec3 face_grad = Vec3::Zero();
    double edge_pot = 0.0;
    double face_pot = 0.0;
    double omega = 0.0;
    bool on_surface = false;
  };
  Sums accumulate(const Vec3& point) const;

  std::vector<Vec3> vertices_;
  std::vector<EdgeTerm> edges_;
  std::vector<FaceTerm> faces_;
};

/// Gravitational acceleration of a point mass, for asymptotic comparisons.
Vec3 point_mass_acceleration(double gm, const Vec3& mass_position, const Vec3& point);

}  // namespace sbhd

#include "sbhd/gravity.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "sbhd/errors.hpp"

namespace sbhd {

namespace {

// Floor for the edge-log denominator. The argument only vanishes when the
// field point lies on the edge line, a measure-zero configuration.
constexpr double kLogFloor = 1e-300;
constexpr double kEps = std::numeric_limits<double>::epsilon();

}  // namespace

void GravityParams::validate() const {
  if (!(density > 0.0) || !std::isfinite(density)) throw DomainError("gravity: density must be > 0");
  if (!(gravitational_constant > 0.0)) throw DomainError("gravity: gravitational constant must be > 0");
}

PolyhedronGravity::PolyhedronGravity(const TriangleMesh& mesh) : vertices_(mesh.vertices()) {
  if (!mesh.watertight()) throw StructuralError("polyhedron gravity requires a watertight mesh");

  std::vector<Vec3> normals(mesh.face_count());
  faces_.reserve(mesh.face_count());
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    normals[f] = mesh.face_normal(f);
    faces_.push_back({mesh.faces()[f], normals[f] * normals[f].transpose()});
  }

  // Outward in-plane normal of edge (a -> b) within face f, where a -> b is
  // the direction f traverses it.
  auto edge_normal = [&](std::size_t f, std::uint32_t a, std::uint32_t b) -> Vec3 {
    return (vertices_[b] - vertices_[a]).cross(normals[f]).normalized();
  };
  auto traversal = [&](std::size_t f, std::uint32_t v0, std::uint32_t v1) -> std::pair<std::uint32_t, std::uint32_t> {
    const Face& t = mesh.faces()[f];
    for (int k = 0; k < 3; ++k)
      if (t[k] == v0 && t[(k + 1) % 3] == v1) return {v0, v1};
    return {v1, v0};
  };

  edges_.reserve(mesh.edges().size());
  for (const Edge& e : mesh.edges()) {
    const auto fa = static_cast<std::size_t>(e.face_a);
    const auto fb = static_cast<std::size_t>(e.face_b);
    const auto [a0, a1] = traversal(fa, e.v0, e.v1);
    const auto [b0, b1] = traversal(fb, e.v0, e.v1);
    const Mat3 dyad = normals[fa] * edge_normal(fa, a0, a1).transpose() +
                      normals[fb] * edge_normal(fb, b0, b1).transpose();
    edges_.push_back({e.v0, e.v1, (vertices_[e.v1] - vertices_[e.v0]).norm(), dyad});
  }
}

PolyhedronGravity::Sums PolyhedronGravity::accumulate(const Vec3& point) const {
  std::vector<Vec3> rel(vertices_.size());
  std::vector<double> dist(vertices_.size());
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    rel[i] = vertices_[i] - point;
    dist[i] = rel[i].norm();
  }

  Sums s;
  for (const EdgeTerm& e : edges_) {
    const double a = dist[e.v0], b = dist[e.v1];
    const double gap = a + b - e.length;
    if (gap <= 4.0 * kEps * (a + b)) s.on_surface = true;
    const double log_term = std::log((a + b + e.length) / std::max(gap, kLogFloor));
    const Vec3 er = e.dyad * rel[e.v0];
    s.edge_grad += er * log_term;
    s.edge_pot += rel[e.v0].dot(er) * log_term;
  }
  for (const FaceTerm& f : faces_) {
    const Vec3& r1 = rel[f.vertices[0]];
    const Vec3& r2 = rel[f.vertices[1]];
    const Vec3& r3 = rel[f.vertices[2]];
    const double l1 = dist[f.vertices[0]], l2 = dist[f.vertices[1]], l3 = dist[f.vertices[2]];
    const double numer = r1.dot(r2.cross(r3));
    const double denom = l1 * l2 * l3 + l1 * r2.dot(r3) + l2 * r3.dot(r1) + l3 * r1.dot(r2);
    // In the face plane and inside the triangle: the limit solid angle is ±2π.
    if (std::abs(numer) <= 4.0 * kEps * l1 * l2 * l3 && denom < 0.0) s.on_surface = true;
    const double omega = 2.0 * std::atan2(numer, denom);
    const Vec3 fr = f.dyad * r1;
    s.face_grad += fr * omega;
    s.face_pot += r1.dot(fr) * omega;
    s.omega += omega;
  }
  return s;
}

GravitySample PolyhedronGravity::evaluate(const GravityParams& params, const Vec3& point) const {
  params.validate();
  const Sums s = accumulate(point);
  const double g_rho = params.gravitational_constant * params.density;
  GravitySample out;
  out.acceleration = g_rho * (s.face_grad - s.edge_grad);
  out.potential = 0.5 * g_rho * (s.edge_pot - s.face_pot);
  out.solid_angle_sum = s.omega;
  return out;
}

Vec3 PolyhedronGravity::acceleration(const GravityParams& params, const Vec3& point) const {
  params.validate();
  const Sums s = accumulate(point);
  if (s.on_surface) throw DomainError("gravity: evaluation point lies on the polyhedron surface");
  if (std::abs(s.omega) > 2.0 * std::numbers::pi)
    throw DomainError("gravity: evaluation point is inside the polyhedron (solid-angle sum " +
                      std::to_string(s.omega) + " sr)");
  const double g_rho = params.gravitational_constant * params.density;
  return g_rho * (s.face_grad - s.edge_grad);
}

double PolyhedronGravity::solid_angle_sum(const Vec3& point) const { return accumulate(point).omega; }

Vec3 point_mass_acceleration(double gm, const Vec3& mass_position, const Vec3& point) {
  const Vec3 d = mass_position - point;
  const double r = d.norm();
  return gm / (r * r * r) * d;
}

}  // namespace sbhd

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "sbhd/mesh.hpp"

namespace sbhd {

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();  // need not be unit; t is in units of |direction|
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();
};

struct RayHit {
  bool hit = false;
  double t = std::numeric_limits<double>::infinity();
  std::uint32_t face = 0;
  Vec3 point = Vec3::Zero();
};

struct TriangleHit {
  double t, u, v;
};

/// Two-sided Möller–Trumbore test. Edges are inclusive to a 1e-12
/// barycentric tolerance so rays through shared edges and vertices hit.
std::optional<TriangleHit> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c);

enum class TraceMode { kBvh, kBruteForce };

/// Ray queries against a triangle mesh. Holds its own copy of the geometry.
/// kBvh and kBruteForce evaluate the same per-triangle test and break ties on
/// equal t by lower face index, so both modes return identical hits.
class MeshRaycaster {
 public:
  explicit MeshRaycaster(const TriangleMesh& mesh);

  RayHit closest_hit(const Ray& ray, TraceMode mode = TraceMode::kBvh) const;
  bool any_hit(const Ray& ray, TraceMode mode = TraceMode::kBvh) const;

  const Vec3& face_normal(std::uint32_t face) const { return normals_[face]; }
  std::size_t face_count() const { return triangles_.size(); }
  /// Bounding box of the whole mesh.
  const Vec3& lower() const { return nodes_.front().lower; }
  const Vec3& upper() const { return nodes_.front().upper; }

 private:
  struct Node {
    Vec3 lower, upper;
    std::uint32_t first = 0;  // leaf: first index into order_; inner: right child
    std::uint32_t count = 0;  // 0 for inner nodes
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids);
  bool slab(const Node& node, const Ray& ray, const Vec3& inv_dir, double t_limit, double& t_entry) const;
  void consider(const Ray& ray, std::uint32_t face, RayHit& best) const;

  std::vector<std::array<Vec3, 3>> triangles_;
  std::vector<Vec3> normals_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  double pad_ = 0.0;
};

}  // namespace sbhd

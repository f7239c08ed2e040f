#include "sbhd/raycast.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sbhd {

namespace {

constexpr double kBaryTol = 1e-12;
constexpr std::uint32_t kLeafSize = 4;

}  // namespace

std::optional<TriangleHit> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = ray.direction.cross(e2);
  const double det = e1.dot(p);
  const double scale = e1.norm() * e2.norm() * ray.direction.norm();
  if (!(std::abs(det) > 1e-14 * scale)) return std::nullopt;  // parallel or degenerate
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - a;
  const double u = s.dot(p) * inv;
  if (u < -kBaryTol || u > 1.0 + kBaryTol) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = ray.direction.dot(q) * inv;
  if (v < -kBaryTol || u + v > 1.0 + kBaryTol) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t < ray.t_min || t > ray.t_max) return std::nullopt;
  return TriangleHit{t, u, v};
}

MeshRaycaster::MeshRaycaster(const TriangleMesh& mesh) {
  const auto& v = mesh.vertices();
  triangles_.reserve(mesh.face_count());
  normals_.reserve(mesh.face_count());
  std::vector<Vec3> centroids;
  centroids.reserve(mesh.face_count());
  double extent = 1.0;
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const Face& t = mesh.faces()[f];
    triangles_.push_back({v[t[0]], v[t[1]], v[t[2]]});
    normals_.push_back(mesh.face_normal(f));
    centroids.push_back(mesh.face_centroid(f));
    for (const Vec3& p : triangles_.back()) extent = std::max(extent, p.cwiseAbs().maxCoeff());
  }
  // Boxes are padded so that hits accepted within the barycentric tolerance
  // never fall outside their node.
  pad_ = 1e-9 * extent;
  order_.resize(triangles_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * triangles_.size() / kLeafSize + 2);
  if (triangles_.empty()) {
    nodes_.push_back(Node{Vec3::Zero(), Vec3::Zero(), 0, 0});
    return;
  }
  build(0, static_cast<std::uint32_t>(order_.size()), centroids);
}

std::uint32_t MeshRaycaster::build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  Vec3 clo = lo, chi = hi;
  for (std::uint32_t i = begin; i < end; ++i) {
    for (const Vec3& p : triangles_[order_[i]]) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    clo = clo.cwiseMin(centroids[order_[i]]);
    chi = chi.cwiseMax(centroids[order_[i]]);
  }
  nodes_[index].lower = lo - Vec3::Constant(pad_);
  nodes_[index].upper = hi + Vec3::Constant(pad_);

  if (end - begin <= kLeafSize) {
    nodes_[index].first = begin;
    nodes_[index].count = end - begin;
    return index;
  }
  int axis = 0;
  (chi - clo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = centroids[a][axis], cb = centroids[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  build(begin, mid, centroids);
  const std::uint32_t right = build(mid, end, centroids);
  nodes_[index].first = right;
  nodes_[index].count = 0;
  return index;
}

bool MeshRaycaster::slab(const Node& node, const Ray& ray, const Vec3& inv_dir, double t_limit,
                         double& t_entry) const {
  double t0 = ray.t_min, t1 = t_limit;
  for (int k = 0; k < 3; ++k) {
    if (ray.direction[k] == 0.0) {
      if (ray.origin[k] < node.lower[k] || ray.origin[k] > node.upper[k]) return false;
      continue;
    }
    double near = (node.lower[k] - ray.origin[k]) * inv_dir[k];
    double far = (node.upper[k] - ray.origin[k]) * inv_dir[k];
    if (near > far) std::swap(near, far);
    t0 = std::max(t0, near);
    t1 = std::min(t1, far);
    if (t0 > t1) return false;
  }
  t_entry = t0;
  return true;
}

void MeshRaycaster::consider(const Ray& ray, std::uint32_t face, RayHit& best) const {
  const auto& tri = triangles_[face];
  const auto h = intersect_triangle(ray, tri[0], tri[1], tri[2]);
  if (!h) return;
  if (!best.hit || h->t < best.t || (h->t == best.t && face < best.face)) {
    best.hit = true;
    best.t = h->t;
    best.face = face;
  }
}

RayHit MeshRaycaster::closest_hit(const Ray& ray, TraceMode mode) const {
  RayHit best;
  if (mode == TraceMode::kBruteForce) {
    for (std::uint32_t f = 0; f < triangles_.size(); ++f) consider(ray, f, best);
  } else {
    const Vec3 inv = ray.direction.cwiseInverse();
    std::uint32_t stack[128];
    int top = 0;
    double entry = 0.0;
    if (slab(nodes_[0], ray, inv, ray.t_max, entry)) stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      // Ties at equal t must still be visited, hence the inclusive bound.
      const double limit = best.hit ? best.t : ray.t_max;
      if (!slab(node, ray, inv, limit, entry)) continue;
      if (node.count > 0) {
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i) consider(ray, order_[i], best);
        continue;
      }
      const auto left = static_cast<std::uint32_t>(&node - nodes_.data()) + 1;
      const std::uint32_t right = node.first;
      double tl = 0.0, tr = 0.0;
      const bool hl = slab(nodes_[left], ray, inv, limit, tl);
      const bool hr = slab(nodes_[right], ray, inv, limit, tr);
      if (hl && hr) {
        // Nearer child on top of the stack.
        if (tl <= tr) {
          stack[top++] = right;
          stack[top++] = left;
        } else {
          stack[top++] = left;
          stack[top++] = right;
        }
      } else if (hl) {
        stack[top++] = left;
      } else if (hr) {
        stack[top++] = right;
      }
    }
  }
  if (best.hit) best.point = ray.origin + best.t * ray.direction;
  return best;
}

bool MeshRaycaster::any_hit(const Ray& ray, TraceMode mode) const {
  if (mode == TraceMode::kBruteForce) {
    for (const auto& tri : triangles_)
      if (intersect_triangle(ray, tri[0], tri[1], tri[2])) return true;
    return false;
  }
  const Vec3 inv = ray.direction.cwiseInverse();
  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  double entry = 0.0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!slab(node, ray, inv, ray.t_max, entry)) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const auto& tri = triangles_[order_[i]];
        if (intersect_triangle(ray, tri[0], tri[1], tri[2])) return true;
      }
      continue;
    }
    stack[top++] = node.first;
    stack[top++] = static_cast<std::uint32_t>(&node - nodes_.data()) + 1;
  }
  return false;
}

}  // namespace sbhd

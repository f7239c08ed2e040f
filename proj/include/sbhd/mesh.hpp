#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sbhd {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

using Face = std::array<std::uint32_t, 3>;

/// Undirected edge with the faces on either side. `face_b` is -1 on a border.
struct Edge {
  std::uint32_t v0 = 0;
  std::uint32_t v1 = 0;
  std::int64_t face_a = -1;
  std::int64_t face_b = -1;
};

/// Triangle mesh in a body-fixed frame (meters). Faces wind counter-clockwise
/// seen from outside. Immutable after construction.
class TriangleMesh {
 public:
  TriangleMesh() = default;
  /// Throws StructuralError on out-of-range or degenerate (repeated-index) faces.
  TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Every edge shared by exactly two faces traversing it in opposite directions.
  bool watertight() const { return watertight_; }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t face_count() const { return faces_.size(); }

  Vec3 face_normal(std::size_t f) const;  // unit, from winding
  double face_area(std::size_t f) const;
  Vec3 face_centroid(std::size_t f) const;
  double mean_edge_length() const;
  Vec3 vertex_centroid() const;
  /// Largest vertex distance from the vertex centroid.
  double bounding_radius() const;

  /// p' = rotation * p + translation for every vertex.
  TriangleMesh transformed(const Mat3& rotation, const Vec3& translation) const;
  TriangleMesh with_reversed_winding() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<Edge> edges_;
  bool watertight_ = false;
};

/// Signed volume from the divergence theorem; positive for outward winding.
/// Throws StructuralError when the mesh is not watertight.
double mesh_volume(const TriangleMesh& mesh);

/// Sum of signed face solid angles seen from `point`, divided by 4π.
/// ≈ 1 inside a watertight mesh, ≈ 0 outside.
double winding_number(const TriangleMesh& mesh, const Vec3& point);

/// Signed solid angle subtended by triangle (a, b, c) at the origin
/// (van Oosterom & Strackee).
double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c);

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct ClosestFace {
  std::size_t face = 0;
  Vec3 point;
  double distance = 0.0;
};
ClosestFace closest_face(const TriangleMesh& mesh, const Vec3& point);

// Primitive builders.
TriangleMesh make_box(const Vec3& min_corner, const Vec3& max_corner);
TriangleMesh make_unit_cube();  // [-0.5, 0.5]^3
TriangleMesh make_icosphere(double radius, int subdivisions);
TriangleMesh make_cube_sphere(double radius, int cells_per_edge);

// Wavefront OBJ. Only `v` and triangular `f` records are read; everything
// else is skipped and counted in `ignored_records`.
struct ObjReadResult {
  TriangleMesh mesh;
  std::size_t ignored_records = 0;
  double scale = 1.0;
};

/// Reads `path`; when `<path>.json` exists with {"scale_to_meters": s},
/// vertex coordinates are multiplied by s.
ObjReadResult read_obj(const std::filesystem::path& path);
std::string format_obj(const TriangleMesh& mesh);
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

}  // namespace sbhd

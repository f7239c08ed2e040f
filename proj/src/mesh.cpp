#include "sbhd/mesh.hpp"


#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "sbhd/errors.hpp"
#include "sbhd/fileio.hpp"

namespace sbhd {

namespace {

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  const auto lo = std::min(a, b);
  const auto hi = std::max(a, b);
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

}  // namespace

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  const auto n = static_cast<std::uint32_t>(vertices_.size());
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const Face& face = faces_[f];
    for (auto idx : face)
      if (idx >= n)
        throw StructuralError("face " + std::to_string(f) + " references vertex " + std::to_string(idx) +
                              " but mesh has " + std::to_string(n));
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2])
      throw StructuralError("face " + std::to_string(f) + " repeats a vertex index");
  }

  // Edges in order of first appearance; `forward` counts directed traversals
  // lo->hi and `backward` hi->lo so orientation consistency can be checked.
  struct Tally {
    std::size_t edge;
    int forward = 0;
    int backward = 0;
    int faces = 0;
  };
  std::unordered_map<std::uint64_t, Tally> lookup;
  lookup.reserve(faces_.size() * 2);
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const auto a = faces_[f][k];
      const auto b = faces_[f][(k + 1) % 3];
      const auto key = edge_key(a, b);
      auto [it, inserted] = lookup.try_emplace(key, Tally{edges_.size()});
      if (inserted) edges_.push_back(Edge{std::min(a, b), std::max(a, b), -1, -1});
      Tally& t = it->second;
      Edge& e = edges_[t.edge];
      if (a < b) ++t.forward; else ++t.backward;
      if (t.faces == 0) e.face_a = static_cast<std::int64_t>(f);
      else if (t.faces == 1) e.face_b = static_cast<std::int64_t>(f);
      ++t.faces;
    }
  }
  watertight_ = !faces_.empty() && std::all_of(lookup.begin(), lookup.end(), [](const auto& kv) {
    return kv.second.faces == 2 && kv.second.forward == 1 && kv.second.backward == 1;
  });
}

Vec3 TriangleMesh::face_normal(std::size_t f) const {
  const Face& t = faces_[f];
  const Vec3 n = (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]);
  return n.normalized();
}

double TriangleMesh::face_area(std::size_t f) const {
  const Face& t = faces_[f];
  return 0.5 * (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]).norm();
}

Vec3 TriangleMesh::face_centroid(std::size_t f) const {
  const Face& t = faces_[f];
  return (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0;
}

double TriangleMesh::mean_edge_length() const {
  if (edges_.empty()) return 0.0;
  double sum = 0.0;
  for (const Edge& e : edges_) sum += (vertices_[e.v1] - vertices_[e.v0]).norm();
  return sum / static_cast<double>(edges_.size());
}

Vec3 TriangleMesh::vertex_centroid() const {
  Vec3 c = Vec3::Zero();
  for (const Vec3& v : vertices_) c += v;
  return vertices_.empty() ? c : Vec3(c / static_cast<double>(vertices_.size()));
}

double TriangleMesh::bounding_radius() const {
  const Vec3 c = vertex_centroid();
  double r = 0.0;
  for (const Vec3& v : vertices_) r = std::max(r, (v - c).norm());
  return r;
}

TriangleMesh TriangleMesh::transformed(const Mat3& rotation, const Vec3& translation) const {
  std::vector<Vec3> moved;
  moved.reserve(vertices_.size());
  for (const Vec3& v : vertices_) moved.emplace_back(rotation * v + translation);
  return TriangleMesh(std::move(moved), faces_);
}

TriangleMesh TriangleMesh::with_reversed_winding() const {
  std::vector<Face> flipped = faces_;
  for (Face& f : flipped) std::swap(f[1], f[2]);
  return TriangleMesh(vertices_, std::move(flipped));
}

double mesh_volume(const TriangleMesh& mesh) {
  if (!mesh.watertight()) throw StructuralError("mesh_volume: mesh is not watertight");
  const auto& v = mesh.vertices();
  // Tetrahedra against the vertex centroid keep the terms small for offset meshes.
  const Vec3 ref = mesh.vertex_centroid();
  double six_v = 0.0;
  for (const Face& f : mesh.faces())
    six_v += (v[f[0]] - ref).dot((v[f[1]] - ref).cross(v[f[2]] - ref));
  return six_v / 6.0;
}

double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double la = a.norm(), lb = b.norm(), lc = c.norm();
  const double numer = a.dot(b.cross(c));
  const double denom = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
  return 2.0 * std::atan2(numer, denom);
}

double winding_number(const TriangleMesh& mesh, const Vec3& point) {
  const auto& v = mesh.vertices();
  double omega = 0.0;
  for (const Face& f : mesh.faces())
    omega += triangle_solid_angle(v[f[0]] - point, v[f[1]] - point, v[f[2]] - point);
  return omega / (4.0 * std::numbers::pi);
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

ClosestFace closest_face(const TriangleMesh& mesh, const Vec3& point) {
  if (mesh.face_count() == 0) throw StructuralError("closest_face: empty mesh");
  const auto& v = mesh.vertices();
  ClosestFace best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const Face& t = mesh.faces()[f];
    const Vec3 q = closest_point_on_triangle(point, v[t[0]], v[t[1]], v[t[2]]);
    const double d = (q - point).norm();
    if (d < best.distance) best = {f, q, d};
  }
  return best;
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
  std::vector<Vec3> v = {
      {lo.x(), lo.y(), lo.z()}, {hi.x(), lo.y(), lo.z()}, {hi.x(), hi.y(), lo.z()}, {lo.x(), hi.y(), lo.z()},
      {lo.x(), lo.y(), hi.z()}, {hi.x(), lo.y(), hi.z()}, {hi.x(), hi.y(), hi.z()}, {lo.x(), hi.y(), hi.z()},
  };
  std::vector<Face> f = {
      {0, 2, 1}, {0, 3, 2},  // -z
      {4, 5, 6}, {4, 6, 7},  // +z
      {0, 1, 5}, {0, 5, 4},  // -y
      {3, 7, 6}, {3, 6, 2},  // +y
      {0, 4, 7}, {0, 7, 3},  // -x
      {1, 2, 6}, {1, 6, 5},  // +x
  };
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh make_unit_cube() { return make_box(Vec3::Constant(-0.5), Vec3::Constant(0.5)); }

TriangleMesh make_icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& p : v) p.normalize();
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                         {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                         {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::unordered_map<std::uint64_t, std::uint32_t> midpoints;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      auto [it, inserted] = midpoints.try_emplace(edge_key(a, b), static_cast<std::uint32_t>(v.size()));
      if (inserted) v.push_back((v[a] + v[b]).normalized());
      return it->second;
    };
    std::vector<Face> next;
    next.reserve(f.size() * 4);
    for (const Face& tri : f) {
      const auto ab = midpoint(tri[0], tri[1]);
      const auto bc = midpoint(tri[1], tri[2]);
      const auto ca = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  for (Vec3& p : v) p *= radius;
  return TriangleMesh(std::move(v), std::move(f));
}

TriangleMesh make_cube_sphere(double radius, int n) {
  if (n < 1) throw StructuralError("make_cube_sphere: cells_per_edge must be >= 1");
  // Lattice points on the surface of [0,n]^3, shared between cube faces.
  std::map<std::array<int, 3>, std::uint32_t> index;
  std::vector<Vec3> v;
  auto vertex = [&](std::array<int, 3> ijk) {
    auto [it, inserted] = index.try_emplace(ijk, static_cast<std::uint32_t>(v.size()));
    if (inserted) {
      const Vec3 p(2.0 * ijk[0] / n - 1.0, 2.0 * ijk[1] / n - 1.0, 2.0 * ijk[2] / n - 1.0);
      v.push_back(p.normalized() * radius);
    }
    return it->second;
  };
  std::vector<Face> f;
  for (int axis = 0; axis < 3; ++axis) {
    const int u_axis = (axis + 1) % 3, v_axis = (axis + 2) % 3;
    for (int side : {0, n}) {
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          std::array<std::array<int, 3>, 4> q{};
          const int du[4] = {0, 1, 1, 0}, dv[4] = {0, 0, 1, 1};
          for (int k = 0; k < 4; ++k) {
            q[k][axis] = side;
            q[k][u_axis] = a + du[k];
            q[k][v_axis] = b + dv[k];
          }
          std::uint32_t id[4];
          for (int k = 0; k < 4; ++k) id[k] = vertex(q[k]);
          // (u, v, axis) is right-handed, so this winding faces +axis.
          if (side == n) {
            f.push_back({id[0], id[1], id[2]});
            f.push_back({id[0], id[2], id[3]});
          } else {
            f.push_back({id[0], id[2], id[1]});
            f.push_back({id[0], id[3], id[2]});
          }
        }
      }
    }
  }
  return TriangleMesh(std::move(v), std::move(f));
}

ObjReadResult read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  ObjReadResult result;
  std::filesystem::path sidecar = path;
  sidecar += ".json";
  if (std::filesystem::exists(sidecar)) {
    const auto doc = read_json(sidecar);
    if (doc.contains("scale_to_meters")) result.scale = doc.at("scale_to_meters").get<double>();
    if (!(result.scale > 0)) throw StructuralError(sidecar.string() + ": scale_to_meters must be > 0");
  }

  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw StructuralError(path.string() + ":" + std::to_string(line_no) + ": bad vertex");
      vertices.emplace_back(x * result.scale, y * result.scale, z * result.scale);
    } else if (tag == "f") {
      std::vector<long> idx;
      std::string token;
      while (ls >> token) {
        const long raw = std::stol(token.substr(0, token.find('/')));
        const long resolved = raw < 0 ? static_cast<long>(vertices.size()) + raw : raw - 1;
        if (resolved < 0) throw StructuralError(path.string() + ":" + std::to_string(line_no) + ": bad face index");
        idx.push_back(resolved);
      }
      if (idx.size() != 3)
        throw StructuralError(path.string() + ":" + std::to_string(line_no) + ": only triangular faces are supported");
      faces.push_back({static_cast<std::uint32_t>(idx[0]), static_cast<std::uint32_t>(idx[1]),
                       static_cast<std::uint32_t>(idx[2])});
    } else {
      ++result.ignored_records;
    }
  }
  if (result.ignored_records > 0)
    spdlog::warn("{}: ignored {} non-geometry OBJ records", path.string(), result.ignored_records);
  result.mesh = TriangleMesh(std::move(vertices), std::move(faces));
  return result;
}

std::string format_obj(const TriangleMesh& mesh) {
  std::string out;
  out.reserve(mesh.vertex_count() * 64 + mesh.face_count() * 32);
  char buf[128];
  for (const Vec3& p : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out += buf;
  }
  for (const Face& f : mesh.faces()) {
    std::snprintf(buf, sizeof buf, "f %u %u %u\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out += buf;
  }
  return out;
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  write_file_atomic(path, format_obj(mesh));
}

}  // namespace sbhd

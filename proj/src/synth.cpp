#include "sbhd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <unordered_map>

#include "sbhd/errors.hpp"

namespace sbhd {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

void SceneSpec::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw DomainError(std::string("scene spec: ") + what);
  };
  require(base_radius > 0.0, "base_radius must be > 0");
  require(subdivisions >= 0 && subdivisions <= 8, "subdivisions must be in [0, 8]");
  require(std::abs(site_direction.norm() - 1.0) < 1e-9, "site_direction must be a unit vector");
  require(site_radius > 0.0 && site_radius < std::numbers::pi * base_radius, "site_radius out of range");
  require(site_edge > 0.0, "site_edge must be > 0");
  require(fractal_amplitude >= 0.0, "fractal_amplitude must be >= 0");
  require(fractal_wavelength > 0.0, "fractal_wavelength must be > 0");
  require(fractal_octaves >= 0, "fractal_octaves must be >= 0");
  require(boulder_count >= 0, "boulder_count must be >= 0");
  require(boulder_size_min > 0.0 && boulder_size_min <= boulder_size_max, "boulder size range is empty");
  require(boulder_aspect_min > 0.0 && boulder_aspect_min <= boulder_aspect_max, "boulder aspect range is empty");
  require(boulder_embed >= 0.0 && boulder_embed < 1.0, "boulder_embed must be in [0, 1)");
  require(std::abs(sun_direction.norm() - 1.0) < 1e-9, "sun_direction must be a unit vector");
  require(density > 0.0, "density must be > 0");
}

namespace {

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw StructuralError("scene spec: expected a 3-vector");
  return {v[0], v[1], v[2]};
}

struct Wave {
  Vec3 direction;
  double wavenumber, phase, amplitude;
};

struct Boulder {
  Vec3 center;
  Mat3 axes;  // rows: unit axes
  Vec3 semi;  // semi-axis lengths
};

// Displacement field realized from the spec's RNG stream. Draw order is part
// of the reproducibility contract: waves (octave-major), then boulders.
class SceneField {
 public:
  explicit SceneField(const SceneSpec& spec) : spec_(spec) {
    SplitMix64 rng(spec.seed);
    constexpr int kWavesPerOctave = 3;
    for (int o = 0; o < spec.fractal_octaves; ++o) {
      const double amp = spec.fractal_amplitude * std::pow(2.0, -o * spec.fractal_exponent) /
                         std::sqrt(static_cast<double>(kWavesPerOctave));
      const double k = 2.0 * std::numbers::pi * std::pow(2.0, o) / spec.fractal_wavelength;
      for (int j = 0; j < kWavesPerOctave; ++j) {
        const double z = rng.uniform(-1.0, 1.0);
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        waves_.push_back({Vec3(s * std::cos(phi), s * std::sin(phi), z), k, phase, amp});
      }
    }

    const Vec3& site = spec.site_direction;
    Vec3 e1 = Vec3::UnitX() - site * site.x();
    if (e1.norm() < 1e-3) e1 = Vec3::UnitY() - site * site.y();
    e1.normalize();
    const Vec3 e2 = site.cross(e1);
    for (int b = 0; b < spec.boulder_count; ++b) {
      const double az = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double arc = spec.site_radius * std::sqrt(rng.uniform());
      const double diameter = rng.uniform(spec.boulder_size_min, spec.boulder_size_max);
      const double aspect = rng.uniform(spec.boulder_aspect_min, spec.boulder_aspect_max);
      const double squash = rng.uniform(0.7, 1.0);
      const double yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);

      const double ang = arc / spec.base_radius;
      const Vec3 tangent = std::cos(az) * e1 + std::sin(az) * e2;
      const Vec3 dir = (std::cos(ang) * site + std::sin(ang) * tangent).normalized();
      Vec3 t1 = tangent - dir * dir.dot(tangent);
      t1.normalize();
      const Vec3 t2 = dir.cross(t1);
      const Vec3 a1 = std::cos(yaw) * t1 + std::sin(yaw) * t2;
      const Vec3 a2 = dir.cross(a1);

      Boulder bd;
      bd.semi = Vec3(0.5 * diameter, 0.5 * diameter * squash, 0.5 * diameter * aspect);
      bd.axes.row(0) = a1.transpose();
      bd.axes.row(1) = a2.transpose();
      bd.axes.row(2) = dir.transpose();
      bd.center = dir * (terrain_radius(dir) + bd.semi.z() * (1.0 - 2.0 * spec.boulder_embed));
      boulders_.push_back(bd);
    }
  }

  double terrain_radius(const Vec3& u) const {
    const Vec3 p = spec_.base_radius * u;
    double h = 0.0;
    for (const Wave& w : waves_) h += w.amplitude * std::sin(w.wavenumber * w.direction.dot(p) + w.phase);
    return spec_.base_radius + h;
  }

  double radius(const Vec3& u) const {
    double r = terrain_radius(u);
    for (const Boulder& b : boulders_) {
      // Far intersection of the ray t*u (t > 0) with the ellipsoid.
      const Vec3 du = (b.axes * u).cwiseQuotient(b.semi);
      const Vec3 dc = (b.axes * b.center).cwiseQuotient(b.semi);
      const double qa = du.squaredNorm();
      const double qb = -2.0 * du.dot(dc);
      const double qc = dc.squaredNorm() - 1.0;
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc < 0.0) continue;
      r = std::max(r, (-qb + std::sqrt(disc)) / (2.0 * qa));
    }
    return r;
  }

 private:
  const SceneSpec& spec_;
  std::vector<Wave> waves_;
  std::vector<Boulder> boulders_;
};

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
}

// Conforming refinement of a unit-sphere triangulation: every edge that
// satisfies `split` is bisected, and each face is re-triangulated according
// to how many of its edges were split. Decisions depend only on the edge, so
// neighboring faces agree and no T-junctions appear.
template <typename SplitRule>
void refine(std::vector<Vec3>& unit, std::vector<Face>& faces, SplitRule split) {
  for (int pass = 0; pass < 64; ++pass) {
    std::unordered_map<std::uint64_t, std::uint32_t> mid;
    for (const Face& f : faces)
      for (int k = 0; k < 3; ++k) {
        const auto a = f[k], b = f[(k + 1) % 3];
        const auto key = edge_key(a, b);
        if (mid.contains(key) || !split(unit[a], unit[b])) continue;
        mid.emplace(key, static_cast<std::uint32_t>(unit.size()));
        unit.push_back((unit[a] + unit[b]).normalized());
      }
    if (mid.empty()) return;

    std::vector<Face> next;
    next.reserve(faces.size() * 2);
    for (const Face& f : faces) {
      std::array<std::int64_t, 3> m{};
      int n_split = 0;
      for (int k = 0; k < 3; ++k) {
        const auto it = mid.find(edge_key(f[k], f[(k + 1) % 3]));
        m[k] = it == mid.end() ? -1 : static_cast<std::int64_t>(it->second);
        n_split += m[k] >= 0;
      }
      auto u32 = [](std::int64_t v) { return static_cast<std::uint32_t>(v); };
      if (n_split == 0) {
        next.push_back(f);
      } else if (n_split == 3) {
        next.push_back({f[0], u32(m[0]), u32(m[2])});
        next.push_back({f[1], u32(m[1]), u32(m[0])});
        next.push_back({f[2], u32(m[2]), u32(m[1])});
        next.push_back({u32(m[0]), u32(m[1]), u32(m[2])});
      } else if (n_split == 1) {
        int k = 0;
        while (m[k] < 0) ++k;
        const auto a = f[k], b = f[(k + 1) % 3], c = f[(k + 2) % 3];
        next.push_back({a, u32(m[k]), c});
        next.push_back({u32(m[k]), b, c});
      } else {
        // Rotate so edge (c, a) is the unsplit one.
        int k = 0;
        while (m[(k + 2) % 3] >= 0) ++k;
        const auto a = f[k], b = f[(k + 1) % 3], c = f[(k + 2) % 3];
        const auto mab = u32(m[k]), mbc = u32(m[(k + 1) % 3]);
        next.push_back({mab, b, mbc});
        // Quad a, mab, mbc, c split along its shorter diagonal.
        if ((unit[a] - unit[mbc]).squaredNorm() <= (unit[mab] - unit[c]).squaredNorm()) {
          next.push_back({a, mab, mbc});
          next.push_back({a, mbc, c});
        } else {
          next.push_back({a, mab, c});
          next.push_back({mab, mbc, c});
        }
      }
    }
    faces = std::move(next);
  }
}

}  // namespace

nlohmann::json SceneSpec::to_json() const {
  return {
      {"seed", seed},
      {"base_radius", base_radius},
      {"subdivisions", subdivisions},
      {"site_direction", vec_json(site_direction)},
      {"site_radius", site_radius},
      {"site_edge", site_edge},
      {"fractal_amplitude", fractal_amplitude},
      {"fractal_exponent", fractal_exponent},
      {"fractal_wavelength", fractal_wavelength},
      {"fractal_octaves", fractal_octaves},
      {"boulder_count", boulder_count},
      {"boulder_size_min", boulder_size_min},
      {"boulder_size_max", boulder_size_max},
      {"boulder_aspect_min", boulder_aspect_min},
      {"boulder_aspect_max", boulder_aspect_max},
      {"boulder_embed", boulder_embed},
      {"sun_direction", vec_json(sun_direction)},
      {"density", density},
  };
}

SceneSpec SceneSpec::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw StructuralError("scene spec: expected a JSON object");
  const auto defaults = SceneSpec{}.to_json();
  for (const auto& [key, value] : doc.items())
    if (!defaults.contains(key)) throw StructuralError("scene spec: unknown key '" + key + "'");
  SceneSpec s;
  try {
    auto get = [&](const char* key, auto& field) {
      if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("seed", s.seed);
    get("base_radius", s.base_radius);
    get("subdivisions", s.subdivisions);
    if (doc.contains("site_direction")) s.site_direction = json_vec(doc.at("site_direction")).normalized();
    get("site_radius", s.site_radius);
    get("site_edge", s.site_edge);
    get("fractal_amplitude", s.fractal_amplitude);
    get("fractal_exponent", s.fractal_exponent);
    get("fractal_wavelength", s.fractal_wavelength);
    get("fractal_octaves", s.fractal_octaves);
    get("boulder_count", s.boulder_count);
    get("boulder_size_min", s.boulder_size_min);
    get("boulder_size_max", s.boulder_size_max);
    get("boulder_aspect_min", s.boulder_aspect_min);
    get("boulder_aspect_max", s.boulder_aspect_max);
    get("boulder_embed", s.boulder_embed);
    if (doc.contains("sun_direction")) s.sun_direction = json_vec(doc.at("sun_direction")).normalized();
    get("density", s.density);
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(std::string("scene spec: ") + e.what());
  }
  s.validate();
  return s;
}

double scene_surface_radius(const SceneSpec& spec, const Vec3& u) {
  spec.validate();
  return SceneField(spec).radius(u.normalized());
}

TriangleMesh generate_scene(const SceneSpec& spec) {
  spec.validate();
  const TriangleMesh sphere = make_icosphere(1.0, spec.subdivisions);
  std::vector<Vec3> unit = sphere.vertices();
  std::vector<Face> faces = sphere.faces();

  const double cap = spec.site_radius / spec.base_radius;
  const Vec3 site = spec.site_direction;
  refine(unit, faces, [&](const Vec3& a, const Vec3& b) {
    const double len = (a - b).norm();
    if (len * spec.base_radius <= spec.site_edge) return false;
    const Vec3 m = (a + b).normalized();
    const double angle = std::acos(std::clamp(m.dot(site), -1.0, 1.0));
    return angle <= cap + len;
  });

  const SceneField field(spec);
  std::vector<Vec3> vertices;
  vertices.reserve(unit.size());
  for (const Vec3& u : unit) vertices.push_back(u * field.radius(u));
  return TriangleMesh(std::move(vertices), std::move(faces));
}

RenderedImage shade_hits(const MeshRaycaster& caster, const Grid<PixelHit>& hits, const Vec3& sun) {
  RenderedImage out;
  out.image = Grid<float>(hits.rows(), hits.cols(), 0.0f);
  out.shadow = Grid<std::uint8_t>(hits.rows(), hits.cols(), 0);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const PixelHit& px = hits.values()[i];
    if (!px.hit) continue;
    if (px.shadowed) {
      out.shadow.values()[i] = 1;
      continue;
    }
    out.image.values()[i] = static_cast<float>(std::max(0.0, caster.face_normal(px.face).dot(sun)));
  }
  return out;
}

RenderedImage render_image(const TriangleMesh& mesh, const MeshRaycaster& caster, const CameraFrame& camera,
                           const Vec3& sun, const TraceOptions& options) {
  CameraFrame lit = camera;
  lit.sun_direction = sun;
  return shade_hits(caster, trace_pixels(mesh, caster, lit, options), sun);
}

}  // namespace sbhd

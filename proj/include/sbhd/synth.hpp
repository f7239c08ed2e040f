#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "sbhd/camera.hpp"
#include "sbhd/grid.hpp"
#include "sbhd/mesh.hpp"
#include "sbhd/raycast.hpp"

namespace sbhd {

/// SplitMix64 (Steele, Lea & Flood). Constants fixed so scenes reproduce
/// bit-exactly across implementations:
///   state += 0x9E3779B97F4A7C15
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Top 53 bits scaled into [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

struct SceneSpec {
  std::uint64_t seed = 42;
  double base_radius = 20.0;  // m
  int subdivisions = 4;       // global icosphere level
  Vec3 site_direction = Vec3::UnitZ();
  double site_radius = 3.0;   // m, arc radius of the refined landing site
  double site_edge = 0.04;    // m, target edge length inside the site

  // Fractal displacement: sum over octaves o of amplitude * 2^(-o*exponent)
  // times random plane waves of wavelength fractal_wavelength / 2^o.
  double fractal_amplitude = 0.0;   // m
  double fractal_exponent = 1.0;
  double fractal_wavelength = 4.0;  // m
  int fractal_octaves = 5;

  int boulder_count = 0;
  double boulder_size_min = 0.1;  // m, horizontal diameter
  double boulder_size_max = 0.5;
  double boulder_aspect_min = 0.5;  // vertical / horizontal semi-axis ratio
  double boulder_aspect_max = 1.0;
  double boulder_embed = 0.3;  // buried fraction of boulder height

  Vec3 sun_direction = Vec3(0.3, 0.2, 1.0).normalized();
  double density = 1190.0;  // kg/m^3

  void validate() const;  // throws DomainError
  nlohmann::json to_json() const;
  static SceneSpec from_json(const nlohmann::json& doc);  // rejects unknown keys
};

/// Watertight star-shaped body: an icosphere refined around the site,
/// displaced radially by the fractal field and raised over embedded
/// ellipsoidal boulders. Deterministic in `spec`.
TriangleMesh generate_scene(const SceneSpec& spec);

/// Outer radius of the generated surface along unit direction `u`.
double scene_surface_radius(const SceneSpec& spec, const Vec3& u);

struct RenderedImage {
  Grid<float> image;          // [0, 1]
  Grid<std::uint8_t> shadow;  // 1 where a hit point is shadowed
};

/// Lambertian shading max(0, n·s) at the first hit; 0 for misses and
/// shadowed points. Uses the same shadow test as label projection.
RenderedImage render_image(const TriangleMesh& mesh, const MeshRaycaster& caster, const CameraFrame& camera,
                           const Vec3& sun, const TraceOptions& options = {});

/// Rendering from precomputed pixel hits (shadow flags must already be set).
RenderedImage shade_hits(const MeshRaycaster& caster, const Grid<PixelHit>& hits, const Vec3& sun);

}  // namespace sbhd

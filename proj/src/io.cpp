#include "sbhd/io.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "sbhd/errors.hpp"
#include "sbhd/fileio.hpp"
#include "sbhd/npy.hpp"

namespace sbhd {

namespace {

template <typename T>
T get(const nlohmann::json& doc, const char* key, const std::string& context) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(context + ": field '" + key + "': " + e.what());
  }
}

Eigen::Vector2d json_vec2(const nlohmann::json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw StructuralError(context + ": expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

void check_shape(const fs::path& path, std::size_t rows, std::size_t cols, std::size_t r, std::size_t c) {
  if (rows != r || cols != c)
    throw StructuralError(path.string() + ": raster is " + std::to_string(rows) + "x" + std::to_string(cols) +
                          ", sidecar says " + std::to_string(r) + "x" + std::to_string(c));
}

void check_codes(const Grid<std::uint8_t>& grid, std::set<std::uint8_t> allowed, const fs::path& path) {
  for (std::uint8_t v : grid.values())
    if (!allowed.contains(v))
      throw StructuralError(path.string() + ": unexpected code " + std::to_string(v));
}

}  // namespace

void require_keys(const nlohmann::json& doc, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional, const std::string& context) {
  if (!doc.is_object()) throw StructuralError(context + ": expected a JSON object");
  std::set<std::string> known;
  for (const char* k : required) {
    known.insert(k);
    if (!doc.contains(k)) throw StructuralError(context + ": missing key '" + k + "'");
  }
  for (const char* k : optional) known.insert(k);
  for (const auto& [key, value] : doc.items())
    if (!known.contains(key)) throw StructuralError(context + ": unknown key '" + key + "'");
}

nlohmann::json vec3_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 json_vec3(const nlohmann::json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 3) throw StructuralError(context + ": expected a 3-vector");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw StructuralError(context + ": expected a 3-vector");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

nlohmann::json frame_to_json(const LocalFrame& frame) {
  std::vector<double> rot(9);
  for (int i = 0; i < 9; ++i) rot[static_cast<std::size_t>(i)] = frame.rotation(i / 3, i % 3);
  return {{"rotation", rot}, {"origin", vec3_json(frame.origin)}};
}

LocalFrame frame_from_json(const nlohmann::json& doc) {
  require_keys(doc, {"rotation", "origin"}, {}, "frame");
  const auto rot = get<std::vector<double>>(doc, "rotation", "frame");
  if (rot.size() != 9) throw StructuralError("frame: rotation needs 9 values");
  LocalFrame frame;
  for (int i = 0; i < 9; ++i) frame.rotation(i / 3, i % 3) = rot[static_cast<std::size_t>(i)];
  frame.origin = json_vec3(doc.at("origin"), "frame origin");
  frame.validate();
  return frame;
}

nlohmann::json safety_config_to_json(const SafetyConfig& c) {
  return {{"lander_diameter", c.lander_diameter},
          {"slope_threshold", c.slope_threshold},
          {"roughness_threshold", c.roughness_threshold},
          {"pad_count", c.pad_count},
          {"orientation_samples", c.orientation_samples}};
}

SafetyConfig safety_config_from_json(const nlohmann::json& doc) {
  const std::string ctx = "safety config";
  require_keys(doc, {}, {"lander_diameter", "slope_threshold", "roughness_threshold", "pad_count", "orientation_samples"},
               ctx);
  SafetyConfig c;
  if (doc.contains("lander_diameter")) c.lander_diameter = get<double>(doc, "lander_diameter", ctx);
  if (doc.contains("slope_threshold")) c.slope_threshold = get<double>(doc, "slope_threshold", ctx);
  if (doc.contains("roughness_threshold")) c.roughness_threshold = get<double>(doc, "roughness_threshold", ctx);
  if (doc.contains("pad_count")) c.pad_count = get<int>(doc, "pad_count", ctx);
  if (doc.contains("orientation_samples")) c.orientation_samples = get<int>(doc, "orientation_samples", ctx);
  c.validate();
  return c;
}

nlohmann::json image_meta_to_json(const ImageMeta& m) {
  return {{"gsd", m.gsd},
          {"imaging_depth", m.imaging_depth},
          {"viewing_angle", m.viewing_angle},
          {"visibility_ratio", m.visibility_ratio},
          {"hit_pixels", m.hit_pixels},
          {"lit_pixels", m.lit_pixels}};
}

ImageMeta image_meta_from_json(const nlohmann::json& doc) {
  const std::string ctx = "image meta";
  require_keys(doc, {"gsd", "imaging_depth", "viewing_angle", "visibility_ratio"}, {"hit_pixels", "lit_pixels"}, ctx);
  ImageMeta m;
  m.gsd = get<double>(doc, "gsd", ctx);
  m.imaging_depth = get<double>(doc, "imaging_depth", ctx);
  m.viewing_angle = get<double>(doc, "viewing_angle", ctx);
  m.visibility_ratio = get<double>(doc, "visibility_ratio", ctx);
  if (doc.contains("hit_pixels")) m.hit_pixels = get<std::size_t>(doc, "hit_pixels", ctx);
  if (doc.contains("lit_pixels")) m.lit_pixels = get<std::size_t>(doc, "lit_pixels", ctx);
  if (!(m.visibility_ratio >= 0.0 && m.visibility_ratio <= 1.0))
    throw StructuralError(ctx + ": visibility_ratio outside [0, 1]");
  return m;
}

nlohmann::json threshold_to_json(const UncertaintyThreshold& t) {
  return {{"value", t.value}, {"units", "nats"}, {"provenance", t.provenance}};
}

UncertaintyThreshold threshold_from_json(const nlohmann::json& doc) {
  const std::string ctx = "uncertainty threshold";
  require_keys(doc, {"value"}, {"units", "provenance"}, ctx);
  if (doc.contains("units") && doc.at("units") != "nats") throw StructuralError(ctx + ": units must be \"nats\"");
  UncertaintyThreshold t;
  t.value = get<double>(doc, "value", ctx);
  if (doc.contains("provenance")) t.provenance = get<std::string>(doc, "provenance", ctx);
  return t;
}

void write_dem(const fs::path& dir, const Dem& dem) {
  dem.validate();
  npy::write_float32(dir / "elevation.npy", dem.elevations);
  npy::write_uint8(dir / "nodata.npy", dem.nodata);
  write_json(dir / "dem.json", {{"rows", dem.rows()},
                                {"cols", dem.cols()},
                                {"cell_size", dem.cell_size},
                                {"grid_origin", {dem.grid_origin.x(), dem.grid_origin.y()}},
                                {"frame", frame_to_json(dem.frame)}});
}

Dem read_dem(const fs::path& dir) {
  const auto doc = read_json(dir / "dem.json");
  const std::string ctx = (dir / "dem.json").string();
  require_keys(doc, {"rows", "cols", "cell_size", "grid_origin", "frame"}, {}, ctx);
  Dem dem;
  dem.elevations = npy::read_float_grid(dir / "elevation.npy");
  dem.nodata = npy::read_uint8_grid(dir / "nodata.npy");
  check_shape(dir / "elevation.npy", dem.elevations.rows(), dem.elevations.cols(), get<std::size_t>(doc, "rows", ctx),
              get<std::size_t>(doc, "cols", ctx));
  check_shape(dir / "nodata.npy", dem.nodata.rows(), dem.nodata.cols(), dem.elevations.rows(), dem.elevations.cols());
  check_codes(dem.nodata, {0, 1}, dir / "nodata.npy");
  dem.cell_size = get<double>(doc, "cell_size", ctx);
  dem.grid_origin = json_vec2(doc.at("grid_origin"), ctx + " grid_origin");
  dem.frame = frame_from_json(doc.at("frame"));
  dem.validate();
  return dem;
}

void write_hazard(const fs::path& dir, const HazardMap& h) {
  npy::write_float32(dir / "slope.npy", h.slope);
  npy::write_float32(dir / "roughness.npy", h.roughness);
  npy::write_uint8(dir / "safe.npy", h.safe);
  write_json(dir / "hazard.json", {{"rows", h.rows()},
                                   {"cols", h.cols()},
                                   {"config", safety_config_to_json(h.config)},
                                   {"cell_size", h.cell_size},
                                   {"grid_origin", {h.grid_origin.x(), h.grid_origin.y()}},
                                   {"frame", frame_to_json(h.frame)},
                                   {"counts",
                                    {{"safe", h.count(Safety::kSafe)},
                                     {"unsafe", h.count(Safety::kUnsafe)},
                                     {"invalid", h.count(Safety::kInvalid)}}}});
}

HazardMap read_hazard(const fs::path& dir) {
  const auto doc = read_json(dir / "hazard.json");
  const std::string ctx = (dir / "hazard.json").string();
  require_keys(doc, {"rows", "cols", "config", "cell_size", "grid_origin", "frame"}, {"counts"}, ctx);
  HazardMap h;
  h.slope = npy::read_float_grid(dir / "slope.npy");
  h.roughness = npy::read_float_grid(dir / "roughness.npy");
  h.safe = npy::read_uint8_grid(dir / "safe.npy");
  const auto rows = get<std::size_t>(doc, "rows", ctx), cols = get<std::size_t>(doc, "cols", ctx);
  check_shape(dir / "slope.npy", h.slope.rows(), h.slope.cols(), rows, cols);
  check_shape(dir / "roughness.npy", h.roughness.rows(), h.roughness.cols(), rows, cols);
  check_shape(dir / "safe.npy", h.safe.rows(), h.safe.cols(), rows, cols);
  check_codes(h.safe, {0, 1, 255}, dir / "safe.npy");
  h.config = safety_config_from_json(doc.at("config"));
  h.cell_size = get<double>(doc, "cell_size", ctx);
  if (!(h.cell_size > 0.0)) throw StructuralError(ctx + ": cell_size must be > 0");
  h.grid_origin = json_vec2(doc.at("grid_origin"), ctx + " grid_origin");
  h.frame = frame_from_json(doc.at("frame"));
  return h;
}

void write_labels(const fs::path& dir, const LabeledImage& l) {
  npy::write_uint8(dir / "labels.npy", l.map.labels);
  npy::write_uint8(dir / "shadow.npy", l.map.shadow);
  write_json(dir / "labels.json",
             {{"image_id", l.image_id},
              {"rows", l.map.labels.rows()},
              {"cols", l.map.labels.cols()},
              {"meta", l.map.meta ? image_meta_to_json(*l.map.meta) : nlohmann::json(nullptr)},
              {"camera", l.camera ? l.camera->to_json() : nlohmann::json(nullptr)}});
}

LabeledImage read_labels(const fs::path& dir) {
  const auto doc = read_json(dir / "labels.json");
  const std::string ctx = (dir / "labels.json").string();
  require_keys(doc, {"image_id", "rows", "cols"}, {"meta", "camera"}, ctx);
  LabeledImage l;
  l.image_id = get<std::string>(doc, "image_id", ctx);
  l.map.labels = npy::read_uint8_grid(dir / "labels.npy");
  l.map.shadow = npy::read_uint8_grid(dir / "shadow.npy");
  const auto rows = get<std::size_t>(doc, "rows", ctx), cols = get<std::size_t>(doc, "cols", ctx);
  check_shape(dir / "labels.npy", l.map.labels.rows(), l.map.labels.cols(), rows, cols);
  check_shape(dir / "shadow.npy", l.map.shadow.rows(), l.map.shadow.cols(), rows, cols);
  check_codes(l.map.labels, {0, 1, 255}, dir / "labels.npy");
  check_codes(l.map.shadow, {0, 1}, dir / "shadow.npy");
  if (doc.contains("meta") && !doc.at("meta").is_null()) l.map.meta = image_meta_from_json(doc.at("meta"));
  if (doc.contains("camera") && !doc.at("camera").is_null()) l.camera = CameraFrame::from_json(doc.at("camera"));
  return l;
}

void write_render(const fs::path& dir, const RenderedImage& render) {
  npy::write_float32(dir / "image.npy", render.image);
  npy::write_uint8(dir / "shadow.npy", render.shadow);
}

fs::path sidecar_path(const fs::path& npy_path) {
  fs::path p = npy_path;
  p.replace_extension(".json");
  return p;
}

void write_prediction_stack(const fs::path& npy_path, const PredictionStack& stack) {
  stack.validate();
  std::vector<float> values(stack.probs.begin(), stack.probs.end());
  npy::write(npy_path, npy::make_float32({stack.passes, stack.rows, stack.cols, 2}, values));
  write_json(sidecar_path(npy_path),
             {{"image_id", stack.image_id}, {"T", stack.passes}, {"class_order", {"unsafe", "safe"}}});
}

PredictionStack read_prediction_stack(const fs::path& npy_path) {
  const fs::path side = sidecar_path(npy_path);
  const auto doc = read_json(side);
  const std::string ctx = side.string();
  require_keys(doc, {"image_id", "T", "class_order"}, {}, ctx);
  if (doc.at("class_order") != nlohmann::json{"unsafe", "safe"})
    throw StructuralError(ctx + ": class_order must be [\"unsafe\", \"safe\"]");
  const auto arr = npy::read(npy_path);
  if (arr.dtype != npy::DType::kFloat32) throw StructuralError(npy_path.string() + ": prediction stack must be '<f4'");
  if (arr.shape.size() != 4 || arr.shape[3] != 2)
    throw StructuralError(npy_path.string() + ": prediction stack must have shape (T, H, W, 2)");
  PredictionStack s;
  s.image_id = get<std::string>(doc, "image_id", ctx);
  s.passes = get<std::size_t>(doc, "T", ctx);
  if (s.passes != arr.shape[0])
    throw StructuralError(ctx + ": T = " + std::to_string(s.passes) + " but the array holds " +
                          std::to_string(arr.shape[0]) + " passes");
  s.rows = arr.shape[1];
  s.cols = arr.shape[2];
  s.probs = arr.as_float64();
  s.validate();
  return s;
}

void write_uncertainty(const fs::path& dir, const std::string& image_id, const UncertaintyMap& map,
                       const std::optional<UncertaintyThreshold>& threshold,
                       const std::optional<ScreenedLabels>& screened) {
  npy::write_float32(dir / "entropy.npy", map.entropy);
  std::vector<float> probs(map.entropy.size() * 2);
  for (std::size_t i = 0; i < map.entropy.size(); ++i) {
    probs[2 * i] = static_cast<float>(map.mean_unsafe.values()[i]);
    probs[2 * i + 1] = static_cast<float>(map.mean_safe.values()[i]);
  }
  npy::write(dir / "mean_probs.npy", npy::make_float32({map.rows(), map.cols(), 2}, probs));
  npy::write_uint8(dir / "argmax.npy", map.labels);
  nlohmann::json doc{{"image_id", image_id},
                     {"rows", map.rows()},
                     {"cols", map.cols()},
                     {"class_order", {"unsafe", "safe"}},
                     {"mean_entropy", map.mean_entropy()}};
  doc["threshold"] = threshold ? threshold_to_json(*threshold) : nlohmann::json(nullptr);
  if (screened) {
    npy::write_uint8(dir / "screened.npy", screened->labels);
    doc["screened_pixels"] = screened->screened;
    doc["valid_pixels"] = screened->valid;
    doc["screening_rate"] = screened->screening_rate();
  }
  write_json(dir / "uncertainty.json", doc);
}

std::vector<Vec3> read_points(const fs::path& path) {
  std::vector<Vec3> points;
  if (path.extension() == ".npy") {
    const auto arr = npy::read(path);
    if (arr.dtype == npy::DType::kUInt8 || arr.shape.size() != 2 || arr.shape[1] != 3)
      throw StructuralError(path.string() + ": points array must be float with shape (N, 3)");
    const auto v = arr.as_float64();
    for (std::size_t i = 0; i < arr.shape[0]; ++i) points.emplace_back(v[3 * i], v[3 * i + 1], v[3 * i + 2]);
  } else {
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (lineno == 1) {
        if (line != "x,y,z") throw StructuralError(path.string() + ": expected header 'x,y,z'");
        continue;
      }
      if (line.empty()) continue;
      Vec3 p;
      const char* cur = line.data();
      const char* end = line.data() + line.size();
      for (int k = 0; k < 3; ++k) {
        auto [ptr, ec] = std::from_chars(cur, end, p[k]);
        if (ec != std::errc{} || (k < 2 && (ptr == end || *ptr != ',')))
          throw StructuralError(path.string() + ":" + std::to_string(lineno) + ": expected three numbers");
        cur = ptr + (k < 2 ? 1 : 0);
      }
      if (cur != end) throw StructuralError(path.string() + ":" + std::to_string(lineno) + ": trailing characters");
      points.push_back(p);
    }
  }
  for (const Vec3& p : points)
    if (!p.allFinite()) throw StructuralError(path.string() + ": non-finite point");
  return points;
}

}  // namespace sbhd

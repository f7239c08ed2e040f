#include "sbhd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <spdlog/spdlog.h>

#include "sbhd/dem.hpp"
#include "sbhd/errors.hpp"
#include "sbhd/fileio.hpp"
#include "sbhd/gravity.hpp"
#include "sbhd/npy.hpp"
#include "sbhd/raycast.hpp"

namespace sbhd {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

template <typename T>
void read_opt(const nlohmann::json& doc, const char* key, T& field, const std::string& ctx) {
  if (!doc.contains(key)) return;
  try {
    field = doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(ctx + ": field '" + key + "': " + e.what());
  }
}

std::string image_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%03zu", index);
  return buf;
}

double standard_normal(SplitMix64& rng) {
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Grid<std::uint8_t> truth_mask(const PixelLabelMap& truth) {
  Grid<std::uint8_t> mask(truth.labels.rows(), truth.labels.cols());
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask.values()[i] = truth.labels.values()[i] != code(Safety::kInvalid) ? 1 : 0;
  return mask;
}

UncertaintyMap masked_entropy(const PredictionStack& stack, const PixelLabelMap& truth) {
  if (!truth.labels.same_shape(stack.rows, stack.cols))
    throw StructuralError("prediction stack '" + stack.image_id + "' does not match its truth raster shape");
  UncertaintyMap map = predictive_entropy(stack);
  set_valid_mask(map, truth_mask(truth));
  return map;
}

}  // namespace

void CameraRig::validate() const {
  if (count < 1) throw DomainError("camera rig: count must be >= 1");
  if (!(distance > 0.0)) throw DomainError("camera rig: distance must be > 0");
  if (!(elevation_min > 0.0 && elevation_min <= elevation_max && elevation_max <= 90.0))
    throw DomainError("camera rig: need 0 < elevation_min <= elevation_max <= 90");
  if (!(fov > 0.0 && fov < 180.0)) throw DomainError("camera rig: fov must lie in (0, 180)");
  if (width == 0 || height == 0) throw DomainError("camera rig: image size must be positive");
}

std::vector<CameraFrame> rig_cameras(const CameraRig& rig, const LocalFrame& site, const Vec3& sun) {
  rig.validate();
  Intrinsics intr;
  intr.width = rig.width;
  intr.height = rig.height;
  intr.fx = intr.fy = 0.5 * static_cast<double>(rig.width) / std::tan(0.5 * rig.fov * kDeg);
  intr.cx = 0.5 * static_cast<double>(rig.width - 1);
  intr.cy = 0.5 * static_cast<double>(rig.height - 1);
  std::vector<CameraFrame> cams;
  for (int i = 0; i < rig.count; ++i) {
    const double t = rig.count == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(rig.count - 1);
    const double el = (rig.elevation_min + t * (rig.elevation_max - rig.elevation_min)) * kDeg;
    const double az = (rig.azimuth_offset + 360.0 * static_cast<double>(i) / static_cast<double>(rig.count)) * kDeg;
    const Vec3 local_dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    const Vec3 eye = site.to_body(rig.distance * local_dir);
    const Vec3 up = el > 89.999 * kDeg ? site.y_axis() : site.z_axis();
    CameraFrame cam = look_at(eye, site.origin, up, intr);
    cam.sun_direction = sun.normalized();
    cams.push_back(cam);
  }
  return cams;
}

void MockPredictor::validate() const {
  if (passes == 0) throw DomainError("mock predictor: passes must be >= 1");
  if (!(noise >= 0.0 && flip_noise >= 0.0)) throw DomainError("mock predictor: noise must be >= 0");
  if (!(flip_rate >= 0.0 && flip_rate <= 1.0)) throw DomainError("mock predictor: flip_rate must lie in [0, 1]");
}

PredictionStack mock_predictions(const MockPredictor& mock, const PixelLabelMap& truth, const std::string& image_id,
                                 std::size_t image_index) {
  mock.validate();
  PredictionStack s;
  s.image_id = image_id;
  s.passes = mock.passes;
  s.rows = truth.labels.rows();
  s.cols = truth.labels.cols();
  s.probs.assign(s.passes * s.rows * s.cols * 2, 0.0);
  SplitMix64 rng(mock.seed ^ (0xD1B54A32D192ED03ULL * (image_index + 1)));
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      const std::uint8_t t = truth.labels(r, c);
      double base = t == code(Safety::kSafe) ? mock.logit : t == code(Safety::kUnsafe) ? -mock.logit : 0.0;
      double sigma = mock.noise;
      if (rng.uniform() < mock.flip_rate) {
        base = -base;
        sigma = mock.flip_noise;
      }
      for (std::size_t p = 0; p < s.passes; ++p) {
        const double z = base + sigma * standard_normal(rng);
        // Narrowed here so the stored pair sums to 1 in float32 as well.
        const float safe = static_cast<float>(1.0 / (1.0 + std::exp(-z)));
        const std::size_t i = ((p * s.rows + r) * s.cols + c) * 2;
        s.probs[i] = static_cast<double>(1.0f - safe);
        s.probs[i + 1] = static_cast<double>(safe);
      }
    }
  }
  return s;
}

void PipelineConfig::validate() const {
  if (schema_version != kSchemaVersion)
    throw StructuralError("pipeline config: unsupported schema_version " + std::to_string(schema_version));
  scene.validate();
  if (!(cell_size > 0.0)) throw DomainError("pipeline config: dem.cell_size must be > 0");
  if (dem_width == 0 || dem_height == 0) throw DomainError("pipeline config: DEM extent must be positive");
  safety.validate();
  if (camera_list.empty()) cameras.validate();
  for (const CameraFrame& cam : camera_list) cam.validate();
  mock.validate();
  if (predictions == PredictionSource::kExternal && predictions_dir.empty())
    throw StructuralError("pipeline config: external predictions need predictions.dir");
  if (threshold && !(*threshold >= 0.0 && *threshold <= std::numbers::ln2))
    throw DomainError("pipeline config: threshold must lie in [0, ln 2]");
  for (std::size_t i = 1; i < bin_edges.size(); ++i)
    if (!(bin_edges[i] > bin_edges[i - 1])) throw StructuralError("pipeline config: bin_edges must increase");
  if (bin_edges.size() == 1) throw StructuralError("pipeline config: bin_edges needs at least two values");
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json doc;
  doc["schema_version"] = schema_version;
  doc["scene"] = scene.to_json();
  doc["dem"] = {{"cell_size", cell_size}, {"width", dem_width}, {"height", dem_height}};
  doc["safety"] = safety_config_to_json(safety);
  doc["cameras"] = {{"count", cameras.count},
                    {"distance", cameras.distance},
                    {"elevation_min", cameras.elevation_min},
                    {"elevation_max", cameras.elevation_max},
                    {"azimuth_offset", cameras.azimuth_offset},
                    {"fov", cameras.fov},
                    {"width", cameras.width},
                    {"height", cameras.height}};
  if (!camera_list.empty()) {
    doc["camera_list"] = nlohmann::json::array();
    for (const CameraFrame& cam : camera_list) doc["camera_list"].push_back(cam.to_json());
  }
  const char* source = predictions == PredictionSource::kNone   ? "none"
                       : predictions == PredictionSource::kMock ? "mock"
                                                                : "external";
  doc["predictions"] = {{"source", source},
                        {"mock",
                         {{"seed", mock.seed},
                          {"passes", mock.passes},
                          {"logit", mock.logit},
                          {"noise", mock.noise},
                          {"flip_rate", mock.flip_rate},
                          {"flip_noise", mock.flip_noise}}}};
  if (predictions == PredictionSource::kExternal) doc["predictions"]["dir"] = predictions_dir.generic_string();
  doc["uncertainty"] = {{"averaging", averaging == ThresholdAveraging::kPixel ? "pixel" : "image"},
                        {"threshold", threshold ? nlohmann::json(*threshold) : nlohmann::json(nullptr)}};
  doc["evaluation"] = {{"bin_axis", to_string(bin_axis)}, {"bin_edges", bin_edges}};
  return doc;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  require_keys(doc, {"schema_version"},
               {"scene", "dem", "safety", "cameras", "camera_list", "predictions", "uncertainty", "evaluation"},
               "pipeline config");
  PipelineConfig c;
  read_opt(doc, "schema_version", c.schema_version, "pipeline config");
  if (c.schema_version != kSchemaVersion)
    throw StructuralError("pipeline config: unsupported schema_version " + std::to_string(c.schema_version));
  if (doc.contains("scene")) c.scene = SceneSpec::from_json(doc.at("scene"));
  if (doc.contains("dem")) {
    const auto& d = doc.at("dem");
    require_keys(d, {}, {"cell_size", "width", "height"}, "pipeline config dem");
    read_opt(d, "cell_size", c.cell_size, "dem");
    read_opt(d, "width", c.dem_width, "dem");
    read_opt(d, "height", c.dem_height, "dem");
  }
  if (doc.contains("safety")) c.safety = safety_config_from_json(doc.at("safety"));
  if (doc.contains("cameras")) {
    const auto& d = doc.at("cameras");
    require_keys(d, {},
                 {"count", "distance", "elevation_min", "elevation_max", "azimuth_offset", "fov", "width", "height"},
                 "pipeline config cameras");
    read_opt(d, "count", c.cameras.count, "cameras");
    read_opt(d, "distance", c.cameras.distance, "cameras");
    read_opt(d, "elevation_min", c.cameras.elevation_min, "cameras");
    read_opt(d, "elevation_max", c.cameras.elevation_max, "cameras");
    read_opt(d, "azimuth_offset", c.cameras.azimuth_offset, "cameras");
    read_opt(d, "fov", c.cameras.fov, "cameras");
    read_opt(d, "width", c.cameras.width, "cameras");
    read_opt(d, "height", c.cameras.height, "cameras");
  }
  if (doc.contains("camera_list")) {
    if (!doc.at("camera_list").is_array()) throw StructuralError("pipeline config: camera_list must be an array");
    for (const auto& cam : doc.at("camera_list")) c.camera_list.push_back(CameraFrame::from_json(cam));
  }
  if (doc.contains("predictions")) {
    const auto& d = doc.at("predictions");
    require_keys(d, {}, {"source", "dir", "mock"}, "pipeline config predictions");
    std::string source = "mock";
    read_opt(d, "source", source, "predictions");
    if (source == "none") c.predictions = PredictionSource::kNone;
    else if (source == "mock") c.predictions = PredictionSource::kMock;
    else if (source == "external") c.predictions = PredictionSource::kExternal;
    else throw StructuralError("pipeline config: predictions.source must be none, mock or external");
    if (d.contains("dir")) {
      std::string dir;
      read_opt(d, "dir", dir, "predictions");
      c.predictions_dir = std::filesystem::path(dir).is_absolute() ? std::filesystem::path(dir) : base_dir / dir;
    }
    if (d.contains("mock")) {
      const auto& m = d.at("mock");
      require_keys(m, {}, {"seed", "passes", "logit", "noise", "flip_rate", "flip_noise"},
                   "pipeline config predictions.mock");
      read_opt(m, "seed", c.mock.seed, "mock");
      read_opt(m, "passes", c.mock.passes, "mock");
      read_opt(m, "logit", c.mock.logit, "mock");
      read_opt(m, "noise", c.mock.noise, "mock");
      read_opt(m, "flip_rate", c.mock.flip_rate, "mock");
      read_opt(m, "flip_noise", c.mock.flip_noise, "mock");
    }
  }
  if (doc.contains("uncertainty")) {
    const auto& d = doc.at("uncertainty");
    require_keys(d, {}, {"averaging", "threshold"}, "pipeline config uncertainty");
    std::string avg = "pixel";
    read_opt(d, "averaging", avg, "uncertainty");
    if (avg == "pixel") c.averaging = ThresholdAveraging::kPixel;
    else if (avg == "image") c.averaging = ThresholdAveraging::kImage;
    else throw StructuralError("pipeline config: uncertainty.averaging must be pixel or image");
    if (d.contains("threshold") && !d.at("threshold").is_null()) {
      double v = 0.0;
      read_opt(d, "threshold", v, "uncertainty");
      c.threshold = v;
    }
  }
  if (doc.contains("evaluation")) {
    const auto& d = doc.at("evaluation");
    require_keys(d, {}, {"bin_axis", "bin_edges"}, "pipeline config evaluation");
    if (d.contains("bin_axis")) {
      std::string axis;
      read_opt(d, "bin_axis", axis, "evaluation");
      c.bin_axis = parse_bin_axis(axis);
    }
    read_opt(d, "bin_edges", c.bin_edges, "evaluation");
  }
  c.validate();
  return c;
}

Grid<std::uint8_t> predicted_codes(const EvalItem& item, const EvalOptions& options,
                                   std::optional<double>* mean_entropy) {
  if (mean_entropy) mean_entropy->reset();
  if (item.labels) {
    if (!item.labels->same_shape(item.truth.map.labels))
      throw StructuralError("prediction for '" + item.image_id + "' does not match its truth raster shape");
    return *item.labels;
  }
  if (!item.stack) throw StructuralError("no prediction for image '" + item.image_id + "'");
  const UncertaintyMap map = masked_entropy(*item.stack, item.truth.map);
  if (mean_entropy && std::any_of(map.valid.values().begin(), map.valid.values().end(), [](auto v) { return v; }))
    *mean_entropy = map.mean_entropy();
  if (!options.mode.with_uncertainty) return map.labels;
  if (!options.threshold) throw StructuralError("with-uncertainty evaluation of prediction stacks needs a threshold");
  return apply_threshold(map, *options.threshold).labels;
}

EvalOutput evaluate_items(const std::vector<EvalItem>& items, const EvalOptions& options) {
  std::vector<MetricsRow> rows;
  rows.reserve(items.size());
  for (const EvalItem& item : items) {
    std::optional<double> entropy;
    const Grid<std::uint8_t> codes = predicted_codes(item, options, &entropy);
    rows.push_back(make_row(item.image_id, accumulate(codes, item.truth.map, options.mode), item.truth.map.meta, entropy));
  }
  EvalOutput out;
  out.report = build_report(std::move(rows), options.mode);
  if (options.bin_axis && !options.bin_edges.empty())
    out.bins = bin_report(out.report.images, *options.bin_axis, options.bin_edges);
  return out;
}

void write_eval_output(const std::filesystem::path& dir, const EvalOutput& output) {
  write_file_atomic(dir / "metrics.csv", format_report_csv(output.report));
  write_json(dir / "metrics.json", report_to_json(output.report));
  if (output.bins)
    write_file_atomic(dir / ("bins_" + to_string(output.bins->axis) + ".csv"), format_bins_csv(*output.bins));
}

std::vector<EvalItem> load_eval_items(const std::filesystem::path& pred_dir, const std::filesystem::path& truth_dir) {
  if (!std::filesystem::is_directory(truth_dir)) throw IoError("truth directory not found: " + truth_dir.string());
  if (!std::filesystem::is_directory(pred_dir)) throw IoError("prediction directory not found: " + pred_dir.string());
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(truth_dir))
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "labels.json")) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw StructuralError("no labeled images under " + truth_dir.string());
  std::vector<EvalItem> items;
  for (const auto& dir : dirs) {
    EvalItem item;
    item.truth = read_labels(dir);
    item.image_id = item.truth.image_id;
    const auto flat = pred_dir / (item.image_id + ".npy");
    const auto nested = pred_dir / item.image_id / "labels.npy";
    if (std::filesystem::exists(flat)) {
      const npy::Array arr = npy::read(flat);
      if (arr.dtype == npy::DType::kUInt8 && arr.shape.size() == 2) {
        item.labels = npy::read_uint8_grid(flat);
      } else {
        item.stack = read_prediction_stack(flat);
        if (item.stack->image_id != item.image_id)
          throw StructuralError(flat.string() + ": sidecar image_id '" + item.stack->image_id + "' does not match '" +
                                item.image_id + "'");
      }
    } else if (std::filesystem::exists(nested)) {
      item.labels = npy::read_uint8_grid(nested);
    } else {
      throw StructuralError("no prediction for image '" + item.image_id + "' in " + pred_dir.string());
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<PredictionStack> load_prediction_stacks(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("prediction directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".npy") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<PredictionStack> stacks;
  for (const auto& f : files) stacks.push_back(read_prediction_stack(f));
  return stacks;
}

nlohmann::json build_manifest(const std::filesystem::path& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = std::filesystem::relative(entry.path(), dir).generic_string();
    if (rel != "manifest.json") paths.push_back(rel);
  }
  std::sort(paths.begin(), paths.end());
  nlohmann::json files = nlohmann::json::array();
  for (const auto& rel : paths)
    files.push_back({{"path", rel},
                     {"bytes", std::filesystem::file_size(dir / rel)},
                     {"sha256", sha256_file(dir / rel)}});
  return {{"schema_version", kSchemaVersion}, {"files", files}};
}

Vec3 surface_point_along(const TriangleMesh& mesh, const MeshRaycaster& caster, const Vec3& direction,
                         TraceMode mode) {
  if (!(direction.norm() > 0.0)) throw DomainError("surface point: zero direction");
  double reach = 0.0;
  for (const Vec3& v : mesh.vertices()) reach = std::max(reach, v.norm());
  const Vec3 u = direction.normalized();
  const RayHit hit = caster.closest_hit({u * (2.0 * reach + 1.0), -u, 0.0, 4.0 * reach + 2.0}, mode);
  if (!hit.hit) throw DomainError("surface point: direction does not intersect the mesh");
  return hit.point;
}

nlohmann::json run_e2e(const PipelineConfig& config, const std::filesystem::path& out_dir, const E2eOptions& options) {
  config.validate();
  const TriangleMesh mesh = generate_scene(config.scene);
  write_obj(out_dir / "scene" / "scene.obj", mesh);
  write_json(out_dir / "scene" / "scene.json", config.scene.to_json());
  write_json(out_dir / "config.json", config.to_json());
  spdlog::info("scene: {} vertices, {} faces", mesh.vertices().size(), mesh.faces().size());

  const MeshRaycaster caster(mesh);
  const Vec3 site = surface_point_along(mesh, caster, config.scene.site_direction, options.mode);

  const PolyhedronGravity gravity(mesh);
  GravityParams params;
  params.density = config.scene.density;
  const FrameResult fr = build_local_frame(mesh, gravity, params, site);
  write_json(out_dir / "frame.json", {{"frame", frame_to_json(fr.frame)},
                                      {"gravity", vec3_json(fr.gravity)},
                                      {"evaluation_point", vec3_json(fr.evaluation_point)},
                                      {"density", params.density}});

  const Dem dem = rasterize_dem(mesh, fr.frame, config.cell_size, config.dem_width, config.dem_height,
                                {options.mode, options.threads});
  write_dem(out_dir / "dem", dem);
  const HazardMap hazard = evaluate_dem(dem, config.safety, {options.threads});
  write_hazard(out_dir / "hazard", hazard);
  spdlog::info("hazard: {} safe, {} unsafe, {} invalid", hazard.count(Safety::kSafe), hazard.count(Safety::kUnsafe),
               hazard.count(Safety::kInvalid));

  const Vec3 sun = config.scene.sun_direction.normalized();
  std::vector<CameraFrame> cams = config.camera_list;
  if (cams.empty()) cams = rig_cameras(config.cameras, fr.frame, sun);

  std::vector<EvalItem> items;
  TraceOptions trace;
  trace.mode = options.mode;
  trace.threads = options.threads;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const std::string id = image_name(i);
    CameraFrame cam = cams[i];
    if (!cam.sun_direction) cam.sun_direction = sun;
    const Grid<PixelHit> hits = trace_pixels(mesh, caster, cam, trace);
    EvalItem item;
    item.image_id = id;
    item.truth = {id, labels_from_hits(hazard, cam, hits), cam};
    write_labels(out_dir / "labels" / id, item.truth);
    write_render(out_dir / "images" / id, shade_hits(caster, hits, *cam.sun_direction));
    nlohmann::json cam_doc = cam.to_json();
    cam_doc["image_id"] = id;
    write_json(out_dir / "images" / id / "camera.json", cam_doc);
    items.push_back(std::move(item));
  }

  if (config.predictions == PredictionSource::kNone) {
    const auto manifest = build_manifest(out_dir);
    write_json(out_dir / "manifest.json", manifest);
    return manifest;
  }

  if (config.predictions == PredictionSource::kMock) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      items[i].stack = mock_predictions(config.mock, items[i].truth.map, items[i].image_id, i);
      write_prediction_stack(out_dir / "predictions" / (items[i].image_id + ".npy"), *items[i].stack);
    }
  } else {
    items = load_eval_items(config.predictions_dir, out_dir / "labels");
  }

  std::vector<UncertaintyMap> maps;
  for (const EvalItem& item : items)
    if (item.stack) maps.push_back(masked_entropy(*item.stack, item.truth.map));
  std::optional<UncertaintyThreshold> threshold;
  if (config.threshold) {
    threshold = UncertaintyThreshold{*config.threshold, "configured value"};
  } else if (!maps.empty()) {
    threshold = compute_threshold(maps, config.averaging);
  }
  if (threshold) write_json(out_dir / "report" / "threshold.json", threshold_to_json(*threshold));
  std::size_t k = 0;
  for (const EvalItem& item : items) {
    if (!item.stack) continue;
    const UncertaintyMap& map = maps[k++];
    std::optional<ScreenedLabels> screened;
    if (threshold) screened = apply_threshold(map, *threshold);
    write_uncertainty(out_dir / "uncertainty" / item.image_id, item.image_id, map, threshold, screened);
  }

  for (bool with_uncertainty : {false, true}) {
    if (with_uncertainty && !threshold) continue;
    for (bool ignore_shadows : {false, true}) {
      EvalOptions eo;
      eo.mode = {with_uncertainty, ignore_shadows};
      eo.threshold = threshold;
      if (!config.bin_edges.empty()) {
        eo.bin_axis = config.bin_axis;
        eo.bin_edges = config.bin_edges;
      }
      const std::string name = std::string(with_uncertainty ? "with_uncertainty" : "without_uncertainty") +
                               (ignore_shadows ? "_ignore_shadows" : "");
      write_eval_output(out_dir / "report" / name, evaluate_items(items, eo));
    }
  }

  const auto manifest = build_manifest(out_dir);
  write_json(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace sbhd

// sbhd: command-line front end. Each subcommand wraps one toolkit operation.

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sbhd/camera.hpp"
#include "sbhd/dem.hpp"
#include "sbhd/errors.hpp"
#include "sbhd/fileio.hpp"
#include "sbhd/gravity.hpp"
#include "sbhd/hazard.hpp"
#include "sbhd/io.hpp"
#include "sbhd/local_frame.hpp"
#include "sbhd/mesh.hpp"
#include "sbhd/pipeline.hpp"
#include "sbhd/raycast.hpp"
#include "sbhd/synth.hpp"
#include "sbhd/uncertainty.hpp"

namespace fs = std::filesystem;
using namespace sbhd;

namespace {

void emit_error(const std::string& kind, const std::string& message, int code) {
  const nlohmann::json doc{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << doc.dump() << "\n";
}

void emit_ok(nlohmann::json summary) {
  summary["status"] = "ok";
  std::cout << summary.dump() << "\n";
}

TraceMode trace_mode(bool brute_force) { return brute_force ? TraceMode::kBruteForce : TraceMode::kBvh; }

TriangleMesh load_mesh(const fs::path& path) {
  ObjReadResult obj = read_obj(path);
  return std::move(obj.mesh);
}

Vec3 vec3_arg(const std::vector<double>& v, const char* name) {
  if (v.size() != 3) throw StructuralError(std::string(name) + " needs three values");
  return {v[0], v[1], v[2]};
}

std::optional<UncertaintyThreshold> threshold_arg(const std::optional<double>& value, const std::string& file) {
  if (value) return UncertaintyThreshold{*value, "command line"};
  if (!file.empty()) return threshold_from_json(read_json(file));
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Common {
  int threads = 1;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Common& common) {
  CLI::App* cmd = app.add_subcommand(name, help);
  cmd->add_option("--threads", common.threads, "Worker threads (1 is bitwise-deterministic)")
      ->check(CLI::Range(1, 1024));
  return cmd;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small-body landing-hazard toolkit"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  Common common;
  std::function<void()> run;

  // gravity
  std::string g_mesh, g_points, g_out;
  double g_density = GravityParams{}.density;
  double g_constant = GravityParams{}.gravitational_constant;
  auto* gravity = add_command(app, "gravity", "Polyhedron gravity at a list of points", common);
  gravity->add_option("--mesh", g_mesh, "Watertight OBJ shape model")->required();
  gravity->add_option("--points", g_points, "CSV (header x,y,z) or (N, 3) NPY of exterior points")->required();
  gravity->add_option("--density", g_density, "kg/m^3");
  gravity->add_option("--gravitational-constant", g_constant, "m^3 kg^-1 s^-2");
  gravity->add_option("--out", g_out, "Output CSV")->required();
  gravity->callback([&] {
    run = [&] {
      const TriangleMesh mesh = load_mesh(g_mesh);
      const std::vector<Vec3> points = read_points(g_points);
      GravityParams params{g_density, g_constant};
      params.validate();
      const PolyhedronGravity model(mesh);
      std::vector<GravitySample> samples(points.size());
      std::vector<std::string> failures(points.size());
#pragma omp parallel for schedule(dynamic, 16)
      for (std::size_t i = 0; i < points.size(); ++i) {
        try {
          samples[i].acceleration = model.acceleration(params, points[i]);
          samples[i].potential = model.evaluate(params, points[i]).potential;
        } catch (const std::exception& e) {
          failures[i] = e.what();
        }
      }
      for (std::size_t i = 0; i < points.size(); ++i)
        if (!failures[i].empty()) throw DomainError("point " + std::to_string(i) + ": " + failures[i]);
      std::string csv = "x,y,z,ax,ay,az,potential\n";
      for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3& p = points[i];
        const Vec3& a = samples[i].acceleration;
        csv += format_double(p.x()) + "," + format_double(p.y()) + "," + format_double(p.z()) + "," +
               format_double(a.x()) + "," + format_double(a.y()) + "," + format_double(a.z()) + "," +
               format_double(samples[i].potential) + "\n";
      }
      write_file_atomic(g_out, csv);
      emit_ok({{"points", points.size()}, {"out", g_out}});
    };
  });

  // dem
  std::string d_mesh, d_out;
  std::vector<double> d_point, d_direction;
  double d_cell = 0.05, d_density = GravityParams{}.density;
  std::size_t d_width = 80, d_height = 80;
  std::optional<double> d_epsilon;
  bool d_brute = false;
  auto* dem = add_command(app, "dem", "Gravity-aligned DEM around a surface point", common);
  dem->add_option("--mesh", d_mesh, "Watertight OBJ shape model")->required();
  auto* point_opt = dem->add_option("--surface-point", d_point, "Body-frame surface point x y z")->expected(3);
  dem->add_option("--site-direction", d_direction, "Direction from the body origin to the site")
      ->expected(3)
      ->excludes(point_opt);
  dem->add_option("--cell-size", d_cell, "m");
  dem->add_option("--width", d_width, "Cells along local x");
  dem->add_option("--height", d_height, "Cells along local y");
  dem->add_option("--density", d_density, "kg/m^3");
  dem->add_option("--surface-epsilon", d_epsilon, "Outward nudge of the gravity evaluation point, m");
  dem->add_flag("--brute-force", d_brute, "Test every triangle per ray instead of the BVH");
  dem->add_option("--out", d_out, "Output directory")->required();
  dem->callback([&] {
    run = [&] {
      if (d_point.empty() && d_direction.empty())
        throw StructuralError("dem: give --surface-point or --site-direction");
      const TriangleMesh mesh = load_mesh(d_mesh);
      const MeshRaycaster caster(mesh);
      const Vec3 site = d_point.empty()
                            ? surface_point_along(mesh, caster, vec3_arg(d_direction, "--site-direction"),
                                                  trace_mode(d_brute))
                            : vec3_arg(d_point, "--surface-point");
      GravityParams params;
      params.density = d_density;
      params.validate();
      const PolyhedronGravity model(mesh);
      const FrameResult fr = build_local_frame(mesh, model, params, site, {d_epsilon});
      const Dem out = rasterize_dem(mesh, fr.frame, d_cell, d_width, d_height, {trace_mode(d_brute), common.threads});
      write_dem(d_out, out);
      write_json(fs::path(d_out) / "frame.json", {{"frame", frame_to_json(fr.frame)},
                                                  {"gravity", vec3_json(fr.gravity)},
                                                  {"evaluation_point", vec3_json(fr.evaluation_point)},
                                                  {"density", params.density}});
      emit_ok({{"rows", out.rows()}, {"cols", out.cols()}, {"valid_cells", out.valid_count()}, {"out", d_out}});
    };
  });

  // hazard
  std::string h_dem, h_config, h_out;
  std::optional<double> h_slope, h_rough, h_diameter;
  std::optional<int> h_orient;
  bool h_rough_only = false;
  auto* hazard = add_command(app, "hazard", "ALHAT slope/roughness hazard map of a DEM", common);
  hazard->add_option("--dem", h_dem, "DEM directory")->required();
  hazard->add_option("--config", h_config, "Safety config JSON");
  hazard->add_option("--slope-threshold", h_slope, "deg");
  hazard->add_option("--roughness-threshold", h_rough, "m");
  hazard->add_option("--lander-diameter", h_diameter, "m");
  hazard->add_option("--orientations", h_orient, "Orientation samples over [0, 90) deg");
  hazard->add_flag("--roughness-only", h_rough_only, "Ignore slope in the verdict");
  hazard->add_option("--out", h_out, "Output directory")->required();
  hazard->callback([&] {
    run = [&] {
      SafetyConfig config = h_config.empty() ? SafetyConfig{} : safety_config_from_json(read_json(h_config));
      if (h_slope) config.slope_threshold = *h_slope;
      if (h_rough) config.roughness_threshold = *h_rough;
      if (h_diameter) config.lander_diameter = *h_diameter;
      if (h_orient) config.orientation_samples = *h_orient;
      config.validate();
      const Dem d = read_dem(h_dem);
      HazardMap map = evaluate_dem(d, config, {common.threads});
      if (h_rough_only) map = roughness_only_map(map);
      write_hazard(h_out, map);
      emit_ok({{"safe", map.count(Safety::kSafe)},
               {"unsafe", map.count(Safety::kUnsafe)},
               {"invalid", map.count(Safety::kInvalid)},
               {"out", h_out}});
    };
  });

  // label
  std::string l_hazard, l_dem, l_camera, l_mesh, l_out;
  std::optional<double> l_offset;
  bool l_brute = false;
  auto* label = add_command(app, "label", "Project hazard verdicts into a camera image", common);
  label->add_option("--hazard", l_hazard, "Hazard directory")->required();
  label->add_option("--dem", l_dem, "DEM directory")->required();
  label->add_option("--camera", l_camera, "Camera JSON")->required();
  label->add_option("--mesh", l_mesh, "OBJ shape model")->required();
  label->add_option("--shadow-offset", l_offset, "Sun-ray start offset, m");
  label->add_flag("--brute-force", l_brute, "Test every triangle per ray instead of the BVH");
  label->add_option("--out", l_out, "Output directory")->required();
  label->callback([&] {
    run = [&] {
      const auto cam_doc = read_json(l_camera);
      const CameraFrame cam = CameraFrame::from_json(cam_doc);
      const std::string id = cam_doc.contains("image_id") ? cam_doc.at("image_id").get<std::string>() : "image";
      const HazardMap h = read_hazard(l_hazard);
      const Dem d = read_dem(l_dem);
      const TriangleMesh mesh = load_mesh(l_mesh);
      TraceOptions opts;
      opts.mode = trace_mode(l_brute);
      opts.threads = common.threads;
      opts.shadow_offset = l_offset;
      const LabeledImage labeled{id, project_labels(h, d, cam, mesh, opts), cam};
      write_labels(l_out, labeled);
      emit_ok({{"image_id", id},
               {"meta", labeled.map.meta ? image_meta_to_json(*labeled.map.meta) : nlohmann::json(nullptr)},
               {"out", l_out}});
    };
  });

  // synth
  std::string s_spec, s_cameras, s_out;
  CameraRig s_rig;
  bool s_brute = false;
  auto* synth = add_command(app, "synth", "Generate a synthetic scene and render images", common);
  synth->add_option("--spec", s_spec, "Scene spec JSON (defaults when omitted)");
  synth->add_option("--cameras", s_cameras, "JSON array of cameras (default: a ring over the site)");
  synth->add_option("--camera-count", s_rig.count, "Ring cameras");
  synth->add_option("--camera-distance", s_rig.distance, "m");
  synth->add_option("--fov", s_rig.fov, "deg");
  synth->add_option("--width", s_rig.width, "px");
  synth->add_option("--height", s_rig.height, "px");
  synth->add_flag("--brute-force", s_brute, "Test every triangle per ray instead of the BVH");
  synth->add_option("--out", s_out, "Output directory")->required();
  synth->callback([&] {
    run = [&] {
      const SceneSpec spec = s_spec.empty() ? SceneSpec{} : SceneSpec::from_json(read_json(s_spec));
      const TriangleMesh mesh = generate_scene(spec);
      const fs::path out(s_out);
      write_obj(out / "scene.obj", mesh);
      write_json(out / "scene.json", spec.to_json());
      const MeshRaycaster caster(mesh);
      const Vec3 sun = spec.sun_direction.normalized();
      std::vector<CameraFrame> cams;
      if (!s_cameras.empty()) {
        const auto doc = read_json(s_cameras);
        if (!doc.is_array()) throw StructuralError("--cameras: expected a JSON array");
        for (const auto& c : doc) cams.push_back(CameraFrame::from_json(c));
      } else {
        const Vec3 site = surface_point_along(mesh, caster, spec.site_direction, trace_mode(s_brute));
        GravityParams params;
        params.density = spec.density;
        const FrameResult fr = build_local_frame(mesh, PolyhedronGravity(mesh), params, site);
        cams = rig_cameras(s_rig, fr.frame, sun);
      }
      TraceOptions opts;
      opts.mode = trace_mode(s_brute);
      opts.threads = common.threads;
      for (std::size_t i = 0; i < cams.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "img_%03zu", i);
        const Vec3 s = cams[i].sun_direction.value_or(sun);
        write_render(out / "images" / id, render_image(mesh, caster, cams[i], s, opts));
        nlohmann::json cam_doc = cams[i].to_json();
        cam_doc["sun_direction"] = vec3_json(s);
        cam_doc["image_id"] = id;
        write_json(out / "images" / id / "camera.json", cam_doc);
      }
      emit_ok({{"vertices", mesh.vertices().size()}, {"faces", mesh.faces().size()}, {"images", cams.size()},
               {"out", s_out}});
    };
  });

  // entropy
  std::string e_stack, e_thr_file, e_out;
  std::optional<double> e_thr;
  auto* entropy = add_command(app, "entropy", "Predictive entropy of a prediction stack", common);
  entropy->add_option("--stack", e_stack, "Prediction stack .npy (sidecar .json alongside)")->required();
  auto* thr_opt = entropy->add_option("--threshold", e_thr, "Screening threshold, nats");
  entropy->add_option("--threshold-file", e_thr_file, "Threshold JSON")->excludes(thr_opt);
  entropy->add_option("--out", e_out, "Output directory")->required();
  entropy->callback([&] {
    run = [&] {
      const PredictionStack stack = read_prediction_stack(e_stack);
      const UncertaintyMap map = predictive_entropy(stack);
      const auto thr = threshold_arg(e_thr, e_thr_file);
      std::optional<ScreenedLabels> screened;
      if (thr) screened = apply_threshold(map, *thr);
      write_uncertainty(e_out, stack.image_id, map, thr, screened);
      nlohmann::json summary{{"image_id", stack.image_id}, {"mean_entropy", map.mean_entropy()}, {"out", e_out}};
      if (screened) summary["screening_rate"] = screened->screening_rate();
      emit_ok(summary);
    };
  });

  // threshold
  std::string t_stacks, t_truth, t_out, t_avg = "pixel";
  auto* threshold = add_command(app, "threshold", "Mean training entropy as the screening threshold", common);
  threshold->add_option("--stacks", t_stacks, "Directory of prediction stacks")->required();
  threshold->add_option("--truth", t_truth, "Label directory; restricts statistics to labeled pixels");
  threshold->add_option("--averaging", t_avg, "pixel or image")->check(CLI::IsMember({"pixel", "image"}));
  threshold->add_option("--out", t_out, "Output JSON")->required();
  threshold->callback([&] {
    run = [&] {
      std::vector<UncertaintyMap> maps;
      for (const PredictionStack& s : load_prediction_stacks(t_stacks)) {
        UncertaintyMap m = predictive_entropy(s);
        if (!t_truth.empty()) {
          const LabeledImage truth = read_labels(fs::path(t_truth) / s.image_id);
          Grid<std::uint8_t> mask(m.rows(), m.cols());
          if (!truth.map.labels.same_shape(mask)) throw StructuralError("threshold: truth shape mismatch for " + s.image_id);
          for (std::size_t i = 0; i < mask.size(); ++i)
            mask.values()[i] = truth.map.labels.values()[i] != code(Safety::kInvalid) ? 1 : 0;
          set_valid_mask(m, mask);
        }
        maps.push_back(std::move(m));
      }
      const auto thr = compute_threshold(maps, t_avg == "pixel" ? ThresholdAveraging::kPixel : ThresholdAveraging::kImage);
      write_json(t_out, threshold_to_json(thr));
      emit_ok({{"value", thr.value}, {"provenance", thr.provenance}, {"out", t_out}});
    };
  });

  // evaluate
  std::string v_pred, v_truth, v_thr_file, v_out, v_axis;
  std::optional<double> v_thr;
  std::vector<double> v_edges;
  bool v_unc = false, v_shadows = false;
  auto* evaluate = add_command(app, "evaluate", "Confusion counts and metrics against truth labels", common);
  evaluate->add_option("--pred", v_pred, "Prediction directory")->required();
  evaluate->add_option("--truth", v_truth, "Truth label directory")->required();
  evaluate->add_flag("--with-uncertainty", v_unc, "Screen pixels above the threshold");
  evaluate->add_flag("--ignore-shadows", v_shadows, "Exclude truth shadow pixels");
  auto* vthr_opt = evaluate->add_option("--threshold", v_thr, "Screening threshold, nats");
  evaluate->add_option("--threshold-file", v_thr_file, "Threshold JSON")->excludes(vthr_opt);
  evaluate->add_option("--bin-axis", v_axis, "gsd, viewing_angle or visibility_ratio")
      ->check(CLI::IsMember({"gsd", "viewing_angle", "visibility_ratio"}));
  evaluate->add_option("--bin-edges", v_edges, "Increasing bin edges");
  evaluate->add_option("--out", v_out, "Output directory")->required();
  evaluate->callback([&] {
    run = [&] {
      EvalOptions opts;
      opts.mode = {v_unc, v_shadows};
      opts.threshold = threshold_arg(v_thr, v_thr_file);
      if (!v_axis.empty()) {
        if (v_edges.size() < 2) throw StructuralError("--bin-axis needs --bin-edges with at least two values");
        opts.bin_axis = parse_bin_axis(v_axis);
        opts.bin_edges = v_edges;
      }
      const EvalOutput out = evaluate_items(load_eval_items(v_pred, v_truth), opts);
      write_eval_output(v_out, out);
      nlohmann::json summary = report_to_json(out.report);
      emit_ok({{"images", out.report.images.size()}, {"pooled", summary["pooled"]["metrics"]}, {"out", v_out}});
    };
  });

  // e2e
  std::string x_config, x_out;
  bool x_brute = false;
  auto* e2e = add_command(app, "e2e", "Full synthetic pipeline from a config file", common);
  e2e->add_option("--config", x_config, "Pipeline config JSON")->required();
  e2e->add_flag("--brute-force", x_brute, "Test every triangle per ray instead of the BVH");
  e2e->add_option("--out", x_out, "Output directory")->required();
  e2e->callback([&] {
    run = [&] {
      const PipelineConfig config = PipelineConfig::from_json(read_json(x_config), fs::path(x_config).parent_path());
      const auto manifest = run_e2e(config, x_out, {common.threads, trace_mode(x_brute)});
      emit_ok({{"files", manifest["files"].size()}, {"out", x_out}});
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("usage", e.what(), static_cast<int>(ExitCode::kBadInput));
    return static_cast<int>(ExitCode::kBadInput);
  }

  spdlog::set_default_logger(spdlog::stderr_color_mt("sbhd"));
  spdlog::set_level(spdlog::level::from_str(log_level));
  omp_set_num_threads(common.threads);

  try {
    run();
  } catch (const std::exception& e) {
    const int code = static_cast<int>(exit_code(e));
    emit_error(error_kind(e), e.what(), code);
    return code;
  }
  return 0;
}

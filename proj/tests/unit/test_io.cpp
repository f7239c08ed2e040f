#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sbhd/errors.hpp"
#include "sbhd/fileio.hpp"
#include "sbhd/io.hpp"
#include "sbhd/npy.hpp"
#include "sbhd/pipeline.hpp"

using namespace sbhd;

namespace {

PredictionStack small_stack() {
  PredictionStack s;
  s.image_id = "img_000";
  s.passes = 3;
  s.rows = 2;
  s.cols = 2;
  for (std::size_t i = 0; i < 12; ++i) {
    const float p = static_cast<float>(i) / 12.0f;
    s.probs.push_back(1.0f - p);
    s.probs.push_back(p);
  }
  return s;
}

}  // namespace

TEST(Io, DemRoundTripNarrowsToFloat32) {
  const auto dir = fixtures::temp_dir("io_dem");
  Dem dem = fixtures::random_rough_dem(3, 12);
  dem.frame = frame_from_gravity(Vec3(1, 2, 3), Vec3(0.1, 0.2, -1));
  dem.nodata(0, 5) = 1;
  write_dem(dir / "dem", dem);
  const Dem back = read_dem(dir / "dem");
  EXPECT_EQ(back.nodata, dem.nodata);
  EXPECT_EQ(back.cell_size, dem.cell_size);
  EXPECT_EQ(back.grid_origin, dem.grid_origin);
  EXPECT_EQ(back.frame.rotation, dem.frame.rotation);
  EXPECT_EQ(back.frame.origin, dem.frame.origin);
  for (std::size_t i = 0; i < dem.elevations.size(); ++i)
    if (dem.nodata.values()[i] == 0) {
      EXPECT_EQ(back.elevations.values()[i], static_cast<double>(static_cast<float>(dem.elevations.values()[i])));
    }
}

TEST(Io, HazardRoundTrip) {
  const auto dir = fixtures::temp_dir("io_hazard");
  SafetyConfig cfg;
  cfg.slope_threshold = 25.0;
  const HazardMap h = evaluate_dem(fixtures::random_rough_dem(4, 16), cfg);
  write_hazard(dir / "hz", h);
  const HazardMap back = read_hazard(dir / "hz");
  EXPECT_EQ(back.safe, h.safe);
  EXPECT_EQ(back.config.slope_threshold, 25.0);
  EXPECT_EQ(back.config.orientation_samples, cfg.orientation_samples);
  EXPECT_EQ(back.cell_size, h.cell_size);
  for (std::size_t i = 0; i < h.safe.size(); ++i) {
    if (h.safe.values()[i] == code(Safety::kInvalid)) {
      EXPECT_TRUE(std::isnan(back.slope.values()[i]));
      continue;
    }
    EXPECT_EQ(back.slope.values()[i], static_cast<double>(static_cast<float>(h.slope.values()[i])));
  }
}

TEST(Io, LabelsRoundTripWithMetaAndCamera) {
  const auto dir = fixtures::temp_dir("io_labels");
  LabeledImage li;
  li.image_id = "img_007";
  li.map.labels = Grid<std::uint8_t>(3, 4, 1);
  li.map.labels(0, 0) = 255;
  li.map.labels(1, 2) = 0;
  li.map.shadow = Grid<std::uint8_t>(3, 4, 0);
  li.map.shadow(2, 3) = 1;
  ImageMeta meta;
  meta.gsd = 0.0123;
  meta.imaging_depth = 5.5;
  meta.viewing_angle = 12.5;
  meta.visibility_ratio = 0.75;
  meta.hit_pixels = 11;
  meta.lit_pixels = 8;
  li.map.meta = meta;
  li.camera = fixtures::nadir_camera(3.0, fixtures::intrinsics(4, 3, 10.0));
  write_labels(dir / "l", li);
  const LabeledImage back = read_labels(dir / "l");
  EXPECT_EQ(back.image_id, "img_007");
  EXPECT_EQ(back.map.labels, li.map.labels);
  EXPECT_EQ(back.map.shadow, li.map.shadow);
  ASSERT_TRUE(back.map.meta);
  EXPECT_EQ(back.map.meta->gsd, 0.0123);
  EXPECT_EQ(back.map.meta->lit_pixels, 8u);
  ASSERT_TRUE(back.camera);
  EXPECT_EQ(back.camera->rotation, li.camera->rotation);

  // Unknown label codes are rejected on read.
  li.map.labels(0, 1) = 9;
  write_labels(dir / "bad", li);
  EXPECT_THROW(read_labels(dir / "bad"), StructuralError);
}

TEST(Io, PredictionStackRoundTrip) {
  const auto dir = fixtures::temp_dir("io_stack");
  const PredictionStack s = small_stack();
  write_prediction_stack(dir / "img_000.npy", s);
  EXPECT_TRUE(std::filesystem::exists(dir / "img_000.json"));
  const auto side = read_json(dir / "img_000.json");
  EXPECT_EQ(side, (nlohmann::json{{"image_id", "img_000"}, {"T", 3}, {"class_order", {"unsafe", "safe"}}}));
  const auto arr = npy::read(dir / "img_000.npy");
  EXPECT_EQ(arr.dtype, npy::DType::kFloat32);
  EXPECT_EQ(arr.shape, (std::vector<std::size_t>{3, 2, 2, 2}));
  const PredictionStack back = read_prediction_stack(dir / "img_000.npy");
  EXPECT_EQ(back.passes, 3u);
  EXPECT_EQ(back.probs, s.probs);
}

TEST(Io, PredictionSidecarErrors) {
  const auto dir = fixtures::temp_dir("io_sidecar");
  write_prediction_stack(dir / "a.npy", small_stack());
  const nlohmann::json good = read_json(dir / "a.json");

  auto expect_bad = [&](nlohmann::json doc) {
    write_json(dir / "a.json", doc);
    EXPECT_THROW(read_prediction_stack(dir / "a.npy"), StructuralError) << doc.dump();
  };
  nlohmann::json d = good;
  d["T"] = 4;
  expect_bad(d);
  d = good;
  d["class_order"] = {"safe", "unsafe"};
  expect_bad(d);
  d = good;
  d["extra"] = 1;
  expect_bad(d);
  d = good;
  d.erase("image_id");
  expect_bad(d);

  std::filesystem::remove(dir / "a.json");
  EXPECT_THROW(read_prediction_stack(dir / "a.npy"), IoError);

  // Wrong dtype and rank.
  write_json(dir / "b.json", good);
  npy::write(dir / "b.npy", npy::make_float64({3, 2, 2, 2}, std::vector<double>(24, 0.5)));
  EXPECT_THROW(read_prediction_stack(dir / "b.npy"), StructuralError);
  npy::write(dir / "b.npy", npy::make_float32({3, 4, 2}, std::vector<float>(24, 0.5f)));
  EXPECT_THROW(read_prediction_stack(dir / "b.npy"), StructuralError);
}

TEST(Io, PointsFromCsvAndNpy) {
  const auto dir = fixtures::temp_dir("io_points");
  write_file_atomic(dir / "p.csv", "x,y,z\n1,2,3\n-0.5,0,1e3\n");
  const auto pts = read_points(dir / "p.csv");
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[1], Vec3(-0.5, 0, 1000));
  npy::write(dir / "p.npy", npy::make_float64({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(read_points(dir / "p.npy")[1], Vec3(4, 5, 6));
  write_file_atomic(dir / "bad.csv", "x,y,z\n1,2\n");
  EXPECT_THROW(read_points(dir / "bad.csv"), StructuralError);
  write_file_atomic(dir / "nohdr.csv", "1,2,3\n");
  EXPECT_THROW(read_points(dir / "nohdr.csv"), StructuralError);
}

TEST(Io, PipelineConfigRoundTripAndStrictness) {
  PipelineConfig c;
  c.scene.seed = 99;
  c.bin_edges = {0, 0.01, 0.02};
  c.threshold = 0.3;
  const PipelineConfig back = PipelineConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());

  auto doc = c.to_json();
  doc.erase("schema_version");
  EXPECT_THROW(PipelineConfig::from_json(doc), StructuralError);
  doc = c.to_json();
  doc["schema_version"] = 2;
  EXPECT_THROW(PipelineConfig::from_json(doc), StructuralError);
  doc = c.to_json();
  doc["dem"]["resolution"] = 1;
  EXPECT_THROW(PipelineConfig::from_json(doc), StructuralError);
  doc = c.to_json();
  doc["colour"] = "red";
  EXPECT_THROW(PipelineConfig::from_json(doc), StructuralError);
  doc = c.to_json();
  doc["dem"]["cell_size"] = -0.05;
  EXPECT_THROW(PipelineConfig::from_json(doc), DomainError);
}

TEST(Io, ShippedConfigLoads) {
  const auto path = std::filesystem::path(SBHD_SOURCE_DIR) / "configs" / "e2e_seed42.json";
  const PipelineConfig c = PipelineConfig::from_json(read_json(path), path.parent_path());
  EXPECT_EQ(c.scene.seed, 42u);
  EXPECT_EQ(c.predictions, PredictionSource::kMock);
}

TEST(Io, ManifestListsFilesSorted) {
  const auto dir = fixtures::temp_dir("io_manifest");
  write_file_atomic(dir / "b.txt", "bb");
  write_file_atomic(dir / "a" / "c.txt", "abc");
  write_file_atomic(dir / "manifest.json", "{}");
  const auto m = build_manifest(dir);
  ASSERT_EQ(m["files"].size(), 2u);
  EXPECT_EQ(m["files"][0]["path"], "a/c.txt");
  EXPECT_EQ(m["files"][0]["sha256"], "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(m["files"][1]["bytes"], 2);
}

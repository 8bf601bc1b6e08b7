#include "pantosim/io.hpp"
#include "pantosim/scenarios.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace pantosim;
using io::Json;

namespace {

std::string data_file(const std::string& name) { return std::string(PANTOSIM_DATA_DIR) + "/" + name; }

template <class Fn>
std::string format_error_key(Fn&& fn) {
  try {
    fn();
  } catch (const FormatError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(GeometryFile, RoundTripIsIdentity) {
  for (const auto& g : {default_geometry(), study_geometry()}) {
    const auto text = io::geometry_to_json(g).dump();
    EXPECT_EQ(io::geometry_from_json(io::parse_json_text(text, "t")), g);
    EXPECT_EQ(io::geometry_to_json(io::geometry_from_json(io::parse_json_text(text, "t"))).dump(), text);
  }
}

TEST(GeometryFile, StrictKeys) {
  Json j = io::geometry_to_json(default_geometry());
  j["l3_m"] = 0.1;
  EXPECT_EQ(format_error_key([&] { io::geometry_from_json(j); }), "l3_m");
  j = io::geometry_to_json(default_geometry());
  j.erase("l2_m");
  EXPECT_EQ(format_error_key([&] { io::geometry_from_json(j); }), "l2_m");
  j = io::geometry_to_json(default_geometry());
  j["alpha"] = "big";
  EXPECT_EQ(format_error_key([&] { io::geometry_from_json(j); }), "alpha");
  j = io::geometry_to_json(default_geometry());
  j["format_version"] = 2;
  EXPECT_EQ(format_error_key([&] { io::geometry_from_json(j); }), "format_version");
  j = io::geometry_to_json(default_geometry());
  j["base_position_m"] = Json::array({0, 1});
  EXPECT_EQ(format_error_key([&] { io::geometry_from_json(j); }), "base_position_m");
}

TEST(GeometryFile, InvalidValuesRejected) {
  Json j = io::geometry_to_json(default_geometry());
  j["alpha"] = 0.0;
  EXPECT_THROW(io::geometry_from_json(j), Error);
  EXPECT_THROW(io::parse_json_text("{ not json", "x"), FormatError);
}

TEST(SurfaceFile, RoundTripAllTypes) {
  HeightField h;
  h.origin = {-0.1, 0.2};
  h.cell = 0.01;
  h.cols = 3;
  h.rows = 2;
  h.heights = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}};
  const std::vector<ProxySurface> surfaces = {
      HorizontalPlane{0.98488},
      PlaneSet{{plane_through(Vec3::UnitZ(), {0, 0, 0.1}), plane_through(Vec3(-1, 0, 0), {0.3, 0, 0})}}, h, m};
  for (const auto& s : surfaces) {
    const auto text = io::surface_to_json(s).dump();
    const auto back = io::surface_from_json(io::parse_json_text(text, "t"));
    EXPECT_EQ(back, s);
    EXPECT_EQ(io::surface_to_json(back).dump(), text);
  }
}

TEST(SurfaceFile, Rejections) {
  EXPECT_EQ(format_error_key([] { io::surface_from_json(Json{{"type", "sphere"}}); }), "type");
  EXPECT_EQ(format_error_key([] { io::surface_from_json(Json{{"type", "plane"}, {"height", 1.0}}); }), "height_m");
  Json bad = io::surface_to_json(PlaneSet{{Plane{Vec3(0, 0, 2), 0.0}}});
  EXPECT_THROW(io::surface_from_json(bad), FormatError);
}

TEST(SceneFile, RoundTripWithAndWithoutGeometry) {
  const Scene s = study_scene(kHighTableHeight);
  for (const bool embed : {true, false}) {
    const auto g = embed ? std::optional<LinkageGeometry>(study_geometry()) : std::nullopt;
    const auto text = io::scene_to_json(s, g).dump();
    const auto back = io::scene_from_json(io::parse_json_text(text, "t"), study_geometry());
    EXPECT_EQ(back.scene, s);
    EXPECT_EQ(back.geometry, g);
    EXPECT_EQ(io::scene_to_json(back.scene, back.geometry).dump(), text);
  }
}

TEST(SceneFile, TableOutsideVerticalSpanRejected) {
  Json j = io::scene_to_json(study_scene(kLowTableHeight), study_geometry());
  j["table"]["height_m"] = 3.0;
  EXPECT_EQ(format_error_key([&] { io::scene_from_json(j, study_geometry()); }), "table");
  j = io::scene_to_json(study_scene(kLowTableHeight), study_geometry());
  j["table"]["colour"] = "oak";
  EXPECT_EQ(format_error_key([&] { io::scene_from_json(j, study_geometry()); }), "table.colour");
}

TEST(SceneFile, BundledFilesMatchStudyDefinitions) {
  EXPECT_EQ(io::load_geometry(data_file("geometry_default.json")), default_geometry());
  EXPECT_EQ(io::load_geometry(data_file("geometry_study.json")), study_geometry());
  for (const auto& [name, h] : {std::pair{"scene_table_093.json", kLowTableHeight}, {"scene_table_125.json", kHighTableHeight}}) {
    const auto file = io::load_scene(data_file(name), default_geometry());
    EXPECT_EQ(file.scene, study_scene(h));
    EXPECT_EQ(file.geometry, study_geometry());
  }
}

TEST(TrajectoryCsv, RoundTripExact) {
  std::vector<HandSample> traj = {{0.0, {0.1, 0.2, 0.3}}, {0.01, {1.0 / 3.0, -2e-17, 0.93}}, {0.02, {5, 6, 7}}};
  const auto text = io::trajectory_to_csv(traj);
  EXPECT_EQ(text.substr(0, text.find('\n')), "t_s,x_m,y_m,z_m");
  EXPECT_EQ(io::trajectory_from_csv(text), traj);

  traj[1].handle_pitch = 0.25;
  traj[2].handle_yaw = -1.0 / 7.0;
  const auto text6 = io::trajectory_to_csv(traj);
  EXPECT_EQ(text6.substr(0, text6.find('\n')), "t_s,x_m,y_m,z_m,pitch_rad,yaw_rad");
  EXPECT_EQ(io::trajectory_from_csv(text6), traj);
  EXPECT_EQ(io::trajectory_to_csv(io::trajectory_from_csv(text6)), text6);
}

TEST(TrajectoryCsv, Rejections) {
  EXPECT_THROW(io::trajectory_from_csv(""), FormatError);
  EXPECT_THROW(io::trajectory_from_csv("time,x,y,z\n0,0,0,0\n"), FormatError);
  EXPECT_THROW(io::trajectory_from_csv("t_s,x_m,y_m,z_m\n0,0,0\n"), FormatError);
  EXPECT_THROW(io::trajectory_from_csv("t_s,x_m,y_m,z_m\n0,0,abc,0\n"), FormatError);
  EXPECT_THROW(io::trajectory_from_csv("t_s,x_m,y_m,z_m\n0,0,0,0\n0,1,1,1\n"), StateError);
  EXPECT_THROW(io::trajectory_from_csv("t_s,x_m,y_m,z_m\n1,0,0,0\n0.5,1,1,1\n"), StateError);
  EXPECT_NO_THROW(io::trajectory_from_csv("t_s,x_m,y_m,z_m\r\n0,0,0,0\r\n1,1,1,1\r\n"));
}

TEST(WorkspaceFile, RoundTrip) {
  WorkspaceReport w{0.342, 0.722, 2.33, 2.31, 100000, 0.0154};
  const auto text = io::workspace_to_json(w).dump();
  const auto back = io::workspace_from_json(io::parse_json_text(text, "t"));
  EXPECT_EQ(io::workspace_to_json(back).dump(), text);
  EXPECT_EQ(io::points_to_csv({{1, 2, 3}}), "x_m,y_m,z_m\n1,2,3\n");
}

TEST(ResultFile, RecordsAndMetrics) {
  const auto g = study_geometry();
  const Scene s = study_scene(kLowTableHeight);
  const auto res = run(s, g, {{0.0, tile_center(s, 0, 0)}, {0.02, tile_center(s, 0, 1)}});
  const Json j = io::result_to_json(res);
  EXPECT_EQ(j["records"].size(), res.records.size());
  EXPECT_EQ(j["metrics"]["tiles_total"], 100);
  EXPECT_FALSE(io::result_to_json(res, false).contains("records"));
  const auto& rec = j["records"][0];
  for (const char* key : {"t_s", "raw_target_m", "resolved_interface_m", "joint_state", "constraint_node_m", "contact",
                          "actuator", "tiles_remaining", "hand_weight_force_n", "rendered_plane_speed_mps"})
    EXPECT_TRUE(rec.contains(key)) << key;
}

TEST(Files, ReadWrite) {
  const auto path = (std::filesystem::temp_directory_path() / "pantosim_io_test.txt").string();
  io::write_text_file(path, "abc\n");
  EXPECT_EQ(io::read_text_file(path), "abc\n");
  std::filesystem::remove(path);
  EXPECT_THROW(io::read_text_file(path), FormatError);
}

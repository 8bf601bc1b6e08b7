// Text file formats: JSON geometry, surface, scene, workspace and result files; CSV trajectories.
//
// Every JSON object is read strictly: unknown keys are rejected and every
// diagnostic names the offending key. Writers emit "format_version": 1.
#pragma once

#include "pantosim/constraint.hpp"
#include "pantosim/core.hpp"
#include "pantosim/geometry.hpp"
#include "pantosim/scene.hpp"
#include "pantosim/session.hpp"
#include "pantosim/surface.hpp"
#include "pantosim/workspace.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace pantosim::io {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// Strict reader over one JSON object; `finish()` rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw FormatError(context_, "expected a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw FormatError(path(key), "missing required key");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number()) throw FormatError(path(key), "expected a number");
    return v.get<double>();
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  int integer(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number_integer()) throw FormatError(path(key), "expected an integer");
    return v.get<int>();
  }

  std::string string(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_string()) throw FormatError(path(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::size_t> size = std::nullopt) {
    return number_array(raw(key), path(key), size);
  }

  Vec3 vec3(const std::string& key) {
    const auto v = numbers(key, 3);
    return {v[0], v[1], v[2]};
  }

  void version() {
    if (!has("format_version")) return;
    if (integer("format_version") != kFormatVersion) throw FormatError(path("format_version"), "unsupported version");
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw FormatError(path(item.key()), "unknown key");
  }

  std::string path(const std::string& key) const { return context_.empty() ? key : context_ + "." + key; }

  static std::vector<double> number_array(const Json& v, const std::string& where,
                                          std::optional<std::size_t> size = std::nullopt) {
    if (!v.is_array()) throw FormatError(where, "expected an array");
    if (size && v.size() != *size) throw FormatError(where, "expected " + std::to_string(*size) + " elements");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
      if (!e.is_number()) throw FormatError(where, "expected numeric elements");
      out.push_back(e.get<double>());
    }
    return out;
  }

 private:
  const Json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

inline Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError("", what + ": malformed JSON: " + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("", "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("", "cannot write '" + path + "'");
  out << text;
  if (!out) throw FormatError("", "write failed for '" + path + "'");
}

// ---- geometry ----

inline Json geometry_to_json(const LinkageGeometry& g) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["alpha"] = g.alpha;
  j["l1_m"] = g.l1;
  j["l2_m"] = g.l2;
  j["azimuth_limit_rad"] = g.azimuth_limit;
  j["elevation_min_rad"] = g.elevation_min;
  j["elevation_max_rad"] = g.elevation_max;
  j["elbow_min_rad"] = g.elbow_min;
  j["elbow_max_rad"] = g.elbow_max;
  j["base_position_m"] = vec_json(g.base_position);
  return j;
}

inline LinkageGeometry geometry_from_json(const Json& j, const std::string& context = "") {
  ObjectReader r(j, context);
  r.version();
  LinkageGeometry g;
  g.alpha = r.number("alpha");
  g.l1 = r.number("l1_m");
  g.l2 = r.number("l2_m");
  g.azimuth_limit = r.number("azimuth_limit_rad");
  g.elevation_min = r.number("elevation_min_rad");
  g.elevation_max = r.number("elevation_max_rad");
  g.elbow_min = r.number("elbow_min_rad");
  g.elbow_max = r.number("elbow_max_rad");
  g.base_position = r.vec3("base_position_m");
  r.finish();
  validate(g);
  return g;
}

inline LinkageGeometry load_geometry(const std::string& path) {
  return geometry_from_json(parse_json_text(read_text_file(path), path));
}

// ---- surfaces ----

inline Json surface_to_json(const ProxySurface& s) {
  Json j;
  j["format_version"] = kFormatVersion;
  std::visit(Overloaded{
                 [&](const HorizontalPlane& p) {
                   j["type"] = "plane";
                   j["height_m"] = p.height;
                 },
                 [&](const PlaneSet& set) {
                   j["type"] = "plane_set";
                   Json planes = Json::array();
                   for (const auto& p : set.planes) planes.push_back({{"normal", vec_json(p.normal)}, {"offset_m", p.offset}});
                   j["planes"] = planes;
                 },
                 [&](const HeightField& h) {
                   j["type"] = "heightfield";
                   j["origin_m"] = Json::array({h.origin.x(), h.origin.y()});
                   j["cell_m"] = h.cell;
                   j["cols"] = h.cols;
                   j["rows"] = h.rows;
                   j["heights_m"] = h.heights;
                 },
                 [&](const TriMesh& m) {
                   j["type"] = "trimesh";
                   Json verts = Json::array();
                   for (const auto& v : m.vertices) verts.push_back(vec_json(v));
                   j["vertices_m"] = verts;
                   Json tris = Json::array();
                   for (const auto& t : m.triangles) tris.push_back(Json::array({t[0], t[1], t[2]}));
                   j["triangles"] = tris;
                 },
             },
             s);
  return j;
}

inline ProxySurface surface_from_json(const Json& j, const std::string& context = "") {
  ObjectReader r(j, context);
  r.version();
  const std::string type = r.string("type");
  ProxySurface out;
  if (type == "plane") {
    out = HorizontalPlane{r.number("height_m")};
  } else if (type == "plane_set") {
    PlaneSet set;
    const Json& planes = r.raw("planes");
    if (!planes.is_array()) throw FormatError(r.path("planes"), "expected an array");
    for (std::size_t i = 0; i < planes.size(); ++i) {
      ObjectReader pr(planes[i], r.path("planes[" + std::to_string(i) + "]"));
      set.planes.push_back({pr.vec3("normal"), pr.number("offset_m")});
      pr.finish();
    }
    out = set;
  } else if (type == "heightfield") {
    HeightField h;
    const auto origin = r.numbers("origin_m", 2);
    h.origin = {origin[0], origin[1]};
    h.cell = r.number("cell_m");
    h.cols = r.integer("cols");
    h.rows = r.integer("rows");
    h.heights = r.numbers("heights_m");
    out = h;
  } else if (type == "trimesh") {
    TriMesh m;
    const Json& verts = r.raw("vertices_m");
    if (!verts.is_array()) throw FormatError(r.path("vertices_m"), "expected an array");
    for (const auto& v : verts) {
      const auto p = ObjectReader::number_array(v, r.path("vertices_m"), 3);
      m.vertices.emplace_back(p[0], p[1], p[2]);
    }
    const Json& tris = r.raw("triangles");
    if (!tris.is_array()) throw FormatError(r.path("triangles"), "expected an array");
    for (const auto& t : tris) {
      if (!t.is_array() || t.size() != 3) throw FormatError(r.path("triangles"), "expected index triples");
      std::array<int, 3> tri{};
      for (int k = 0; k < 3; ++k) {
        if (!t[static_cast<std::size_t>(k)].is_number_integer())
          throw FormatError(r.path("triangles"), "expected integer indices");
        tri[static_cast<std::size_t>(k)] = t[static_cast<std::size_t>(k)].get<int>();
      }
      m.triangles.push_back(tri);
    }
    out = m;
  } else {
    throw FormatError(r.path("type"), "unknown surface type '" + type + "'");
  }
  r.finish();
  try {
    validate(out);
  } catch (const InvalidArgument& e) {
    throw FormatError(r.path("type"), e.what());
  }
  return out;
}

// ---- scenes ----

/// A scene file: the scene plus the geometry it embeds, if any.
struct SceneFile {
  Scene scene;
  std::optional<LinkageGeometry> geometry;
};

inline Json scene_to_json(const Scene& s, const std::optional<LinkageGeometry>& g = std::nullopt) {
  Json j;
  j["format_version"] = kFormatVersion;
  if (g) {
    Json gj = geometry_to_json(*g);
    gj.erase("format_version");
    j["geometry"] = gj;
  }
  j["table"] = {{"center_m", Json::array({s.table.center.x(), s.table.center.y()})},
                {"height_m", s.table.height},
                {"size_x_m", s.table.size_x},
                {"size_y_m", s.table.size_y},
                {"yaw_rad", s.table.yaw}};
  j["tiles"] = {{"rows", s.tiles.rows}, {"cols", s.tiles.cols}};
  j["footprint_radius_m"] = s.footprint_radius;
  j["actuator"] = {{"kp_per_s", s.actuator.kp},
                   {"v_up_mps", s.actuator.v_up_max},
                   {"v_down_mps", s.actuator.v_down_max},
                   {"initial_height_m", s.actuator.height}};
  return j;
}

/// `fallback` supplies the geometry when the file embeds none.
inline SceneFile scene_from_json(const Json& j, const LinkageGeometry& fallback) {
  ObjectReader r(j, "");
  r.version();
  SceneFile out;
  if (r.has("geometry")) out.geometry = geometry_from_json(r.raw("geometry"), "geometry");
  const LinkageGeometry& g = out.geometry ? *out.geometry : fallback;

  Table table;
  {
    ObjectReader t(r.raw("table"), "table");
    const auto c = t.numbers("center_m", 2);
    table.center = {c[0], c[1]};
    table.height = t.number("height_m");
    table.size_x = t.optional_number("size_x_m").value_or(0.6);
    table.size_y = t.optional_number("size_y_m").value_or(0.3);
    table.yaw = t.optional_number("yaw_rad").value_or(0.0);
    t.finish();
  }
  int rows = 10, cols = 10;
  if (r.has("tiles")) {
    ObjectReader t(r.raw("tiles"), "tiles");
    rows = t.integer("rows");
    cols = t.integer("cols");
    t.finish();
  }
  const double footprint = r.optional_number("footprint_radius_m").value_or(0.01);
  ActuatorState act;
  std::optional<double> initial_height;
  if (r.has("actuator")) {
    ObjectReader a(r.raw("actuator"), "actuator");
    act.kp = a.optional_number("kp_per_s").value_or(kDefaultGain);
    act.v_up_max = a.optional_number("v_up_mps").value_or(kDefaultUpSpeed);
    act.v_down_max = a.optional_number("v_down_mps").value_or(kDefaultDownSpeed);
    initial_height = a.optional_number("initial_height_m");
    a.finish();
  }
  r.finish();

  try {
    out.scene = make_scene(table, g, rows, cols, act);
  } catch (const InvalidArgument& e) {
    throw FormatError("table", e.what());
  }
  if (!(footprint > 0.0)) throw FormatError("footprint_radius_m", "must be positive");
  out.scene.footprint_radius = footprint;
  if (initial_height) out.scene.actuator.height = *initial_height;
  return out;
}

inline SceneFile load_scene(const std::string& path, const LinkageGeometry& fallback) {
  return scene_from_json(parse_json_text(read_text_file(path), path), fallback);
}

// ---- trajectories ----

inline constexpr std::string_view kTrajectoryHeader = "t_s,x_m,y_m,z_m";
inline constexpr std::string_view kTrajectoryHeaderWithHandle = "t_s,x_m,y_m,z_m,pitch_rad,yaw_rad";

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline std::string trajectory_to_csv(const std::vector<HandSample>& traj) {
  bool handle = false;
  for (const auto& s : traj) handle = handle || s.handle_pitch != 0.0 || s.handle_yaw != 0.0;
  std::string out(handle ? kTrajectoryHeaderWithHandle : kTrajectoryHeader);
  out += '\n';
  for (const auto& s : traj) {
    out += format_double(s.t) + ',' + format_double(s.target.x()) + ',' + format_double(s.target.y()) + ',' +
           format_double(s.target.z());
    if (handle) out += ',' + format_double(s.handle_pitch) + ',' + format_double(s.handle_yaw);
    out += '\n';
  }
  return out;
}

/// Throws FormatError for malformed content and StateError for non-increasing timestamps.
inline std::vector<HandSample> trajectory_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto trim = [](std::string& s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  };
  if (!std::getline(in, line)) throw FormatError("header", "empty trajectory file");
  trim(line);
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  std::size_t columns = 0;
  if (line == kTrajectoryHeader) columns = 4;
  else if (line == kTrajectoryHeaderWithHandle) columns = 6;
  else throw FormatError("header", "expected '" + std::string(kTrajectoryHeader) + "[,pitch_rad,yaw_rad]'");

  std::vector<HandSample> traj;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    trim(line);
    if (line.empty()) continue;
    std::vector<double> values;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view field = rest.substr(0, comma);
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw FormatError("line " + std::to_string(line_no), "not a number: '" + std::string(field) + "'");
      values.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (values.size() != columns)
      throw FormatError("line " + std::to_string(line_no), "expected " + std::to_string(columns) + " columns");
    HandSample s{values[0], {values[1], values[2], values[3]}, 0.0, 0.0};
    if (columns == 6) {
      s.handle_pitch = values[4];
      s.handle_yaw = values[5];
    }
    traj.push_back(s);
  }
  check_trajectory(traj);
  return traj;
}

inline std::vector<HandSample> load_trajectory(const std::string& path) {
  return trajectory_from_csv(read_text_file(path));
}

// ---- workspace ----

inline Json workspace_to_json(const WorkspaceReport& w) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["r_min_m"] = w.r_min;
  j["r_max_m"] = w.r_max;
  j["solid_angle_analytic_sr"] = w.solid_angle_analytic;
  j["solid_angle_mc_sr"] = w.solid_angle_mc;
  j["mc_samples"] = w.mc_samples;
  j["mc_stderr_sr"] = w.mc_stderr;
  return j;
}

inline WorkspaceReport workspace_from_json(const Json& j) {
  ObjectReader r(j, "");
  r.version();
  WorkspaceReport w;
  w.r_min = r.number("r_min_m");
  w.r_max = r.number("r_max_m");
  w.solid_angle_analytic = r.number("solid_angle_analytic_sr");
  w.solid_angle_mc = r.number("solid_angle_mc_sr");
  w.mc_samples = static_cast<std::size_t>(r.integer("mc_samples"));
  w.mc_stderr = r.number("mc_stderr_sr");
  r.finish();
  return w;
}

inline std::string points_to_csv(const std::vector<Vec3>& points) {
  std::string out = "x_m,y_m,z_m\n";
  for (const auto& p : points)
    out += format_double(p.x()) + ',' + format_double(p.y()) + ',' + format_double(p.z()) + '\n';
  return out;
}

// ---- telemetry and results ----

inline Json joint_state_to_json(const JointState& q) {
  return {{"theta_rad", q.theta},
          {"a1_rad", q.a1},
          {"a2_rad", q.a2},
          {"handle_pitch_rad", q.handle_pitch},
          {"handle_yaw_rad", q.handle_yaw}};
}

inline Json contact_to_json(const ContactState& c) {
  Json normals = Json::array();
  for (const auto& n : c.active_constraints) normals.push_back(vec_json(n));
  return {{"in_contact", c.in_contact},
          {"active_constraints", normals},
          {"penetration_raw_m", c.penetration_raw},
          {"dof_translational", c.dof_translational},
          {"dof_rotational", c.dof_rotational},
          {"reaction_constraint_n", vec_json(c.reaction_constraint)},
          {"reaction_interface_n", vec_json(c.reaction_interface)}};
}

inline Json actuator_to_json(const ActuatorState& a) {
  return {{"height_m", a.height},
          {"setpoint_m", a.setpoint},
          {"command_speed_mps", a.command_speed},
          {"kp_per_s", a.kp},
          {"v_up_mps", a.v_up_max},
          {"v_down_mps", a.v_down_max},
          {"axial_load_n", a.axial_load}};
}

inline Json record_to_json(const StepRecord& r) {
  return {{"step", r.step},
          {"t_s", r.t},
          {"raw_target_m", vec_json(r.raw_target)},
          {"clamped_target_m", vec_json(r.clamped_target)},
          {"resolved_interface_m", vec_json(r.resolved_interface)},
          {"joint_state", joint_state_to_json(r.joint_state)},
          {"constraint_node_m", vec_json(r.constraint_node)},
          {"contact", contact_to_json(r.contact)},
          {"press_depth_m", r.press_depth},
          {"proxy_height_m", r.proxy_height},
          {"rendered_height_m", r.rendered_height},
          {"actuator", actuator_to_json(r.actuator)},
          {"rendered_plane_speed_mps", r.rendered_plane_speed},
          {"tiles_remaining", r.tiles_remaining},
          {"hand_weight_force_n", vec_json(r.hand_weight_force)}};
}

inline Json metrics_to_json(const SessionMetrics& m) {
  return {{"tiles_total", m.tiles_total},
          {"tiles_erased", m.tiles_erased},
          {"completion_fraction", m.completion_fraction},
          {"max_penetration_m", m.max_penetration},
          {"max_press_depth_m", m.max_press_depth},
          {"contact_events", m.contact_events},
          {"steps", m.steps},
          {"elapsed_s", m.elapsed}};
}

inline Json result_to_json(const SessionResult& r, bool include_records = true) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["metrics"] = metrics_to_json(r.metrics);
  if (include_records) {
    Json records = Json::array();
    for (const auto& rec : r.records) records.push_back(record_to_json(rec));
    j["records"] = std::move(records);
  }
  return j;
}

}  // namespace pantosim::io

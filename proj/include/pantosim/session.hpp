// Discrete-time interaction sessions: hand targets in, resolved linkage and scene state out.
#pragma once

#include "pantosim/actuator.hpp"
#include "pantosim/constraint.hpp"
#include "pantosim/core.hpp"
#include "pantosim/geometry.hpp"
#include "pantosim/kinematics.hpp"
#include "pantosim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace pantosim {

inline constexpr double kDefaultDt = 0.005;      // s
inline constexpr double kHandLoadMass = 0.91;    // kg felt at the handle
inline const Vec3 kHandWeightForce{0.0, 0.0, -kHandLoadMass * kGravity};

struct HandSample {
  double t = 0.0;
  Vec3 target = Vec3::Zero();  // rendered space, world m
  double handle_pitch = 0.0;
  double handle_yaw = 0.0;

  bool operator==(const HandSample&) const = default;
};

struct StepRecord {
  std::size_t step = 0;
  double t = 0.0;
  Vec3 raw_target;
  Vec3 clamped_target;  // raw target pulled into the workspace
  Vec3 resolved_interface;
  JointState joint_state;
  Vec3 constraint_node;
  ContactState contact;
  double press_depth = 0.0;       // raw target depth below the rendered surface, m
  double proxy_height = 0.0;      // plane the step resolved against
  double rendered_height = 0.0;   // same plane at the interface
  ActuatorState actuator;         // after the step
  double rendered_plane_speed = 0.0;
  int tiles_remaining = 0;
  Vec3 hand_weight_force = kHandWeightForce;
};

struct SessionState {
  Scene scene;
  Vec3 constraint_point = Vec3::Zero();  // last resolved constraint-node position
  std::optional<double> last_t;
  bool in_contact = false;
  std::size_t steps = 0;
};

struct StepOutcome {
  SessionState state;
  StepRecord record;
};

/// Hand at rest 10 cm above the table center (pulled into the workspace).
inline SessionState start_session(const Scene& scene, const LinkageGeometry& g) {
  validate(g);
  SessionState st;
  st.scene = scene;
  const Vec3 rest = nearest_in_workspace(g, scene.table.to_world(0.0, 0.0) + Vec3(0.0, 0.0, 0.1));
  st.constraint_point = scale_down(g, rest);
  st.constraint_point.z() = std::max(st.constraint_point.z(), scene.actuator.height);
  return st;
}

namespace detail {

struct HandResolution {
  Vec3 clamped;
  Vec3 constraint_point;
  Vec3 interface_point;
  ContactState contact;
  JointState joint_state;
  Vec3 constraint_node;
};

// Pipeline stages 1-4: clamp, scale down, project, scale up and solve the joints.
inline HandResolution resolve_hand(const SessionState& st, const LinkageGeometry& g, const HandSample& sample) {
  HandResolution out;
  out.clamped = in_workspace(g, sample.target) ? sample.target : nearest_in_workspace(g, sample.target);
  const ProxySurface proxy = proxy_plane(st.scene);

  // A rising plane carries the god-object with it.
  Vec3 current = st.constraint_point;
  current.z() = std::max(current.z(), st.scene.actuator.height);

  ResolvedMotion resolved = resolve_constrained_motion(proxy, current, scale_down(g, out.clamped));
  Vec3 interface_point = scale_up(g, resolved.point);
  // Projection can leave the shell near its rim; alternate back into the intersection.
  for (int i = 0; i < 16 && !in_workspace(g, interface_point); ++i) {
    const Vec3 pulled = scale_down(g, nearest_in_workspace(g, interface_point));
    resolved.point = resolve_constrained_motion(proxy, current, pulled).point;
    interface_point = scale_up(g, resolved.point);
  }
  if (!in_workspace(g, interface_point)) interface_point = nearest_in_workspace(g, interface_point);

  out.contact = resolved.contact;
  if (out.contact.in_contact) out.contact = contact_reaction(out.contact, kHandWeightForce, g);
  out.joint_state = inverse_kinematics(g, interface_point);
  out.joint_state.handle_pitch = sample.handle_pitch;
  out.joint_state.handle_yaw = sample.handle_yaw;
  const LinkagePose pose = forward_kinematics(g, out.joint_state);
  out.interface_point = pose.interface_node;
  out.constraint_node = pose.constraint_node;
  out.constraint_point = resolved.point;
  return out;
}

inline StepRecord make_record(const SessionState& st, const LinkageGeometry& g, const HandSample& sample,
                              const HandResolution& h, double proxy_height) {
  StepRecord rec;
  rec.step = st.steps;
  rec.t = sample.t;
  rec.raw_target = sample.target;
  rec.clamped_target = h.clamped;
  rec.resolved_interface = h.interface_point;
  rec.joint_state = h.joint_state;
  rec.constraint_node = h.constraint_node;
  rec.contact = h.contact;
  rec.press_depth = h.contact.penetration_raw / g.alpha;
  rec.proxy_height = proxy_height;
  rec.rendered_height = scale_up(g, Vec3(0.0, 0.0, proxy_height)).z();
  rec.actuator = st.scene.actuator;
  rec.rendered_plane_speed = rendered_plane_speed(st.scene.actuator, g);
  rec.tiles_remaining = st.scene.tiles.remaining();
  return rec;
}

}  // namespace detail

/// Telemetry for the current state without advancing time (used when a live session opens).
inline StepRecord snapshot(const SessionState& st, const LinkageGeometry& g, const HandSample& sample) {
  const auto h = detail::resolve_hand(st, g, sample);
  return detail::make_record(st, g, sample, h, st.scene.actuator.height);
}

/**
 * One simulation step.
 *
 * Order: clamp the raw target into the workspace, scale it down, resolve it
 * against the proxy plane, scale back up, erase tiles under the footprint
 * while in contact, then advance the screw toward the operator setpoint. The
 * screw never sees the contact state; only the reaction's axial load is
 * recorded on it, and self-locking makes that inert.
 */
inline StepOutcome step(const SessionState& st, const LinkageGeometry& g, const HandSample& sample,
                        double dt = kDefaultDt) {
  if (!(dt > 0.0)) throw InvalidArgument("step needs dt > 0");
  if (st.last_t && !(sample.t > *st.last_t)) throw StateError("non-monotone timestamps");

  const auto h = detail::resolve_hand(st, g, sample);
  const double proxy_height = st.scene.actuator.height;

  StepOutcome out{st, {}};
  SessionState& next = out.state;
  if (h.contact.in_contact) erase_tiles(next.scene, h.interface_point);
  next.scene.actuator = apply_axial_load(next.scene.actuator, h.contact.reaction_constraint.z());
  next.scene.actuator = step_actuator(next.scene.actuator, dt);

  out.record = detail::make_record(next, g, sample, h, proxy_height);
  next.constraint_point = h.constraint_point;
  next.last_t = sample.t;
  next.in_contact = h.contact.in_contact;
  ++next.steps;
  return out;
}

/// Operator setpoint change taking effect at simulated time `t`.
struct SetpointEvent {
  double t = 0.0;
  double world_height = 0.0;
};

struct SessionMetrics {
  int tiles_total = 0;
  int tiles_erased = 0;
  double completion_fraction = 0.0;
  double max_penetration = 0.0;  // resolved interface below the rendered plane, m
  double max_press_depth = 0.0;  // raw hand below the rendered plane, m
  int contact_events = 0;
  std::size_t steps = 0;
  double elapsed = 0.0;  // simulated s
};

struct SessionResult {
  std::vector<StepRecord> records;
  SessionMetrics metrics;
  Scene final_scene;
};

/// Hand sample at time t, linearly interpolated; clamps outside the trajectory span.
inline HandSample interpolate(const std::vector<HandSample>& traj, double t) {
  if (t <= traj.front().t) return {t, traj.front().target, traj.front().handle_pitch, traj.front().handle_yaw};
  if (t >= traj.back().t) return {t, traj.back().target, traj.back().handle_pitch, traj.back().handle_yaw};
  const auto it = std::upper_bound(traj.begin(), traj.end(), t, [](double v, const HandSample& s) { return v < s.t; });
  const HandSample& b = *it;
  const HandSample& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  return {t, a.target + w * (b.target - a.target), a.handle_pitch + w * (b.handle_pitch - a.handle_pitch),
          a.handle_yaw + w * (b.handle_yaw - a.handle_yaw)};
}

inline void check_trajectory(const std::vector<HandSample>& traj) {
  if (traj.empty()) throw InvalidArgument("trajectory is empty");
  for (std::size_t i = 1; i < traj.size(); ++i)
    if (!(traj[i].t > traj[i - 1].t)) throw StateError("non-monotone timestamps at sample " + std::to_string(i));
}

/**
 * Runs a whole trajectory on the fixed step grid t0 + k dt. Deterministic:
 * identical inputs produce bit-identical records.
 */
inline SessionResult run(const Scene& scene, const LinkageGeometry& g, const std::vector<HandSample>& traj,
                         double dt = kDefaultDt, std::vector<SetpointEvent> schedule = {}) {
  if (!(dt > 0.0)) throw InvalidArgument("run needs dt > 0");
  check_trajectory(traj);
  std::stable_sort(schedule.begin(), schedule.end(),
                   [](const SetpointEvent& a, const SetpointEvent& b) { return a.t < b.t; });

  const double t0 = traj.front().t;
  const auto n_steps = static_cast<std::size_t>(std::floor((traj.back().t - t0) / dt + 1e-9)) + 1;
  SessionState st = start_session(scene, g);
  SessionResult result;
  result.records.reserve(n_steps);
  std::size_t next_event = 0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    while (next_event < schedule.size() && schedule[next_event].t <= t) {
      st.scene = set_plane_setpoint(st.scene, g, schedule[next_event].world_height);
      ++next_event;
    }
    const bool was_in_contact = st.in_contact;
    auto out = step(st, g, interpolate(traj, t), dt);
    st = std::move(out.state);

    auto& m = result.metrics;
    const StepRecord& rec = out.record;
    if (rec.contact.in_contact && !was_in_contact) ++m.contact_events;
    m.max_penetration = std::max(m.max_penetration, rec.rendered_height - rec.resolved_interface.z());
    m.max_press_depth = std::max(m.max_press_depth, rec.press_depth);
    result.records.push_back(std::move(out.record));
  }
  auto& m = result.metrics;
  m.tiles_total = st.scene.tiles.count();
  m.tiles_erased = m.tiles_total - st.scene.tiles.remaining();
  m.completion_fraction = static_cast<double>(m.tiles_erased) / m.tiles_total;
  m.max_penetration = std::max(0.0, m.max_penetration);
  m.steps = n_steps;
  m.elapsed = static_cast<double>(n_steps) * dt;
  result.final_scene = st.scene;
  return result;
}

struct RasterOptions {
  double lane_overlap = 0.0;   // fraction of a tile row shared by neighbouring lanes
  double speed = 0.3;          // m/s along the path
  double sample_rate = 100.0;  // Hz
  double press_depth = 0.005;  // m below the table top, so the hand stays in contact
};

/**
 * Boustrophedon wiping path over the table top.
 *
 * Lanes run along the table's local x between the first and last tile-column
 * centers; lane spacing is the tile row pitch times (1 - lane_overlap),
 * rounded down so the first and last lanes sit on the outer row centers.
 * Throws if the lanes cannot bring every tile center within the footprint.
 */
inline std::vector<HandSample> generate_raster_trajectory(const Scene& scene, const RasterOptions& opt = {}) {
  if (!(opt.speed > 0.0)) throw InvalidArgument("raster speed must be positive");
  if (!(opt.sample_rate > 0.0)) throw InvalidArgument("raster sample rate must be positive");
  const double row_pitch = scene.table.size_y / scene.tiles.rows;
  const double lane_pitch = row_pitch * (1.0 - opt.lane_overlap);
  if (scene.tiles.rows <= 0 || !(lane_pitch > 0.0)) throw InvalidArgument("raster has zero lanes");

  const double y_first = -scene.table.size_y / 2.0 + row_pitch / 2.0;
  const double span = row_pitch * (scene.tiles.rows - 1);
  const int lanes = span > 0.0 ? static_cast<int>(std::ceil(span / lane_pitch - 1e-9)) + 1 : 1;
  const double spacing = lanes > 1 ? span / (lanes - 1) : 0.0;
  for (int r = 0; r < scene.tiles.rows; ++r) {
    const double y = y_first + r * row_pitch;
    double nearest = std::numeric_limits<double>::infinity();
    for (int k = 0; k < lanes; ++k) nearest = std::min(nearest, std::abs(y - (y_first + k * spacing)));
    if (nearest > scene.footprint_radius + 1e-12)
      throw InvalidArgument("raster lanes do not cover tile row " + std::to_string(r));
  }

  const double col_pitch = scene.table.size_x / scene.tiles.cols;
  const double x_lo = -scene.table.size_x / 2.0 + col_pitch / 2.0;
  const double x_hi = scene.table.size_x / 2.0 - col_pitch / 2.0;
  std::vector<Vec3> corners;
  for (int k = 0; k < lanes; ++k) {
    const double y = y_first + k * spacing;
    const bool forward = k % 2 == 0;
    corners.push_back(scene.table.to_world(forward ? x_lo : x_hi, y));
    corners.push_back(scene.table.to_world(forward ? x_hi : x_lo, y));
  }
  for (auto& c : corners) c.z() -= opt.press_depth;

  std::vector<double> arc(corners.size(), 0.0);
  for (std::size_t i = 1; i < corners.size(); ++i) arc[i] = arc[i - 1] + (corners[i] - corners[i - 1]).norm();
  const double length = arc.back();
  auto point_at = [&](double s) {
    const auto it = std::upper_bound(arc.begin(), arc.end(), s);
    if (it == arc.end()) return corners.back();
    const auto i = static_cast<std::size_t>(it - arc.begin());
    const double seg = arc[i] - arc[i - 1];
    const double w = seg > 0.0 ? (s - arc[i - 1]) / seg : 0.0;
    return Vec3(corners[i - 1] + w * (corners[i] - corners[i - 1]));
  };

  std::vector<HandSample> traj;
  const double duration = length / opt.speed;
  const auto samples = static_cast<std::size_t>(std::floor(duration * opt.sample_rate + 1e-9));
  for (std::size_t k = 0; k <= samples; ++k) {
    const double t = static_cast<double>(k) / opt.sample_rate;
    traj.push_back({t, point_at(t * opt.speed), 0.0, 0.0});
  }
  if (traj.back().t < duration - 1e-12) traj.push_back({duration, corners.back(), 0.0, 0.0});
  return traj;
}

}  // namespace pantosim

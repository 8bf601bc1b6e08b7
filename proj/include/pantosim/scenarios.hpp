// Built-in wiping-task setup: one device serving a 0.93 m and a 1.25 m table.
#pragma once

#include "pantosim/geometry.hpp"
#include "pantosim/scene.hpp"

namespace pantosim {

inline constexpr double kLowTableHeight = 0.93;
inline constexpr double kHighTableHeight = 1.25;

/// Default linkage with the base raised to 1.09 m, midway between the two study tables,
/// so both table tops fall inside the reachable shell.
inline LinkageGeometry study_geometry() {
  LinkageGeometry g = default_geometry();
  g.base_position = Vec3(0.0, 0.0, 1.09);
  return g;
}

/// 0.6 x 0.3 m table, long side across the device (yaw 90 deg), near edge 0.325 m in front of the base.
inline Table study_table(double height) {
  Table t;
  t.center = {0.475, 0.0};
  t.height = height;
  t.size_x = 0.6;
  t.size_y = 0.3;
  t.yaw = kPi / 2.0;
  return t;
}

inline Scene study_scene(double height) { return make_scene(study_table(height), study_geometry()); }

}  // namespace pantosim

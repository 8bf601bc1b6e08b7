// Height-changing proxy plane: self-locking lead screws under proportional speed control.
#pragma once

#include "pantosim/core.hpp"
#include "pantosim/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace pantosim {

inline constexpr double kDefaultUpSpeed = 0.016;    // m/s
inline constexpr double kDefaultDownSpeed = 0.020;  // m/s
inline constexpr double kDefaultGain = 2.0;         // 1/s
inline constexpr double kMaxSubstep = 1e-3;         // s
/// Residual error below which the nut snaps onto the setpoint.
inline constexpr double kArrivalTolerance = 1e-9;   // m

struct ActuatorState {
  double height = 0.0;         // proxy plane height, m
  double setpoint = 0.0;       // m
  double command_speed = 0.0;  // m/s, + up
  double kp = kDefaultGain;
  double v_up_max = kDefaultUpSpeed;
  double v_down_max = kDefaultDownSpeed;
  double axial_load = 0.0;  // N, recorded only

  bool operator==(const ActuatorState&) const = default;
};

inline void validate(const ActuatorState& st) {
  if (!(st.kp > 0.0)) throw InvalidArgument("actuator kp must be positive");
  if (!(st.v_up_max > 0.0 && st.v_down_max > 0.0)) throw InvalidArgument("actuator speed limits must be positive");
  if (!std::isfinite(st.height) || !std::isfinite(st.setpoint))
    throw InvalidArgument("actuator height and setpoint must be finite");
}

/**
 * Advances the screw by `dt`, sub-stepped to at most 1 ms.
 *
 * Each sub-step commands clamp(kp * error, -v_down_max, v_up_max). A sub-step
 * that would reach or pass the setpoint lands on it exactly, as does one whose
 * residual is below kArrivalTolerance, so the plane never overshoots and
 * arrives in finite time. The axial load plays no part.
 */
inline ActuatorState step_actuator(ActuatorState st, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("actuator step needs dt > 0");
  const auto substeps = std::max<long>(1, static_cast<long>(std::ceil(dt / kMaxSubstep - 1e-9)));
  const double h = dt / static_cast<double>(substeps);
  for (long i = 0; i < substeps; ++i) {
    const double err = st.setpoint - st.height;
    if (err == 0.0) {
      st.command_speed = 0.0;
      continue;
    }
    const double command = std::clamp(st.kp * err, -st.v_down_max, st.v_up_max);
    const double limit = err > 0.0 ? st.v_up_max : st.v_down_max;
    const double reach = std::abs(err);
    if (reach <= std::abs(command) * h || (reach <= kArrivalTolerance && reach <= limit * h)) {
      st.command_speed = err / h;
      st.height = st.setpoint;
    } else {
      st.command_speed = command;
      st.height += command * h;
    }
  }
  return st;
}

/// Self-locking: the load is recorded, the height is untouched.
inline ActuatorState apply_axial_load(ActuatorState st, double force) {
  st.axial_load = force;
  return st;
}

/// Speed of the rendered plane at the interface node.
inline double rendered_plane_speed(const ActuatorState& st, const LinkageGeometry& g) {
  return st.command_speed / g.alpha;
}

}  // namespace pantosim

// Pantograph construction, forward/inverse kinematics and the alpha scaling maps.
#pragma once

#include "pantosim/core.hpp"
#include "pantosim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pantosim {

/// Slack applied to every limit comparison so boundary points survive round-off.
inline constexpr double kLimitTolerance = 1e-9;

struct JointState {
  double theta = 0.0;  // base azimuth
  double a1 = 0.0;     // shoulder, 0 = horizontal radial
  double a2 = 0.0;     // elbow, 0 = straight arm
  double handle_pitch = 0.0;
  double handle_yaw = 0.0;  // roll is locked

  bool operator==(const JointState&) const = default;
};

/// Construction points of the pantograph, world frame.
struct BarPoints {
  Vec3 O;  // base pivot
  Vec3 A;  // elbow joint
  Vec3 E;  // interface node (end of l2)
  Vec3 B;  // on OA at alpha
  Vec3 D;  // on AE at alpha
  Vec3 L;  // constraint node, closes parallelogram B-A-D-L
};

struct LinkagePose {
  Vec3 interface_node;
  Vec3 constraint_node;
  BarPoints bars;
};

/// Position relative to the base in (radius, azimuth, elevation).
struct ShellCoordinates {
  double radius = 0.0;
  double azimuth = 0.0;
  double elevation = 0.0;
};

inline ShellCoordinates shell_coordinates(const LinkageGeometry& g, const Vec3& p) {
  const Vec3 rel = p - g.base_position;
  const double rho = std::hypot(rel.x(), rel.y());
  return {rel.norm(), std::atan2(rel.y(), rel.x()), std::atan2(rel.z(), rho)};
}

/// Elevation of the interface node relative to the shoulder angle, for a given elbow.
inline double elbow_elevation_offset(const LinkageGeometry& g, double a2) {
  return std::atan2(g.l2 * std::sin(a2), g.l1 + g.l2 * std::cos(a2));
}

namespace detail {

inline Vec3 radial_axis(double theta) { return {std::cos(theta), std::sin(theta), 0.0}; }

// Unit vector at `angle` above the radial axis inside the pantograph plane.
inline Vec3 in_plane(double theta, double angle) {
  return std::cos(angle) * radial_axis(theta) + std::sin(angle) * Vec3::UnitZ();
}

inline std::string range_text(double value, double lo, double hi) {
  std::ostringstream os;
  os << value << " not in [" << lo << ", " << hi << "]";
  return os.str();
}

inline void check_joint_limits(const LinkageGeometry& g, const JointState& q) {
  if (std::abs(q.theta) > g.azimuth_limit + kLimitTolerance)
    throw JointLimitError("theta", range_text(q.theta, -g.azimuth_limit, g.azimuth_limit));
  if (q.a2 < g.elbow_min - kLimitTolerance || q.a2 > g.elbow_max + kLimitTolerance)
    throw JointLimitError("a2", range_text(q.a2, g.elbow_min, g.elbow_max));
  const double elevation = q.a1 + elbow_elevation_offset(g, q.a2);
  if (elevation < g.elevation_min - kLimitTolerance || elevation > g.elevation_max + kLimitTolerance)
    throw JointLimitError("a1", "interface elevation " + range_text(elevation, g.elevation_min, g.elevation_max));
}

}  // namespace detail

/// Builds the bar points explicitly; throws JointLimitError on any limit violation.
inline LinkagePose forward_kinematics(const LinkageGeometry& g, const JointState& q) {
  detail::check_joint_limits(g, q);
  BarPoints b;
  b.O = g.base_position;
  b.A = b.O + g.l1 * detail::in_plane(q.theta, q.a1);
  b.E = b.A + g.l2 * detail::in_plane(q.theta, q.a1 + q.a2);
  b.B = b.O + g.alpha * (b.A - b.O);
  b.D = b.A + g.alpha * (b.E - b.A);
  b.L = b.B + g.alpha * (b.E - b.A);
  return {b.E, b.L, b};
}

/// Membership in the reachable shell sector of the interface node.
inline bool in_workspace(const LinkageGeometry& g, const Vec3& p) {
  const auto s = shell_coordinates(g, p);
  return s.radius >= g.r_min() - kLimitTolerance && s.radius <= g.r_max() + kLimitTolerance &&
         std::abs(s.azimuth) <= g.azimuth_limit + kLimitTolerance &&
         s.elevation >= g.elevation_min - kLimitTolerance && s.elevation <= g.elevation_max + kLimitTolerance;
}

/**
 * Euclidean-nearest reachable point.
 *
 * The sector is a cone of directions times a radial interval, so the nearest
 * point lies along the direction of largest cosine to the target. That
 * direction is the target's own when inside, otherwise the best of the two
 * latitude arcs and the two meridian arcs bounding the sector.
 */
inline Vec3 nearest_in_workspace(const LinkageGeometry& g, const Vec3& p) {
  const Vec3 rel = p - g.base_position;
  const double r = rel.norm();
  auto direction = [](double az, double el) {
    return Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
  };
  if (r == 0.0) {
    const double el = std::clamp(0.0, g.elevation_min, g.elevation_max);
    return g.base_position + g.r_min() * direction(0.0, el);
  }
  const Vec3 d = rel / r;
  const auto s = shell_coordinates(g, p);

  Vec3 best;
  if (std::abs(s.azimuth) <= g.azimuth_limit && s.elevation >= g.elevation_min && s.elevation <= g.elevation_max) {
    best = d;
  } else {
    double best_dot = -2.0;
    auto consider = [&](const Vec3& c) {
      const double dot = c.dot(d);
      if (dot > best_dot) {
        best_dot = dot;
        best = c;
      }
    };
    const double az_clamped = std::clamp(s.azimuth, -g.azimuth_limit, g.azimuth_limit);
    consider(direction(az_clamped, g.elevation_min));
    consider(direction(az_clamped, g.elevation_max));
    if (g.azimuth_limit < kPi) {
      for (double az : {-g.azimuth_limit, g.azimuth_limit}) {
        const double along = d.dot(detail::radial_axis(az));
        const double el = std::clamp(std::atan2(d.z(), along), g.elevation_min, g.elevation_max);
        consider(direction(az, el));
      }
    }
  }
  const double radius = std::clamp(r * best.dot(d), g.r_min(), g.r_max());
  return g.base_position + radius * best;
}

/// Elbow-positive closed-form solution; handle angles zeroed.
inline JointState inverse_kinematics(const LinkageGeometry& g, const Vec3& target) {
  if (!in_workspace(g, target)) {
    const auto s = shell_coordinates(g, target);
    std::ostringstream os;
    if (s.radius < g.r_min() - kLimitTolerance || s.radius > g.r_max() + kLimitTolerance)
      os << "radius " << s.radius << " outside [" << g.r_min() << ", " << g.r_max() << "]";
    else if (std::abs(s.azimuth) > g.azimuth_limit + kLimitTolerance)
      os << "azimuth " << s.azimuth << " beyond +-" << g.azimuth_limit;
    else
      os << "elevation " << s.elevation << " outside [" << g.elevation_min << ", " << g.elevation_max << "]";
    throw UnreachableError(os.str(), nearest_in_workspace(g, target));
  }
  const auto s = shell_coordinates(g, target);
  const double cos_elbow =
      std::clamp((s.radius * s.radius - g.l1 * g.l1 - g.l2 * g.l2) / (2.0 * g.l1 * g.l2), -1.0, 1.0);
  JointState q;
  q.a2 = std::clamp(std::acos(cos_elbow), g.elbow_min, g.elbow_max);
  q.theta = std::clamp(s.azimuth, -g.azimuth_limit, g.azimuth_limit);
  q.a1 = s.elevation - elbow_elevation_offset(g, q.a2);
  return q;
}

/// d(interface_node)/d(theta, a1, a2), one column per joint.
inline Mat3 jacobian(const LinkageGeometry& g, const JointState& q) {
  detail::check_joint_limits(g, q);
  const double c1 = std::cos(q.a1), s1 = std::sin(q.a1);
  const double c12 = std::cos(q.a1 + q.a2), s12 = std::sin(q.a1 + q.a2);
  const double rho = g.l1 * c1 + g.l2 * c12;
  const Vec3 u = detail::radial_axis(q.theta);
  const Vec3 tangent(-std::sin(q.theta), std::cos(q.theta), 0.0);
  Mat3 J;
  J.col(0) = rho * tangent;
  J.col(1) = (-g.l1 * s1 - g.l2 * s12) * u + rho * Vec3::UnitZ();
  J.col(2) = -g.l2 * s12 * u + g.l2 * c12 * Vec3::UnitZ();
  return J;
}

/// The constraint node moves alpha times as far for the same joint rates.
inline Mat3 constraint_jacobian(const LinkageGeometry& g, const JointState& q) { return g.alpha * jacobian(g, q); }

/// Rank by singular values relative to the largest one.
inline int numerical_rank(const Mat3& m, double relative_tol = 1e-9) {
  const Eigen::JacobiSVD<Mat3> svd(m);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < 3; ++i)
    if (sv(i) > relative_tol * sv(0)) ++rank;
  return rank;
}

inline Vec3 scale_down(const LinkageGeometry& g, const Vec3& rendered) {
  return g.base_position + g.alpha * (rendered - g.base_position);
}
inline Vec3 scale_up(const LinkageGeometry& g, const Vec3& proxy) {
  return g.base_position + (proxy - g.base_position) / g.alpha;
}

/// Interface velocity -> constraint velocity.
inline Vec3 map_velocity(const LinkageGeometry& g, const Vec3& v_interface) { return g.alpha * v_interface; }
inline Vec3 interface_velocity(const LinkageGeometry& g, const Vec3& v_constraint) {
  return v_constraint / g.alpha;
}

/// Interface force -> constraint force; dual of map_velocity so power is conserved.
inline Vec3 map_force(const LinkageGeometry& g, const Vec3& f_interface) { return f_interface / g.alpha; }
inline Vec3 interface_force(const LinkageGeometry& g, const Vec3& f_constraint) {
  return g.alpha * f_constraint;
}

}  // namespace pantosim

// Static parameters of the 3D pantograph and the closed-form design solve.
#pragma once

#include "pantosim/core.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace pantosim {

/**
 * Static description of the linkage.
 *
 * The pantograph plane rotates about a vertical axis through `base_position`.
 * In that plane the shoulder link (l1) and elbow link (l2) carry the interface
 * node; the constraint node sits on the parallelogram at scale `alpha`.
 * Elevation limits apply to the direction of the interface node as seen from
 * the base, so the reachable set is a spherical-shell sector.
 */
struct LinkageGeometry {
  double alpha = 0.216;
  double l1 = 0.0;
  double l2 = 0.0;
  double azimuth_limit = 0.0;  // half-range of base yaw, rad
  double elevation_min = 0.0;  // rad
  double elevation_max = 0.0;  // rad
  double elbow_min = 0.0;      // rad, 0 = straight arm
  double elbow_max = 0.0;      // rad
  Vec3 base_position = Vec3::Zero();

  /// Interface-node distance from the base for a given elbow angle.
  double reach_at_elbow(double elbow) const {
    return std::sqrt(l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * std::cos(elbow));
  }
  double r_min() const { return reach_at_elbow(elbow_max); }
  double r_max() const { return reach_at_elbow(elbow_min); }

  bool operator==(const LinkageGeometry&) const = default;
};

/// Throws InvalidArgument naming the first violated invariant.
inline void validate(const LinkageGeometry& g) {
  auto fail = [](const std::string& what) { throw InvalidArgument("invalid geometry: " + what); };
  if (!(g.alpha > 0.0 && g.alpha < 1.0)) fail("alpha must lie in (0,1)");
  if (!(g.l2 > 0.0)) fail("l2 must be positive");
  if (!(g.l1 > g.l2)) fail("l1 must exceed l2");
  if (!(g.azimuth_limit > 0.0 && g.azimuth_limit <= kPi)) fail("azimuth_limit must lie in (0,pi]");
  if (!(g.elevation_min < g.elevation_max)) fail("elevation_min must be below elevation_max");
  if (!(g.elevation_min >= -kPi / 2 && g.elevation_max <= kPi / 2))
    fail("elevation limits must lie within [-pi/2, pi/2]");
  if (!(g.elbow_min >= 0.0 && g.elbow_min <= g.elbow_max && g.elbow_max <= kPi))
    fail("elbow limits must satisfy 0 <= elbow_min <= elbow_max <= pi");
  if (!(g.r_min() > 0.0)) fail("r_min must be positive");
  if (!g.base_position.allFinite()) fail("base_position must be finite");
}

/// Analytic solid angle of the direction sector.
inline double sector_solid_angle(double azimuth_limit, double elevation_min, double elevation_max) {
  return 2.0 * azimuth_limit * (std::sin(elevation_max) - std::sin(elevation_min));
}

/**
 * Solve link lengths and a symmetric elevation band from workspace targets.
 *
 * Reach at each elbow limit obeys l1^2 + l2^2 + 2 l1 l2 cos(elbow) = r^2; the
 * straighter limit gives r_max and the more folded one r_min. The band solves
 * 2 azimuth_limit (sin e_max - sin e_min) = solid_angle with e_min = -e_max.
 */
inline LinkageGeometry geometry_from_spec(double r_min, double r_max, double solid_angle, double alpha,
                                          std::pair<double, double> elbow_limits, double azimuth_limit,
                                          Vec3 base_position = Vec3(0.0, 0.0, 1.0)) {
  if (!(r_min > 0.0 && r_min < r_max)) throw InvalidArgument("infeasible requirements: need 0 < r_min < r_max");
  if (!(solid_angle > 0.0)) throw InvalidArgument("infeasible requirements: empty elevation band");
  if (!(azimuth_limit > 0.0 && azimuth_limit <= kPi))
    throw InvalidArgument("infeasible requirements: azimuth_limit must lie in (0,pi]");
  const auto [elbow_lo, elbow_hi] = elbow_limits;
  const double c_straight = std::cos(elbow_lo);
  const double c_folded = std::cos(elbow_hi);
  if (!(c_straight > c_folded))
    throw InvalidArgument("infeasible requirements: elbow limits must satisfy elbow_min < elbow_max within [0,pi]");

  // r_max^2 - r_min^2 = 2 l1 l2 (c_straight - c_folded)
  const double product = (r_max * r_max - r_min * r_min) / (2.0 * (c_straight - c_folded));
  const double sum_sq = r_max * r_max - 2.0 * product * c_straight;
  const double diff_sq = sum_sq - 2.0 * product;
  if (!(product > 0.0 && diff_sq > 0.0)) {
    throw InvalidArgument(
        "infeasible requirements: l1^2 + l2^2 + 2*l1*l2*cos(elbow) = r^2 has no solution with l1 > l2 > 0");
  }
  const double sum = std::sqrt(sum_sq + 2.0 * product);
  const double diff = std::sqrt(diff_sq);

  const double sin_span = solid_angle / (2.0 * azimuth_limit);
  if (sin_span > 2.0) {
    std::ostringstream os;
    os << "infeasible requirements: 2*azimuth_limit*(sin e_max - sin e_min) = solid_angle needs sin-span " << sin_span
       << " > 2";
    throw InvalidArgument(os.str());
  }
  const double e = std::asin(sin_span / 2.0);

  LinkageGeometry g;
  g.alpha = alpha;
  g.l1 = (sum + diff) / 2.0;
  g.l2 = (sum - diff) / 2.0;
  g.azimuth_limit = azimuth_limit;
  g.elevation_min = -e;
  g.elevation_max = e;
  g.elbow_min = elbow_lo;
  g.elbow_max = elbow_hi;
  g.base_position = base_position;
  validate(g);
  return g;
}

/// The built device: 342/722 mm shell, 2.33 sr, alpha 0.216, base 1 m above the floor.
inline LinkageGeometry default_geometry() {
  return geometry_from_spec(0.342, 0.722, 2.33, 0.216, {deg_to_rad(30.0), deg_to_rad(150.0)}, deg_to_rad(60.0));
}

}  // namespace pantosim

// Workspace extent: analytic shell sector plus a Monte Carlo cross-check.
#pragma once

#include "pantosim/geometry.hpp"
#include "pantosim/kinematics.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace pantosim {

struct WorkspaceReport {
  double r_min = 0.0;
  double r_max = 0.0;
  double solid_angle_analytic = 0.0;
  double solid_angle_mc = 0.0;
  std::size_t mc_samples = 0;
  double mc_stderr = 0.0;
};

inline constexpr std::uint64_t kWorkspaceSeed = 0x5eedb0a7ULL;

namespace detail {

// Uniform on the unit sphere: z uniform in [-1,1], azimuth uniform.
struct SphereSampler {
  explicit SphereSampler(std::uint64_t seed) : rng(seed) {}
  std::pair<double, double> next_direction() {
    const double z = unit(rng) * 2.0 - 1.0;
    const double az = (unit(rng) * 2.0 - 1.0) * kPi;
    return {az, std::asin(z)};
  }
  std::mt19937_64 rng;
  std::uniform_real_distribution<double> unit{0.0, 1.0};
};

inline bool direction_in_sector(const LinkageGeometry& g, double az, double el) {
  return std::abs(az) <= g.azimuth_limit && el >= g.elevation_min && el <= g.elevation_max;
}

}  // namespace detail

/// Throws InvalidArgument for fewer than 1000 samples.
inline WorkspaceReport workspace_report(const LinkageGeometry& g, std::size_t samples,
                                        std::uint64_t seed = kWorkspaceSeed) {
  validate(g);
  if (samples < 1000) throw InvalidArgument("workspace_report needs at least 1000 samples");
  WorkspaceReport rep;
  rep.r_min = g.r_min();
  rep.r_max = g.r_max();
  rep.solid_angle_analytic = sector_solid_angle(g.azimuth_limit, g.elevation_min, g.elevation_max);

  detail::SphereSampler sampler(seed);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto [az, el] = sampler.next_direction();
    if (detail::direction_in_sector(g, az, el)) ++hits;
  }
  const double n = static_cast<double>(samples);
  const double p = static_cast<double>(hits) / n;
  rep.mc_samples = samples;
  rep.solid_angle_mc = 4.0 * kPi * p;
  rep.mc_stderr = 4.0 * kPi * std::sqrt(p * (1.0 - p) / n);
  return rep;
}

/// Reachable interface-node positions, uniform in volume over the sector. For export and plotting.
inline std::vector<Vec3> sample_reachable_points(const LinkageGeometry& g, std::size_t count,
                                                 std::uint64_t seed = kWorkspaceSeed) {
  detail::SphereSampler sampler(seed);
  std::vector<Vec3> out;
  out.reserve(count);
  const double r0 = std::pow(g.r_min(), 3), r1 = std::pow(g.r_max(), 3);
  const double sector = sector_solid_angle(g.azimuth_limit, g.elevation_min, g.elevation_max);
  if (sector <= 0.0) return out;
  while (out.size() < count) {
    const auto [az, el] = sampler.next_direction();
    const double r = std::cbrt(r0 + sampler.unit(sampler.rng) * (r1 - r0));
    if (!detail::direction_in_sector(g, az, el)) continue;
    out.push_back(g.base_position + r * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)));
  }
  return out;
}

}  // namespace pantosim

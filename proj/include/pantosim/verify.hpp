// Self-checks over a geometry: pantograph identity, bar rigidity, FK/IK,
// Jacobian, power balance and screw self-locking.
#pragma once

#include "pantosim/actuator.hpp"
#include "pantosim/geometry.hpp"
#include "pantosim/kinematics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace pantosim::verify {

inline constexpr std::uint64_t kVerifySeed = 0x70a7061aULL;

enum class Fault {
  none,
  bar_length,  // expected |AD| off by 1 um: bar-rigidity must fail
};

struct Options {
  std::size_t joint_samples = 10'000;
  std::size_t point_samples = 1'000;
  std::size_t locking_steps = 10'000;
  std::uint64_t seed = kVerifySeed;
  Fault fault = Fault::none;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;  // largest observed error
  double tolerance = 0.0;
  std::string detail;
};

struct Report {
  std::vector<CheckResult> checks;
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

inline CheckResult make_check(std::string name, double worst, double tolerance, std::string detail = {}) {
  return {std::move(name), worst <= tolerance, worst, tolerance, std::move(detail)};
}

/// Uniform joint state whose interface elevation lies inside the limits shrunk by `margin`.
inline JointState random_joint_state(const LinkageGeometry& g, std::mt19937_64& rng, double margin = 0.0) {
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  JointState q;
  q.theta = uni(-g.azimuth_limit + margin, g.azimuth_limit - margin);
  q.a2 = uni(g.elbow_min + margin, g.elbow_max - margin);
  q.a1 = uni(g.elevation_min + margin, g.elevation_max - margin) - elbow_elevation_offset(g, q.a2);
  return q;
}

/// Uniform in (radius, azimuth, elevation) over the reachable shell sector.
inline Vec3 random_workspace_point(const LinkageGeometry& g, std::mt19937_64& rng) {
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const double r = uni(g.r_min(), g.r_max());
  const double az = uni(-g.azimuth_limit, g.azimuth_limit);
  const double el = uni(g.elevation_min, g.elevation_max);
  return g.base_position + r * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
}

/// Constraint node from explicit bar points against base + alpha (interface - base).
inline CheckResult check_pantograph_identity(const LinkageGeometry& g, const Options& opt) {
  std::mt19937_64 rng(opt.seed);
  double worst = 0.0;
  for (std::size_t i = 0; i < opt.joint_samples; ++i) {
    const BarPoints b = forward_kinematics(g, random_joint_state(g, rng)).bars;
    worst = std::max(worst, (b.L - (b.O + g.alpha * (b.E - b.O))).norm());
  }
  return make_check("pantograph-identity", worst, 1e-12, "|L - (O + alpha (E - O))| over random joint states");
}

inline CheckResult check_bar_rigidity(const LinkageGeometry& g, const Options& opt) {
  std::mt19937_64 rng(opt.seed + 1);
  const double ad_nominal = g.alpha * g.l2 + (opt.fault == Fault::bar_length ? 1e-6 : 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < opt.joint_samples; ++i) {
    const BarPoints b = forward_kinematics(g, random_joint_state(g, rng)).bars;
    const std::array<double, 6> err = {
        std::abs((b.A - b.O).norm() - g.l1),
        std::abs((b.E - b.A).norm() - g.l2),
        std::abs((b.A - b.B).norm() - (1.0 - g.alpha) * g.l1),
        std::abs((b.D - b.A).norm() - ad_nominal),
        std::abs((b.L - b.D).norm() - (1.0 - g.alpha) * g.l1),
        std::abs((b.L - b.B).norm() - g.alpha * g.l2),
    };
    worst = std::max(worst, *std::max_element(err.begin(), err.end()));
  }
  return make_check("bar-rigidity", worst, 1e-12, "bar lengths OA, AE, BA, AD, DL, LB vs nominal");
}

inline CheckResult check_fk_ik(const LinkageGeometry& g, const Options& opt) {
  std::mt19937_64 rng(opt.seed + 2);
  double worst = 0.0;
  for (std::size_t i = 0; i < opt.point_samples; ++i) {
    const Vec3 p = random_workspace_point(g, rng);
    const Vec3 back = forward_kinematics(g, inverse_kinematics(g, p)).interface_node;
    worst = std::max(worst, (back - p).norm());
  }
  return make_check("fk-ik", worst, 1e-9, "|FK(IK(p)) - p| over random workspace points");
}

/// Analytic Jacobian against central differences of FK.
inline CheckResult check_jacobian(const LinkageGeometry& g, const Options& opt) {
  constexpr double h = 1e-6;
  std::mt19937_64 rng(opt.seed + 3);
  double worst = 0.0;
  for (std::size_t i = 0; i < opt.point_samples; ++i) {
    const JointState q = random_joint_state(g, rng, 1e-4);
    const Mat3 J = jacobian(g, q);
    for (int c = 0; c < 3; ++c) {
      JointState qp = q, qm = q;
      double* fields_p[] = {&qp.theta, &qp.a1, &qp.a2};
      double* fields_m[] = {&qm.theta, &qm.a1, &qm.a2};
      *fields_p[c] += h;
      *fields_m[c] -= h;
      const Vec3 fd = (forward_kinematics(g, qp).interface_node - forward_kinematics(g, qm).interface_node) / (2.0 * h);
      worst = std::max(worst, (fd - J.col(c)).cwiseAbs().maxCoeff());
    }
  }
  return make_check("jacobian", worst, 1e-6, "max |J - central difference| entrywise");
}

/// f_i . v_i against f_c . v_c for random joint rates and interface forces.
inline CheckResult check_power_balance(const LinkageGeometry& g, const Options& opt) {
  std::mt19937_64 rng(opt.seed + 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < opt.joint_samples; ++i) {
    const JointState q = random_joint_state(g, rng);
    const Vec3 qd(u(rng), u(rng), u(rng));
    const Vec3 f_i = 100.0 * Vec3(u(rng), u(rng), u(rng));
    const Vec3 v_i = jacobian(g, q) * qd;
    const Vec3 v_c = constraint_jacobian(g, q) * qd;
    const Vec3 f_c = map_force(g, f_i);
    const double scale = f_i.norm() * v_i.norm();
    if (scale == 0.0) continue;
    worst = std::max(worst, std::abs(f_i.dot(v_i) - f_c.dot(v_c)) / scale);
  }
  return make_check("power-balance", worst, 1e-12, "relative |f_i.v_i - f_c.v_c|");
}

/**
 * Screw under 300 N with zero command must hold exactly; under a setpoint the
 * P loop must approach monotonically within the speed limits, and a loaded
 * run must match an unloaded one bit for bit.
 */
inline CheckResult check_self_locking(const Options& opt) {
  constexpr double dt = 0.005;
  std::ostringstream why;
  double worst = 0.0;

  ActuatorState held;
  held.height = held.setpoint = 0.1;
  const double start = held.height;
  for (std::size_t i = 0; i < opt.locking_steps; ++i) {
    held = step_actuator(apply_axial_load(held, 300.0), dt);
    worst = std::max(worst, std::abs(held.height - start));
  }
  if (worst != 0.0) why << "held height drifted by " << worst << " m; ";

  bool ok = worst == 0.0;
  for (const double target : {0.25, -0.07, 0.1 + 1e-7}) {
    ActuatorState loaded, free;
    loaded.height = loaded.setpoint = free.height = free.setpoint = 0.1;
    loaded.setpoint = free.setpoint = target;
    double prev_gap = std::abs(target - loaded.height);
    for (std::size_t i = 0; i < opt.locking_steps; ++i) {
      const double before = loaded.height;
      loaded = step_actuator(apply_axial_load(loaded, 300.0), dt);
      free = step_actuator(free, dt);
      const double gap = std::abs(target - loaded.height);
      const double dh = loaded.height - before;  // few-ulp slack on the displacement
      if (gap > prev_gap || dh > loaded.v_up_max * dt + 1e-15 || -dh > loaded.v_down_max * dt + 1e-15) {
        ok = false;
        why << "non-monotone or over-speed approach to " << target << "; ";
        break;
      }
      if (loaded.height != free.height || loaded.command_speed != free.command_speed) {
        ok = false;
        why << "load changed the trajectory toward " << target << "; ";
        break;
      }
      prev_gap = gap;
    }
    if (loaded.height != target) {
      ok = false;
      why << "did not reach " << target << "; ";
    }
  }
  CheckResult r{"self-locking", ok, worst, 0.0, why.str()};
  if (r.detail.empty()) r.detail = "zero drift under 300 N, monotone bounded approach, load-invariant";
  return r;
}

inline Report run_all(const LinkageGeometry& g, const Options& opt = {}) {
  validate(g);
  Report rep;
  rep.checks.push_back(check_pantograph_identity(g, opt));
  rep.checks.push_back(check_bar_rigidity(g, opt));
  rep.checks.push_back(check_fk_ik(g, opt));
  rep.checks.push_back(check_jacobian(g, opt));
  rep.checks.push_back(check_power_balance(g, opt));
  rep.checks.push_back(check_self_locking(opt));
  return rep;
}

}  // namespace pantosim::verify

#include "oracles.hpp"

#include "pantosim/actuator.hpp"
#include "pantosim/geometry.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pantosim;

namespace {

ActuatorState at(double height, double setpoint, double kp = kDefaultGain) {
  ActuatorState st;
  st.height = height;
  st.setpoint = setpoint;
  st.kp = kp;
  return st;
}

}  // namespace

TEST(Actuator, ClampedRise) {
  const auto st = step_actuator(at(0.0, 0.05), 0.1);
  EXPECT_EQ(st.command_speed, kDefaultUpSpeed);
  EXPECT_NEAR(st.height, 0.0016, 1e-15);
}

TEST(Actuator, Converged) {
  const auto st = step_actuator(at(0.05, 0.05), 0.1);
  EXPECT_EQ(st.command_speed, 0.0);
  EXPECT_EQ(st.height, 0.05);
}

TEST(Actuator, ArrivalSnapWithoutOvershoot) {
  const auto st = step_actuator(at(0.0, -0.001, 100.0), 1.0);
  EXPECT_EQ(st.height, -0.001);
  // Fine-step integration without the arrival rule lands on the same point.
  const double ref = oracle::integrate_actuator(0.0, -0.001, 100.0, kDefaultUpSpeed, kDefaultDownSpeed, 1.0);
  EXPECT_NEAR(st.height, ref, 1e-9);
  EXPECT_GE(ref, -0.001 - 1e-15);
}

TEST(Actuator, MatchesFineStepOracleMidFlight) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int i = 0; i < 20; ++i) {
    const double sp = u(rng);
    ActuatorState st = at(0.0, sp);
    double t = 0;
    for (int k = 0; k < 40; ++k) {
      st = step_actuator(st, 0.025);
      t += 0.025;
    }
    // The 1 ms explicit scheme differs from the fine one by O(kp h) in the exponential tail.
    const double ref = oracle::integrate_actuator(0.0, sp, kDefaultGain, kDefaultUpSpeed, kDefaultDownSpeed, t);
    EXPECT_NEAR(st.height, ref, 1e-5);
  }
}

TEST(Actuator, MonotoneBoundedConvergence) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  std::uniform_real_distribution<double> dts(0.0005, 0.05);
  for (int trial = 0; trial < 50; ++trial) {
    ActuatorState st = at(u(rng), u(rng), 0.5 + 10 * std::abs(u(rng)));
    double gap = std::abs(st.setpoint - st.height);
    int steps = 0;
    while (st.height != st.setpoint) {
      const double dt = dts(rng);
      const double before = st.height;
      st = step_actuator(st, dt);
      // Displacement, not a differenced speed: a few ulps of height slack.
      const double dh = st.height - before;
      EXPECT_LE(dh, st.v_up_max * dt + 1e-15);
      EXPECT_GE(dh, -st.v_down_max * dt - 1e-15);
      EXPECT_LE(std::abs(st.setpoint - st.height), gap);
      EXPECT_LE(st.command_speed, st.v_up_max + 1e-15);
      EXPECT_GE(st.command_speed, -st.v_down_max - 1e-15);
      gap = std::abs(st.setpoint - st.height);
      ASSERT_LT(++steps, 200000);
    }
  }
}

TEST(Actuator, SelfLockingUnderLoad) {
  ActuatorState st = at(0.3, 0.3);
  const double start = st.height;
  st = apply_axial_load(st, 300.0);
  for (int i = 0; i < 2000; ++i) st = step_actuator(st, 0.005);  // 10 s
  EXPECT_EQ(st.height, start);
  EXPECT_EQ(st.axial_load, 300.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> f(-1000, 1000);
  for (int i = 0; i < 1000; ++i) st = step_actuator(apply_axial_load(st, f(rng)), 0.005);
  EXPECT_EQ(st.height, start);
}

TEST(Actuator, LoadDoesNotChangeTrajectory) {
  ActuatorState loaded = at(0.0, 0.08), free = at(0.0, 0.08);
  for (int i = 0; i < 3000; ++i) {
    loaded = step_actuator(apply_axial_load(loaded, 300.0), 0.005);
    free = step_actuator(free, 0.005);
    ASSERT_EQ(loaded.height, free.height);
    ASSERT_EQ(loaded.command_speed, free.command_speed);
  }
  EXPECT_EQ(apply_axial_load(free, 0.0).height, free.height);
}

TEST(Actuator, RenderedPlaneSpeed) {
  const auto g = default_geometry();
  ActuatorState st;
  st.command_speed = 0.016;
  EXPECT_NEAR(rendered_plane_speed(st, g), 0.0741, 1e-4);
  st.command_speed = -0.020;
  EXPECT_NEAR(rendered_plane_speed(st, g), -0.0926, 1e-4);
  st.command_speed = 0.0;
  EXPECT_EQ(rendered_plane_speed(st, g), 0.0);
}

TEST(Actuator, Validation) {
  EXPECT_THROW(step_actuator(at(0, 1), 0.0), InvalidArgument);
  EXPECT_THROW(step_actuator(at(0, 1), -1.0), InvalidArgument);
  ActuatorState st;
  st.kp = 0;
  EXPECT_THROW(validate(st), InvalidArgument);
}

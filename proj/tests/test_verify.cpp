#include "pantosim/verify.hpp"

#include <gtest/gtest.h>

using namespace pantosim;

TEST(Verify, DefaultGeometryPasses) {
  verify::Options opt;
  opt.joint_samples = 2000;
  opt.point_samples = 300;
  const auto rep = verify::run_all(default_geometry(), opt);
  ASSERT_EQ(rep.checks.size(), 6u);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.passed) << c.name << " worst=" << c.worst << " " << c.detail;
  EXPECT_TRUE(rep.passed());
}

TEST(Verify, BarFaultIsCaught) {
  verify::Options opt;
  opt.joint_samples = 200;
  opt.point_samples = 50;
  opt.fault = verify::Fault::bar_length;
  const auto rep = verify::run_all(default_geometry(), opt);
  EXPECT_FALSE(rep.passed());
  for (const auto& c : rep.checks) EXPECT_EQ(c.passed, c.name != "bar-rigidity") << c.name;
}

TEST(Verify, SamplersStayInsideLimits) {
  const auto g = default_geometry();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_NO_THROW(forward_kinematics(g, verify::random_joint_state(g, rng)));
    EXPECT_TRUE(in_workspace(g, verify::random_workspace_point(g, rng)));
  }
}

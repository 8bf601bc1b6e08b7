#include "pantosim/io.hpp"
#include "pantosim/scenarios.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

using namespace pantosim;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into the captured output.
Result cli(const std::string& args) {
  const std::string cmd = std::string("'") + PANTOSIM_CLI + "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {};
  Result r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) { return std::string(PANTOSIM_DATA_DIR) + "/" + name; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("pantosim_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, VerifyPassesAndDetectsFault) {
  const auto ok = cli("verify");
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(ok.out.find("FAIL"), std::string::npos);
  EXPECT_NE(ok.out.find("PASS bar-rigidity"), std::string::npos);

  const auto bad = cli("verify --inject-fault bar-length");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("FAIL bar-rigidity"), std::string::npos);
  EXPECT_NE(bad.out.find("verification failed: bar-rigidity"), std::string::npos);
}

TEST_F(Cli, VerifyRejectsInvalidGeometry) {
  auto j = io::geometry_to_json(default_geometry());
  j["alpha"] = 0.0;
  io::write_text_file(path("g.json"), j.dump());
  EXPECT_EQ(cli("verify --geometry " + path("g.json")).code, 2);
  EXPECT_EQ(cli("verify --inject-fault nonsense").code, 2);
}

TEST_F(Cli, WorkspaceReportAndPoints) {
  const auto r = cli("workspace --out " + path("ws.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rep = io::workspace_from_json(io::parse_json_text(io::read_text_file(path("ws.json")), "ws"));
  EXPECT_NEAR(rep.r_min, 0.342, 1e-3);
  EXPECT_NEAR(rep.r_max, 0.722, 1e-3);
  EXPECT_NEAR(rep.solid_angle_analytic, 2.33, 0.005);
  EXPECT_LE(std::abs(rep.solid_angle_mc - rep.solid_angle_analytic), 3 * rep.mc_stderr);
  const auto csv = io::read_text_file(path("ws_points.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x_m,y_m,z_m");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10001);
}

TEST_F(Cli, WorkspaceRejections) {
  auto j = io::geometry_to_json(default_geometry());
  j["l1"] = 0.5;
  io::write_text_file(path("g.json"), j.dump());
  const auto r = cli("workspace --geometry " + path("g.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("'l1'"), std::string::npos) << r.out;
  EXPECT_EQ(cli("workspace --samples 10").code, 2);
  EXPECT_EQ(cli("workspace --geometry " + path("missing.json")).code, 2);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("teleport").code, 2);
}

TEST_F(Cli, SimulateBothStudyTables) {
  for (const auto* scene : {"scene_table_093.json", "scene_table_125.json"}) {
    const auto r = cli("simulate --scene " + data(scene) + " --out " + path("res.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out.rfind("100/100 tiles erased", 0), 0u) << r.out;
    const auto j = io::parse_json_text(io::read_text_file(path("res.json")), "res");
    EXPECT_EQ(j["metrics"]["tiles_erased"], 100);
    EXPECT_LE(j["metrics"]["max_penetration_m"].get<double>(), 1e-6);
  }
}

TEST_F(Cli, SimulateIsByteIdentical) {
  ASSERT_EQ(cli("gen-traj --scene " + data("scene_table_093.json") + " --out " + path("t.csv")).code, 0);
  ASSERT_EQ(cli("simulate --scene " + data("scene_table_093.json") + " --trajectory " + path("t.csv") + " --out " +
                path("a.json")).code, 0);
  ASSERT_EQ(cli("simulate --scene " + data("scene_table_093.json") + " --trajectory " + path("t.csv") + " --out " +
                path("b.json")).code, 0);
  const auto a = io::read_text_file(path("a.json"));
  EXPECT_GT(a.size(), 10000u);
  EXPECT_EQ(a, io::read_text_file(path("b.json")));
}

TEST_F(Cli, SimulateRejectsBadTrajectory) {
  io::write_text_file(path("t.csv"), "t_s,x_m,y_m,z_m\n0,0.4,0,0.9\n0,0.5,0,0.9\n");
  const auto r = cli("simulate --scene " + data("scene_table_093.json") + " --trajectory " + path("t.csv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("error:"), std::string::npos);
  EXPECT_EQ(cli("simulate --scene " + data("scene_table_093.json") + " --dt 0").code, 2);
  EXPECT_EQ(cli("simulate").code, 2);
}

TEST_F(Cli, GenTrajRaster) {
  const auto r = cli("gen-traj --scene " + data("scene_table_125.json") + " --speed 0.2 --out " + path("t.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto traj = io::load_trajectory(path("t.csv"));
  ASSERT_GT(traj.size(), 100u);
  for (const auto& s : traj) EXPECT_NEAR(s.target.z(), kHighTableHeight - 0.005, 1e-12);
  EXPECT_EQ(cli("gen-traj --scene " + data("scene_table_125.json") + " --pattern spiral").code, 2);
}

TEST_F(Cli, LogLevelValidated) {
  const std::string base = std::string("'") + PANTOSIM_CLI + "' verify >/dev/null 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(("PANTOSIM_LOG=debug " + base).c_str())), 0);
  EXPECT_EQ(WEXITSTATUS(std::system(("PANTOSIM_LOG=loud " + base).c_str())), 2);
}

TEST_F(Cli, ServeOnBusyPortFails) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(fd, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  ASSERT_EQ(::listen(fd, 1), 0);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const auto r = cli("serve --speed 0 --port " + std::to_string(ntohs(addr.sin_port)));
  ::close(fd);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("cannot listen"), std::string::npos) << r.out;
}

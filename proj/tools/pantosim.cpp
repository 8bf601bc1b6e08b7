// pantosim: workspace reports, verification, session runs, raster generation and the session server.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or input error.

#include "pantosim/io.hpp"
#include "pantosim/scenarios.hpp"
#include "pantosim/session.hpp"
#include "pantosim/verify.hpp"
#include "pantosim/workspace.hpp"
#include "pantosim/ws_server.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

namespace {

using namespace pantosim;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr std::size_t kMaxPointsCsv = 10'000;

std::shared_ptr<spdlog::logger> make_logger() {
  auto logger = spdlog::stderr_color_mt("pantosim");
  logger->set_pattern("[%l] %v");
  const char* env = std::getenv("PANTOSIM_LOG");
  const std::string level = env ? env : "off";
  if (level == "off") {
    logger->set_level(spdlog::level::off);
  } else if (level == "info") {
    logger->set_level(spdlog::level::info);
  } else if (level == "debug") {
    logger->set_level(spdlog::level::debug);
  } else {
    throw InvalidArgument("PANTOSIM_LOG must be off, info or debug (got '" + level + "')");
  }
  return logger;
}

void write_or_print(const std::optional<std::string>& out, const std::string& text) {
  if (out) {
    io::write_text_file(*out, text);
  } else {
    std::cout << text;
  }
}

LinkageGeometry geometry_or_default(const std::optional<std::string>& path) {
  return path ? io::load_geometry(*path) : default_geometry();
}

struct Options {
  std::optional<std::string> geometry, scene, trajectory, out, pattern, inject_fault;
  double dt = kDefaultDt;
  std::size_t samples = 100'000;
  unsigned short port = service::kDefaultPort;
  double speed = 0.0;  // per-subcommand default applied below
  bool speed_given = false;
};

int cmd_workspace(const Options& o, spdlog::logger& log) {
  const LinkageGeometry g = geometry_or_default(o.geometry);
  const WorkspaceReport rep = workspace_report(g, o.samples);
  log.info("workspace: r [{}, {}] m, solid angle {} sr (MC {} +- {})", rep.r_min, rep.r_max,
           rep.solid_angle_analytic, rep.solid_angle_mc, rep.mc_stderr);
  write_or_print(o.out, io::workspace_to_json(rep).dump(2) + "\n");
  if (o.out) {
    std::filesystem::path csv(*o.out);
    csv.replace_extension();
    csv += "_points.csv";
    const auto points = sample_reachable_points(g, std::min(o.samples, kMaxPointsCsv));
    io::write_text_file(csv.string(), io::points_to_csv(points));
    log.info("wrote {} points to {}", points.size(), csv.string());
  }
  return kExitOk;
}

int cmd_simulate(const Options& o, spdlog::logger& log) {
  if (!o.scene) throw CLI::RequiredError("--scene");
  const auto file = io::load_scene(*o.scene, geometry_or_default(o.geometry));
  const LinkageGeometry g = file.geometry.value_or(geometry_or_default(o.geometry));
  const auto traj = o.trajectory ? io::load_trajectory(*o.trajectory) : generate_raster_trajectory(file.scene);
  log.info("simulating {} samples at dt {}", traj.size(), o.dt);
  const SessionResult res = run(file.scene, g, traj, o.dt);
  if (o.out) io::write_text_file(*o.out, io::result_to_json(res).dump(2) + "\n");
  const auto& m = res.metrics;
  std::cout << m.tiles_erased << "/" << m.tiles_total << " tiles erased, max penetration "
            << io::format_double(m.max_penetration) << " m, duration " << io::format_double(m.elapsed) << " s\n";
  return kExitOk;
}

int cmd_gen_traj(const Options& o, spdlog::logger& log) {
  if (!o.scene) throw CLI::RequiredError("--scene");
  const std::string pattern = o.pattern.value_or("raster");
  if (pattern != "raster") throw InvalidArgument("unknown pattern '" + pattern + "' (supported: raster)");
  const auto file = io::load_scene(*o.scene, geometry_or_default(o.geometry));
  RasterOptions opt;
  if (o.speed_given) opt.speed = o.speed;
  const auto traj = generate_raster_trajectory(file.scene, opt);
  log.info("raster: {} samples over {} s", traj.size(), traj.back().t - traj.front().t);
  write_or_print(o.out, io::trajectory_to_csv(traj));
  return kExitOk;
}

int cmd_verify(const Options& o, spdlog::logger& log) {
  verify::Options opt;
  if (o.inject_fault) {
    if (*o.inject_fault != "bar-length") throw InvalidArgument("unknown fault '" + *o.inject_fault + "'");
    opt.fault = verify::Fault::bar_length;
  }
  const verify::Report rep = verify::run_all(geometry_or_default(o.geometry), opt);
  for (const auto& c : rep.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " worst=" << io::format_double(c.worst)
              << " tol=" << io::format_double(c.tolerance) << "\n";
    if (!c.passed) std::cerr << "verification failed: " << c.name << ": " << c.detail << "\n";
    log.debug("{}: {}", c.name, c.detail);
  }
  return rep.passed() ? kExitOk : kExitVerifyFailed;
}

int cmd_serve(const Options& o, spdlog::logger& log) {
  service::ServerOptions opt;
  opt.port = o.port;
  opt.speed = o.speed_given ? o.speed : 1.0;
  service::WsServer server(opt, [&log](const std::string& m) { log.info("{}", m); });
  std::cerr << "listening on " << opt.address << ":" << server.port() << "\n";

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    log.info("signal {}, shutting down", sig);
    server.stop();
  });
  server.run();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pantograph haptic device simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_geometry = [&](CLI::App* c) { c->add_option("--geometry", o.geometry, "linkage geometry JSON")->check(CLI::ExistingFile); };
  auto add_scene = [&](CLI::App* c) { c->add_option("--scene", o.scene, "scene JSON")->check(CLI::ExistingFile); };
  auto add_out = [&](CLI::App* c, const std::string& what) { c->add_option("--out", o.out, what); };

  auto* ws = app.add_subcommand("workspace", "workspace report JSON (+ <out>_points.csv)");
  add_geometry(ws);
  ws->add_option("--samples", o.samples, "Monte Carlo samples (>= 1000)");
  add_out(ws, "report path (default stdout)");

  auto* sim = app.add_subcommand("simulate", "run a session and write the result JSON");
  add_scene(sim);
  add_geometry(sim);
  sim->add_option("--trajectory", o.trajectory, "hand trajectory CSV (default: generated raster)")->check(CLI::ExistingFile);
  sim->add_option("--dt", o.dt, "step, s");
  add_out(sim, "result path");

  auto* gen = app.add_subcommand("gen-traj", "generate a wiping trajectory CSV");
  add_scene(gen);
  add_geometry(gen);
  gen->add_option("--pattern", o.pattern, "raster");
  gen->add_option("--speed", o.speed, "path speed, m/s");
  add_out(gen, "CSV path (default stdout)");

  auto* ver = app.add_subcommand("verify", "run the invariant suites");
  add_geometry(ver);
  ver->add_option("--inject-fault", o.inject_fault, "bar-length: perturb the expected bar length");

  auto* srv = app.add_subcommand("serve", "WebSocket session server");
  srv->add_option("--port", o.port, "listen port");
  srv->add_option("--speed", o.speed, "sim seconds per wall second (0 = unpaced)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  o.speed_given = gen->count("--speed") > 0 || srv->count("--speed") > 0;

  try {
    auto log = make_logger();
    if (!(o.dt > 0.0) || !std::isfinite(o.dt)) throw InvalidArgument("--dt must be positive");
    if (o.speed_given && !(o.speed >= 0.0)) throw InvalidArgument("--speed must be >= 0");
    if (*ws) return cmd_workspace(o, *log);
    if (*sim) return cmd_simulate(o, *log);
    if (*gen) return cmd_gen_traj(o, *log);
    if (*ver) return cmd_verify(o, *log);
    return cmd_serve(o, *log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

// pvdaq: multi-sensor photovoltaic data-acquisition daemon and tooling.
//
// Subcommands:
//   run       start the acquisition daemon
//   simulate  replay a reliability scenario on the simulator at full speed
//   admin     operator shortcuts: tail, recent, grep, stats, state, stop
//   verify    cross-check the CSV archive against a sink line-protocol export
//
// Exit codes: 0 success, 1 validation failure, 2 runtime failure.

#include <csignal>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "pvdaq/pvdaq.hpp"
#include "pvdaq/sink_http.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::string resolve_config_path(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("DAQ_CONFIG")) return env;
  return {};
}

// Loads the config; empty path means built-in defaults.
pvdaq::Result<pvdaq::RunConfig, std::vector<pvdaq::Diagnostic>> load_config(
    const std::string& path) {
  if (path.empty()) return pvdaq::RunConfig::defaults();
  return pvdaq::RunConfig::load(path);
}

void print_diagnostics(const std::vector<pvdaq::Diagnostic>& diags) {
  for (const auto& d : diags) std::cerr << "config: " << d.field << ": " << d.message << "\n";
}

bool ensure_writable_dir(const std::string& dir, const char* what) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    std::cerr << what << " directory is not usable: " << dir << "\n";
    return false;
  }
  const auto probe = std::filesystem::path(dir) / ".probe";
  std::ofstream out(probe);
  if (!out) {
    std::cerr << what << " directory is not writable: " << dir << "\n";
    return false;
  }
  out.close();
  std::filesystem::remove(probe, ec);
  return true;
}

int cmd_run(const std::string& config_flag) {
  using namespace pvdaq;

  auto loaded = load_config(resolve_config_path(config_flag));
  if (!loaded.ok()) {
    print_diagnostics(loaded.error());
    return kExitValidation;
  }
  RunConfig config = loaded.value();

  if (config.backend == "hw") {
    std::cerr << "backend \"hw\" requires a bus driver implementing the Backend\n"
                 "interface (see include/pvdaq/hal.hpp); none is built in. Use the\n"
                 "simulator backend or link a driver.\n";
    return kExitValidation;
  }

  if (!ensure_writable_dir(config.archive_dir, "archive") ||
      !ensure_writable_dir(config.state_dir, "state") ||
      !ensure_writable_dir(config.log_dir, "log"))
    return kExitValidation;

  InstanceLock lock;
  if (!lock.acquire(config.state_dir)) {
    std::cerr << "another instance already runs against " << config.state_dir << "\n";
    return kExitValidation;
  }

  SystemClock clock;
  SimBackend backend(config.sim.seed, config.sim.env, config.thermistor,
                     config.electrical, config.meteo, config.hal, config.channel_map);
  backend.log().set_enabled(false);  // unbounded process lifetime
  if (!config.sim.fault_script_path.empty()) {
    auto script = FaultScript::load_file(config.sim.fault_script_path,
                                         day_start(clock.now()));
    if (!script.ok()) {
      std::cerr << "fault script: " << script.error() << "\n";
      return kExitValidation;
    }
    backend.set_fault_script(script.value());
  }
  backend.power_on(clock.now());

  Hal hal(backend, config.channel_map, config.hal);
  Logger log(config.log_dir, clock, config.log_level, /*echo_stderr=*/true);

  std::unique_ptr<SinkClient> sink;
  if (config.sink.mode == SinkMode::File) {
    std::string path = config.sink.file_path.empty()
                           ? (std::filesystem::path(config.archive_dir) / "sink_export.lp").string()
                           : config.sink.file_path;
    sink = std::make_unique<FileSinkClient>(path);
  } else if (config.sink.mode == SinkMode::Http) {
    sink = std::make_unique<HttpSinkClient>(config.sink.endpoint, config.sink.org,
                                            config.sink.bucket, config.sink.token);
  }
  SinkBacklog backlog(static_cast<size_t>(config.sink.backlog_max));

  std::unique_ptr<LocalDirRemote> remote;
  if (config.sync.enabled) remote = std::make_unique<LocalDirRemote>(config.sync.target_dir);

  Daemon::Wiring wiring{clock, hal,     log,
                        config, sink.get(), &backlog,
                        remote.get(), {}};
  Daemon daemon(wiring);
  daemon.start();

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  ThreadedRunner runner(clock, daemon.sampler(), daemon.scheduler(),
                        [&backend](TimeMs now) { backend.advance_to(now); });
  runner.start();

  while (!g_stop.load(std::memory_order_relaxed))
    std::this_thread::sleep_for(std::chrono::milliseconds(100));

  runner.stop_and_join();
  daemon.shutdown();
  return kExitOk;
}

int cmd_simulate(const std::string& config_flag, const std::string& scenario,
                 const std::string& out_flag, const std::string& report_flag,
                 double speedup, std::int64_t seed_override) {
  using namespace pvdaq;

  auto loaded = load_config(resolve_config_path(config_flag));
  if (!loaded.ok()) {
    print_diagnostics(loaded.error());
    return kExitValidation;
  }
  RunConfig config = loaded.value();
  if (config.backend != "sim") {
    std::cerr << "simulate requires backend = \"sim\"\n";
    return kExitValidation;
  }
  if (seed_override >= 0) config.sim.seed = static_cast<std::uint64_t>(seed_override);

  const std::filesystem::path out =
      out_flag.empty() ? std::filesystem::path("sim_out") / scenario
                       : std::filesystem::path(out_flag);

  const auto wall_start = std::chrono::steady_clock::now();
  ScenarioRunner runner(config, out, speedup);
  auto result = runner.run(scenario);
  if (!result.ok()) {
    std::cerr << result.error() << "\n";
    return kExitValidation;
  }
  const double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

  const ScenarioReport& report = result.value();
  std::cout << report.to_text();
  std::cerr << "simulated " << report.sim_hours << " h in " << wall_s << " s wall ("
            << (report.sim_hours * 3600.0 / (wall_s > 0 ? wall_s : 1e-9)) << "x)\n";

  if (!report_flag.empty()) {
    std::ofstream out_json(report_flag);
    if (!out_json) {
      std::cerr << "cannot write report to " << report_flag << "\n";
      return kExitRuntime;
    }
    out_json << report.to_json().dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_admin(const std::string& config_flag, const std::string& action,
              const std::vector<std::string>& args, std::string log_dir_flag,
              std::string state_dir_flag) {
  using namespace pvdaq;

  std::string log_dir = "./logs";
  std::string state_dir = "./state";
  const std::string config_path = resolve_config_path(config_flag);
  if (!config_path.empty()) {
    auto loaded = load_config(config_path);
    if (!loaded.ok()) {
      print_diagnostics(loaded.error());
      return kExitValidation;
    }
    log_dir = loaded.value().log_dir;
    state_dir = loaded.value().state_dir;
  }
  if (!log_dir_flag.empty()) log_dir = log_dir_flag;
  if (!state_dir_flag.empty()) state_dir = state_dir_flag;

  if (action == "tail") {
    std::signal(SIGINT, handle_signal);
    admin_tail(log_dir, std::cout, [] { return g_stop.load(); });
    return kExitOk;
  }
  if (action == "recent") {
    size_t n = 20;
    if (!args.empty()) n = static_cast<size_t>(std::stoul(args[0]));
    auto lines = admin_recent(log_dir, n);
    if (!lines.ok()) {
      std::cerr << lines.error() << "\n";
      return kExitValidation;
    }
    for (const auto& l : lines.value()) std::cout << l << "\n";
    return kExitOk;
  }
  if (action == "grep") {
    if (args.empty()) {
      std::cerr << "admin grep needs a pattern\n";
      return kExitValidation;
    }
    auto hits = admin_grep(log_dir, args[0]);
    if (!hits.ok()) {
      std::cerr << hits.error() << "\n";
      return kExitValidation;
    }
    for (const auto& h : hits.value()) std::cout << h << "\n";
    return kExitOk;
  }
  if (action == "stats") {
    auto stats = admin_stats(log_dir);
    if (!stats.ok()) {
      std::cerr << stats.error() << "\n";
      return kExitValidation;
    }
    const LogStats& s = stats.value();
    std::cout << "log lines:   " << s.total_lines << "\n";
    for (const auto& [level, count] : s.level_counts)
      std::cout << "  " << level << ": " << count << "\n";
    std::cout << "reinits:     " << s.reinit_count << "\n";
    std::cout << "last frame:  " << (s.last_frame_time.empty() ? "none" : s.last_frame_time)
              << "\n";
    return kExitOk;
  }
  if (action == "state") {
    std::cout << admin_state_text(state_dir);
    return kExitOk;
  }
  if (action == "stop") {
    auto stopped = admin_stop(state_dir);
    if (!stopped.ok()) {
      std::cerr << stopped.error() << "\n";
      return kExitValidation;
    }
    std::cout << "sent shutdown signal to pid " << stopped.value() << "\n";
    return kExitOk;
  }
  std::cerr << "unknown admin action: " << action
            << " (expected tail|recent|grep|stats|state|stop)\n";
  return kExitValidation;
}

int cmd_verify(const std::string& csv_dir, const std::string& sink_export) {
  using namespace pvdaq;
  const VerifyReport report = verify_consistency(csv_dir, sink_export);
  for (const auto& e : report.parse_errors) std::cerr << "parse: " << e << "\n";
  for (const auto& m : report.mismatches) std::cout << "mismatch: " << m << "\n";
  std::cout << report.csv_rows << " csv row(s), " << report.csv_values
            << " csv value(s), " << report.sink_points << " sink point(s), "
            << report.mismatches.size() << " mismatch(es)\n";
  if (!report.parse_errors.empty()) return kExitRuntime;
  return report.mismatches.empty() ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-sensor photovoltaic DAQ daemon"};
  app.require_subcommand(1);

  std::string config_flag;

  auto* run = app.add_subcommand("run", "start the acquisition daemon");
  run->add_option("--config", config_flag, "config file (or $DAQ_CONFIG)");

  auto* simulate =
      app.add_subcommand("simulate", "replay a scenario on the simulator");
  std::string scenario;
  std::string out_dir;
  std::string report_path;
  double speedup = 0.0;
  std::int64_t seed_override = -1;
  simulate->add_option("scenario", scenario,
                       "built-in scenario name or a .json fault script")
      ->required();
  simulate->add_option("--config", config_flag, "config file (or $DAQ_CONFIG)");
  simulate->add_option("--out", out_dir, "output directory (default sim_out/<scenario>)");
  simulate->add_option("--report", report_path, "write the JSON report here as well");
  simulate->add_option("--speedup", speedup,
                       "pace the simulation at N x real time (default: unpaced)");
  simulate->add_option("--seed", seed_override, "override the simulator seed");

  auto* admin = app.add_subcommand("admin", "operator shortcuts");
  std::string action;
  std::vector<std::string> action_args;
  std::string log_dir_flag;
  std::string state_dir_flag;
  admin->add_option("action", action, "tail|recent|grep|stats|state|stop")->required();
  admin->add_option("args", action_args, "action arguments");
  admin->add_option("--config", config_flag, "config file (or $DAQ_CONFIG)");
  admin->add_option("--log-dir", log_dir_flag, "override the log directory");
  admin->add_option("--state-dir", state_dir_flag, "override the state directory");

  auto* verify = app.add_subcommand("verify", "cross-check CSV archive and sink export");
  std::string csv_dir;
  std::string sink_export;
  verify->add_option("csv_dir", csv_dir, "directory holding data_*.csv")->required();
  verify->add_option("sink_export", sink_export, "line-protocol dump")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_flag);
    if (simulate->parsed())
      return cmd_simulate(config_flag, scenario, out_dir, report_path, speedup,
                          seed_override);
    if (admin->parsed())
      return cmd_admin(config_flag, action, action_args, log_dir_flag, state_dir_flag);
    if (verify->parsed()) return cmd_verify(csv_dir, sink_export);
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvdaq/daemon.hpp"
#include "pvdaq/sim_backend.hpp"

namespace pvdaq {

struct ScenarioSpec {
  std::string name;
  std::string description;
  TimeMs boot_offset = 0;  // node power-up, relative to the scenario day
  TimeMs end_offset = 0;   // simulation end, relative to the scenario day
  FaultScript script;
};

// The reliability drills: a clean day, the three power-cycle timings, a
// sustained network outage, and scoped sensor failures. times are derived
// from the configured operational window so the set stays meaningful when a
// bench reconfigures the day.
inline std::vector<ScenarioSpec> builtin_scenarios(TimeMs day, const WindowConfig& window) {
  std::vector<ScenarioSpec> out;
  const TimeMs start = window.start;
  const TimeMs end = window.end;
  const TimeMs mid = (start + end) / 2;

  {
    ScenarioSpec s;
    s.name = "clean-day";
    s.description = "full operational day, no faults";
    s.boot_offset = start;
    s.end_offset = end + 5 * kMinuteMs;
    out.push_back(std::move(s));
  }
  {
    ScenarioSpec s;
    s.name = "power-cycle-midday";
    s.description = "power loss mid-operation, resume continues the daily file";
    s.boot_offset = start;
    s.end_offset = end + 5 * kMinuteMs;
    s.script.add({day + mid + 30 * kSecondMs, PowerCycle{2 * kMinuteMs}});
    out.push_back(std::move(s));
  }
  {
    ScenarioSpec s;
    s.name = "power-cycle-early";
    s.description = "power loss before operational hours, node restarts idle";
    s.boot_offset = start - kHourMs;
    s.end_offset = end + 5 * kMinuteMs;
    s.script.add({day + start - 35 * kMinuteMs, PowerCycle{5 * kMinuteMs}});
    out.push_back(std::move(s));
  }
  {
    ScenarioSpec s;
    s.name = "power-cycle-late";
    s.description = "power loss after end-of-day, clean idle initialization";
    s.boot_offset = start;
    s.end_offset = end + 90 * kMinuteMs;
    s.script.add({day + end + 58 * kMinuteMs, PowerCycle{2 * kMinuteMs}});
    out.push_back(std::move(s));
  }
  {
    ScenarioSpec s;
    s.name = "net-outage";
    s.description = "45-minute uplink outage, backlog drains on restoration";
    s.boot_offset = start;
    s.end_offset = end + 5 * kMinuteMs;
    s.script.add({day + start + 6 * kHourMs, NetOutage{45 * kMinuteMs}});
    out.push_back(std::move(s));
  }
  {
    ScenarioSpec s;
    s.name = "sensor-fail";
    s.description = "scoped sensor faults: one thermistor, then the ambient sensor";
    s.boot_offset = start;
    s.end_offset = end + 5 * kMinuteMs;
    s.script.add({day + start + 5 * kHourMs, SensorFail{"T11", 20 * kMinuteMs}});
    s.script.add({day + start + 9 * kHourMs, SensorFail{"DHT", 10 * kMinuteMs}});
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<std::string> builtin_scenario_names() {
  std::vector<std::string> names;
  for (const auto& s : builtin_scenarios(0, WindowConfig{})) names.push_back(s.name);
  return names;
}

struct ScenarioReport {
  std::string scenario;
  std::uint64_t seed = 0;
  double sim_hours = 0.0;

  std::uint64_t frames = 0;
  std::vector<std::string> decisions;
  std::vector<std::string> decision_reasons;
  int reinit_events = 0;
  int health_reports = 0;
  std::map<std::string, std::uint64_t> flags_histogram;

  std::uint64_t csv_rows = 0;
  std::vector<std::string> csv_files;
  std::uint64_t sink_frames_delivered = 0;
  std::uint64_t backlog_remaining = 0;
  std::string sink_export;
  std::string out_dir;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["scenario"] = scenario;
    j["seed"] = seed;
    j["sim_hours"] = sim_hours;
    j["frames"] = frames;
    j["decisions"] = decisions;
    j["decision_reasons"] = decision_reasons;
    j["reinit_events"] = reinit_events;
    j["health_reports"] = health_reports;
    j["flags_histogram"] = flags_histogram;
    j["csv_rows"] = csv_rows;
    j["csv_files"] = csv_files;
    j["sink_frames_delivered"] = sink_frames_delivered;
    j["backlog_remaining"] = backlog_remaining;
    j["sink_export"] = sink_export;
    j["out_dir"] = out_dir;
    return j;
  }

  std::string to_text() const {
    std::string t;
    t += "scenario:        " + scenario + "\n";
    t += "seed:            " + std::to_string(seed) + "\n";
    t += "frames:          " + std::to_string(frames) + "\n";
    t += "decisions:       ";
    for (size_t i = 0; i < decisions.size(); ++i)
      t += (i ? ", " : "") + decisions[i] + "(" + decision_reasons[i] + ")";
    t += "\n";
    t += "reinit events:   " + std::to_string(reinit_events) + "\n";
    t += "health reports:  " + std::to_string(health_reports) + "\n";
    t += "csv rows:        " + std::to_string(csv_rows) + "\n";
    t += "sink delivered:  " + std::to_string(sink_frames_delivered) + "\n";
    t += "backlog queued:  " + std::to_string(backlog_remaining) + "\n";
    if (flags_histogram.empty()) {
      t += "flags:           none\n";
    } else {
      t += "flags:\n";
      for (const auto& [field, count] : flags_histogram)
        t += "  " + field + ": " + std::to_string(count) + " frame(s)\n";
    }
    t += "archive files:\n";
    for (const auto& f : csv_files) t += "  " + f + "\n";
    return t;
  }
};

namespace detail_scenario {

class GatedRemote final : public RemoteTarget {
 public:
  GatedRemote(RemoteTarget& inner, std::function<bool()> up)
      : inner_(inner), up_(std::move(up)) {}
  bool available() override { return up_() && inner_.available(); }
  std::optional<std::uint64_t> fingerprint(const std::string& name) override {
    return inner_.fingerprint(name);
  }
  bool store(const std::filesystem::path& local, const std::string& name) override {
    return inner_.store(local, name);
  }

 private:
  RemoteTarget& inner_;
  std::function<bool()> up_;
};

}  // namespace detail_scenario

// Replays one scenario against the simulator at accelerated time. Power
// cycles split the run into segments: each segment boots a fresh daemon
// (exercising recovery) and a power loss abandons the previous one without
// any cleanup, exactly like pulled mains.
class ScenarioRunner {
 public:
  ScenarioRunner(RunConfig config, std::filesystem::path out_dir, double speedup = 0.0)
      : config_(std::move(config)), out_dir_(std::move(out_dir)), speedup_(speedup) {}

  static std::optional<ScenarioSpec> find_builtin(const std::string& name, TimeMs day,
                                                  const WindowConfig& window) {
    for (auto& s : builtin_scenarios(day, window))
      if (s.name == name) return s;
    return std::nullopt;
  }

  Result<ScenarioReport, std::string> run(const std::string& scenario_name) {
    const TimeMs day = day_start(config_.sim.start);

    ScenarioSpec spec;
    if (auto builtin = find_builtin(scenario_name, day, config_.window)) {
      spec = *builtin;
    } else if (scenario_name.size() > 5 &&
               scenario_name.substr(scenario_name.size() - 5) == ".json") {
      auto script = FaultScript::load_file(scenario_name, day);
      if (!script.ok()) return "fault script: " + script.error();
      spec.name = std::filesystem::path(scenario_name).stem().string();
      spec.boot_offset = config_.window.start;
      spec.end_offset = config_.window.end + 5 * kMinuteMs;
      spec.script = script.value();
    } else {
      std::string known;
      for (const auto& n : builtin_scenario_names()) known += "\n  " + n;
      return "unknown scenario \"" + scenario_name + "\"; available:" + known;
    }
    if (!config_.sim.fault_script_path.empty()) {
      auto script = FaultScript::load_file(config_.sim.fault_script_path, day);
      if (!script.ok()) return "fault script: " + script.error();
      for (const auto& e : script.value().entries()) spec.script.add(e);
    }

    return run_spec(spec, day);
  }

  Result<ScenarioReport, std::string> run_spec(const ScenarioSpec& spec, TimeMs day) {
    prepare_dirs();

    ScenarioReport report;
    report.scenario = spec.name;
    report.seed = config_.sim.seed;
    report.out_dir = out_dir_.string();
    report.sink_export = (out_dir_ / "sink_export.lp").string();

    SimBackend backend(config_.sim.seed, config_.sim.env, config_.thermistor,
                       config_.electrical, config_.meteo, config_.hal,
                       config_.channel_map);
    backend.log().set_enabled(config_.sim.call_log);
    backend.set_fault_script(spec.script);

    FileSinkClient file_sink(out_dir_ / "sink_export.lp");
    GatedSinkClient gated_sink(file_sink, [&backend] { return backend.network_up(); });
    LocalDirRemote remote(out_dir_ / "remote");
    detail_scenario::GatedRemote gated_remote(remote,
                                              [&backend] { return backend.network_up(); });

    const TimeMs boot = day + spec.boot_offset;
    const TimeMs sim_end = day + spec.end_offset;
    report.sim_hours = static_cast<double>(sim_end - boot) / kHourMs;

    // power cycles inside [boot, end) split the timeline into segments
    std::vector<std::pair<TimeMs, TimeMs>> segments;
    TimeMs cursor = boot;
    for (const auto& [at, downtime] : spec.script.power_cycles()) {
      if (at < cursor || at >= sim_end) continue;
      segments.emplace_back(cursor, at);
      cursor = at + downtime;
    }
    if (cursor < sim_end) segments.emplace_back(cursor, sim_end);

    for (size_t i = 0; i < segments.size(); ++i) {
      const auto [t0, t1] = segments[i];
      const bool last = i + 1 == segments.size();

      SimClock clock(t0);
      clock.set_speedup(speedup_);
      clock.set_on_advance([&backend](TimeMs t) { backend.advance_to(t); });
      backend.power_on(t0);

      Hal hal(backend, config_.channel_map, config_.hal);
      Logger log(out_dir_ / "logs", clock, config_.log_level);
      SinkBacklog backlog(static_cast<size_t>(config_.sink.backlog_max));

      Daemon::Wiring wiring{clock,
                            hal,
                            log,
                            config_,
                            &gated_sink,
                            &backlog,
                            &gated_remote,
                            [&report](const MeasurementFrame& frame) {
                              ++report.frames;
                              for (int f = 0; f < kFieldCount; ++f)
                                if (!frame.valid[f])
                                  ++report.flags_histogram[field_name(static_cast<Field>(f))];
                            }};
      Daemon daemon(wiring);

      InstanceLock lock;
      if (!lock.acquire(config_.state_dir))
        return std::string("state directory is locked by another instance");

      const RecoveryDecision decision = daemon.start();
      report.decisions.push_back(recovery_mode_name(decision.mode));
      report.decision_reasons.push_back(recovery_reason_name(decision.reason));

      VirtualLoop loop(clock, daemon.sampler(), daemon.scheduler());
      loop.run_until(t1);

      report.reinit_events += daemon.scheduler().reinit_events();
      report.health_reports += daemon.scheduler().health_reports();

      if (last) {
        daemon.shutdown();
        report.backlog_remaining = backlog.pending();
      }
      // power loss: fall through without shutdown, no state write, no flush
    }

    // archive census over the scenario day
    for (const auto& file : list_archive_files(out_dir_ / "data")) {
      auto parsed = parse_csv_file(file);
      if (!parsed.ok()) return "archive " + file.string() + " failed to parse: " + parsed.error();
      report.csv_rows += parsed.value().rows.size();
      report.csv_files.push_back(file.string());
    }
    report.sink_frames_delivered = count_sink_frames(out_dir_ / "sink_export.lp");

    std::ofstream json_out(out_dir_ / "report.json");
    json_out << report.to_json().dump(2) << '\n';
    return report;
  }

  static std::uint64_t count_sink_frames(const std::filesystem::path& export_path) {
    std::ifstream in(export_path);
    if (!in) return 0;
    std::set<std::string> stamps;
    std::string line;
    while (std::getline(in, line)) {
      const auto pos = line.rfind(' ');
      if (pos != std::string::npos) stamps.insert(line.substr(pos + 1));
    }
    return stamps.size();
  }

 private:
  void prepare_dirs() {
    std::filesystem::create_directories(out_dir_);
    std::filesystem::create_directories(out_dir_ / "data");
    std::filesystem::create_directories(out_dir_ / "state");
    std::filesystem::create_directories(out_dir_ / "logs");
    std::filesystem::create_directories(out_dir_ / "remote");
    // a scenario is a fresh world: clear previous artifacts
    for (const char* sub : {"data", "state", "logs", "remote"})
      for (const auto& e : std::filesystem::directory_iterator(out_dir_ / sub))
        std::filesystem::remove_all(e.path());
    std::error_code ec;
    std::filesystem::remove(out_dir_ / "sink_export.lp", ec);
    std::filesystem::remove(out_dir_ / "report.json", ec);

    config_.archive_dir = (out_dir_ / "data").string();
    config_.state_dir = (out_dir_ / "state").string();
    config_.log_dir = (out_dir_ / "logs").string();
  }

  RunConfig config_;
  std::filesystem::path out_dir_;
  double speedup_;
};

}  // namespace pvdaq

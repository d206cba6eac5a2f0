#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pvdaq/civil_time.hpp"
#include "pvdaq/result.hpp"

namespace pvdaq {

// Timed simulator directives replaying the reliability scenarios: a sensor
// going dark, the node losing power, the uplink dropping.
struct SensorFail {
  std::string signal;  // "T11", "DHT", "IRR+", "P0", "WIND_VANE", "SEL", ...
  TimeMs duration = 0;
};

struct PowerCycle {
  TimeMs downtime = 2 * kMinuteMs;  // node dark between loss and reboot
};

struct NetOutage {
  TimeMs duration = 0;
};

struct FaultEntry {
  TimeMs at = 0;  // activation time, absolute
  std::variant<SensorFail, PowerCycle, NetOutage> fault;
};

class FaultScript {
 public:
  FaultScript() = default;
  explicit FaultScript(std::vector<FaultEntry> entries) : entries_(std::move(entries)) {
    normalize();
  }

  void add(FaultEntry e) {
    entries_.push_back(std::move(e));
    normalize();
  }

  const std::vector<FaultEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  // Is `signal` inside an active SENSOR_FAIL interval at time t?
  // Intervals are [at, at + duration).
  bool sensor_failed(const std::string& signal, TimeMs t) const {
    for (const auto& e : entries_) {
      if (e.at > t) break;
      if (const auto* sf = std::get_if<SensorFail>(&e.fault))
        if (sf->signal == signal && t < e.at + sf->duration) return true;
    }
    return false;
  }

  bool network_up(TimeMs t) const {
    for (const auto& e : entries_) {
      if (e.at > t) break;
      if (const auto* no = std::get_if<NetOutage>(&e.fault))
        if (t < e.at + no->duration) return false;
    }
    return true;
  }

  // Power cycles ordered by time: (loss time, downtime).
  std::vector<std::pair<TimeMs, TimeMs>> power_cycles() const {
    std::vector<std::pair<TimeMs, TimeMs>> out;
    for (const auto& e : entries_)
      if (const auto* pc = std::get_if<PowerCycle>(&e.fault))
        out.emplace_back(e.at, pc->downtime);
    return out;
  }

  std::vector<std::string> validate() const {
    std::vector<std::string> problems;
    for (const auto& e : entries_) {
      if (const auto* sf = std::get_if<SensorFail>(&e.fault)) {
        if (sf->duration <= 0) problems.push_back("sensor_fail duration must be positive");
        if (sf->signal.empty()) problems.push_back("sensor_fail needs a signal name");
      } else if (const auto* no = std::get_if<NetOutage>(&e.fault)) {
        if (no->duration <= 0) problems.push_back("net_outage duration must be positive");
      } else if (const auto* pc = std::get_if<PowerCycle>(&e.fault)) {
        if (pc->downtime <= 0) problems.push_back("power_cycle downtime must be positive");
      }
    }
    return problems;
  }

  // Script files are JSON arrays:
  //   [{"kind": "sensor_fail", "at": "10:00:00", "signal": "T11", "duration_s": 1200},
  //    {"kind": "power_cycle", "at": "12:00:30", "downtime_s": 120},
  //    {"kind": "net_outage",  "at": "11:00:00", "duration_s": 2700}]
  // "at" is either "HH:MM:SS" on the scenario day or a full ISO timestamp.
  static Result<FaultScript, std::string> parse_json(const std::string& text,
                                                     TimeMs scenario_day_start) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) return Result<FaultScript, std::string>("invalid JSON");
    if (!doc.is_array())
      return Result<FaultScript, std::string>("fault script must be a JSON array");
    std::vector<FaultEntry> entries;
    for (const auto& item : doc) {
      if (!item.is_object() || !item.contains("kind") || !item.contains("at"))
        return Result<FaultScript, std::string>(
            "each entry needs \"kind\" and \"at\"");
      FaultEntry e;
      const std::string at = item["at"].get<std::string>();
      if (auto abs = parse_iso(at)) {
        e.at = *abs;
      } else if (auto tod = parse_time_of_day(at)) {
        e.at = day_start(scenario_day_start) + *tod;
      } else {
        return Result<FaultScript, std::string>("unparsable \"at\": " + at);
      }
      const std::string kind = item["kind"].get<std::string>();
      if (kind == "sensor_fail") {
        SensorFail sf;
        sf.signal = item.value("signal", std::string{});
        sf.duration = static_cast<TimeMs>(item.value("duration_s", 0.0) * 1000.0);
        e.fault = sf;
      } else if (kind == "power_cycle") {
        PowerCycle pc;
        pc.downtime = static_cast<TimeMs>(item.value("downtime_s", 120.0) * 1000.0);
        e.fault = pc;
      } else if (kind == "net_outage") {
        NetOutage no;
        no.duration = static_cast<TimeMs>(item.value("duration_s", 0.0) * 1000.0);
        e.fault = no;
      } else {
        return Result<FaultScript, std::string>("unknown fault kind: " + kind);
      }
      entries.push_back(std::move(e));
    }
    FaultScript script(std::move(entries));
    auto problems = script.validate();
    if (!problems.empty())
      return Result<FaultScript, std::string>(problems.front());
    return Result<FaultScript, std::string>(std::move(script));
  }

  static Result<FaultScript, std::string> load_file(const std::string& path,
                                                    TimeMs scenario_day_start) {
    std::ifstream in(path);
    if (!in) return Result<FaultScript, std::string>("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json(ss.str(), scenario_day_start);
  }

 private:
  void normalize() {
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const FaultEntry& a, const FaultEntry& b) { return a.at < b.at; });
  }

  std::vector<FaultEntry> entries_;
};

}  // namespace pvdaq

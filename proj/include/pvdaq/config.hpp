#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "pvdaq/channel_map.hpp"
#include "pvdaq/civil_time.hpp"
#include "pvdaq/convert.hpp"
#include "pvdaq/hal.hpp"
#include "pvdaq/log.hpp"
#include "pvdaq/result.hpp"
#include "pvdaq/sim_backend.hpp"

namespace pvdaq {

// ---- minimal TOML-style reader ----
//
// The config file is a flat tree: [section] / [section.sub] headers and
// `key = value` lines with strings, integers, floats, booleans and arrays of
// scalars. That subset covers everything the daemon needs; values are
// addressed by dotted path ("sink.backlog_max").

struct ConfigValue {
  std::variant<std::string, std::int64_t, double, bool, std::vector<double>,
               std::vector<std::string>>
      v;

  bool is_string() const { return std::holds_alternative<std::string>(v); }
  bool is_number() const {
    return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
  }
  double as_double() const {
    if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::get<double>(v);
  }
  std::int64_t as_int() const {
    if (auto* d = std::get_if<double>(&v)) return static_cast<std::int64_t>(*d);
    return std::get<std::int64_t>(v);
  }
};

class ConfigTree {
 public:
  using Map = std::map<std::string, ConfigValue>;

  static Result<ConfigTree, std::string> parse(const std::string& text) {
    ConfigTree tree;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string line = strip_comment(raw);
      trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          return parse_error(line_no, "unterminated section header");
        section = line.substr(1, line.size() - 2);
        trim(section);
        if (section.empty()) return parse_error(line_no, "empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) return parse_error(line_no, "expected key = value");
      std::string key = line.substr(0, eq);
      std::string value = line.substr(eq + 1);
      trim(key);
      trim(value);
      if (key.empty()) return parse_error(line_no, "empty key");
      auto parsed = parse_value(value);
      if (!parsed.ok()) return parse_error(line_no, parsed.error());
      const std::string path = section.empty() ? key : section + "." + key;
      tree.values_[path] = parsed.value();
    }
    return tree;
  }

  static Result<ConfigTree, std::string> load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return std::string("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& path) const { return values_.count(path) != 0; }

  std::optional<std::string> get_string(const std::string& path) const {
    auto it = values_.find(path);
    if (it == values_.end() || !it->second.is_string()) return std::nullopt;
    return std::get<std::string>(it->second.v);
  }
  std::optional<double> get_double(const std::string& path) const {
    auto it = values_.find(path);
    if (it == values_.end() || !it->second.is_number()) return std::nullopt;
    return it->second.as_double();
  }
  std::optional<std::int64_t> get_int(const std::string& path) const {
    auto it = values_.find(path);
    if (it == values_.end() || !it->second.is_number()) return std::nullopt;
    return it->second.as_int();
  }
  std::optional<bool> get_bool(const std::string& path) const {
    auto it = values_.find(path);
    if (it == values_.end() || !std::holds_alternative<bool>(it->second.v))
      return std::nullopt;
    return std::get<bool>(it->second.v);
  }
  std::optional<std::vector<double>> get_double_array(const std::string& path) const {
    auto it = values_.find(path);
    if (it == values_.end()) return std::nullopt;
    if (auto* a = std::get_if<std::vector<double>>(&it->second.v)) return *a;
    return std::nullopt;
  }

  const Map& values() const { return values_; }

 private:
  static Result<ConfigTree, std::string> parse_error(int line, const std::string& what) {
    return std::string("line " + std::to_string(line) + ": " + what);
  }

  static void trim(std::string& s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(0, 1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  }

  static std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
      if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
  }

  static Result<ConfigValue, std::string> parse_scalar(std::string s) {
    trim(s);
    if (s.empty()) return std::string("empty value");
    if (s.front() == '"') {
      if (s.size() < 2 || s.back() != '"') return std::string("unterminated string");
      std::string out;
      for (size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] == '\\' && i + 2 < s.size()) {
          ++i;
          out += s[i];
        } else {
          out += s[i];
        }
      }
      return ConfigValue{out};
    }
    if (s == "true") return ConfigValue{true};
    if (s == "false") return ConfigValue{false};
    // hex literals appear in bus-address lists
    try {
      size_t used = 0;
      if (s.find_first_of(".eE") == std::string::npos ||
          (s.size() > 1 && s[0] == '0' && s[1] == 'x')) {
        const std::int64_t i = std::stoll(s, &used, 0);
        if (used == s.size()) return ConfigValue{i};
      }
      const double d = std::stod(s, &used);
      if (used == s.size()) return ConfigValue{d};
    } catch (...) {
    }
    return std::string("unparsable value: " + s);
  }

  static Result<ConfigValue, std::string> parse_value(const std::string& s) {
    if (!s.empty() && s.front() == '[') {
      if (s.back() != ']') return std::string("unterminated array");
      std::vector<double> nums;
      std::vector<std::string> strs;
      bool any_string = false;
      std::string inner = s.substr(1, s.size() - 2);
      std::string item;
      bool in_string = false;
      std::vector<std::string> items;
      for (char c : inner) {
        if (c == '"') in_string = !in_string;
        if (c == ',' && !in_string) {
          items.push_back(item);
          item.clear();
        } else {
          item += c;
        }
      }
      std::string tail = item;
      trim(tail);
      if (!tail.empty()) items.push_back(item);
      for (auto& it : items) {
        auto parsed = parse_scalar(it);
        if (!parsed.ok()) return parsed.error();
        if (parsed.value().is_string()) {
          any_string = true;
          strs.push_back(std::get<std::string>(parsed.value().v));
        } else if (parsed.value().is_number()) {
          nums.push_back(parsed.value().as_double());
        } else {
          return std::string("arrays may hold numbers or strings");
        }
      }
      if (any_string && !nums.empty())
        return std::string("arrays must be homogeneous");
      if (any_string) return ConfigValue{strs};
      return ConfigValue{nums};
    }
    return parse_scalar(s);
  }

  Map values_;
};

// ---- run configuration ----

struct Diagnostic {
  std::string field;
  std::string message;
};

enum class SinkMode { None, File, Http };

struct SinkConfig {
  SinkMode mode = SinkMode::None;
  std::string file_path;  // mode=file; defaults next to the archive
  std::string endpoint;   // mode=http
  std::string org;
  std::string bucket;
  std::string token;
  int backlog_max = 1440;  // batches (one per frame), 24 h worth
};

struct SyncConfig {
  bool enabled = false;
  std::string target_dir;
  int interval_min = 30;
};

struct WindowConfig {
  TimeMs start = 5 * kHourMs;   // 05:00
  TimeMs end = 18 * kHourMs;    // 18:00

  bool contains(TimeMs t) const {
    const TimeMs m = ms_of_day(t);
    return m >= start && m < end;
  }
};

struct SimConfig {
  std::uint64_t seed = 42;
  TimeMs start = ms_from_civil(2025, 3, 10, 0, 0, 0);
  std::string fault_script_path;
  bool call_log = true;
  SimEnvConfig env;
};

struct RunConfig {
  std::string backend = "sim";  // "sim" | "hw"
  WindowConfig window;
  std::string archive_dir = "./data";
  std::string state_dir = "./state";
  std::string log_dir = "./logs";
  LogLevel log_level = LogLevel::Info;

  HalConfig hal;
  ThermistorCal thermistor;
  ElectricalCal electrical;
  MeteoCal meteo = default_meteo_cal();
  ChannelMap channel_map = ChannelMap::standard();

  SinkConfig sink;
  SyncConfig sync;
  int failure_threshold = 10;
  SimConfig sim;

  static RunConfig defaults() { return RunConfig{}; }

  // Applies every recognized key from the tree; unknown keys are diagnostics
  // so typos fail loudly instead of silently keeping a default.
  static Result<RunConfig, std::vector<Diagnostic>> from_tree(const ConfigTree& tree);
  static Result<RunConfig, std::vector<Diagnostic>> load(const std::filesystem::path& p);

  std::vector<Diagnostic> validate() const {
    std::vector<Diagnostic> out;
    if (backend != "sim" && backend != "hw")
      out.push_back({"backend", "must be \"sim\" or \"hw\""});
    if (window.start >= window.end)
      out.push_back({"window", "start must be before end"});
    for (const auto& p : thermistor.validate()) out.push_back({"thermistor", p});
    for (const auto& p : electrical.validate()) out.push_back({"electrical", p});
    for (const auto& p : meteo.validate()) out.push_back({"meteo", p});
    for (const auto& p : channel_map.validate()) out.push_back({"channel_map", p});
    if (sink.mode == SinkMode::Http && sink.endpoint.empty())
      out.push_back({"sink.endpoint", "required for sink.mode=\"http\""});
    if (sink.backlog_max < 1) out.push_back({"sink.backlog_max", "must be >= 1"});
    if (sync.enabled && sync.target_dir.empty())
      out.push_back({"sync.target_dir", "required when sync.enabled=true"});
    if (sync.interval_min < 1) out.push_back({"sync.interval_min", "must be >= 1"});
    if (failure_threshold < 1)
      out.push_back({"recovery.failure_threshold", "must be >= 1"});
    if (archive_dir.empty()) out.push_back({"paths.archive_dir", "must not be empty"});
    if (state_dir.empty()) out.push_back({"paths.state_dir", "must not be empty"});
    if (log_dir.empty()) out.push_back({"paths.log_dir", "must not be empty"});
    if (sim.env.sunrise_minute >= sim.env.sunset_minute)
      out.push_back({"sim.sunrise", "must be before sim.sunset"});
    return out;
  }
};

namespace detail_config {

struct Loader {
  const ConfigTree& tree;
  std::vector<Diagnostic>& diags;
  std::vector<std::string> seen;

  void mark(const std::string& key) { seen.push_back(key); }

  void str(const std::string& key, std::string& out) {
    mark(key);
    if (!tree.has(key)) return;
    if (auto v = tree.get_string(key)) out = *v;
    else diags.push_back({key, "expected a string"});
  }
  void num(const std::string& key, double& out) {
    mark(key);
    if (!tree.has(key)) return;
    if (auto v = tree.get_double(key)) out = *v;
    else diags.push_back({key, "expected a number"});
  }
  void integer(const std::string& key, int& out) {
    mark(key);
    if (!tree.has(key)) return;
    if (auto v = tree.get_int(key)) out = static_cast<int>(*v);
    else diags.push_back({key, "expected an integer"});
  }
  void integer64(const std::string& key, std::int64_t& out) {
    mark(key);
    if (!tree.has(key)) return;
    if (auto v = tree.get_int(key)) out = *v;
    else diags.push_back({key, "expected an integer"});
  }
  void boolean(const std::string& key, bool& out) {
    mark(key);
    if (!tree.has(key)) return;
    if (auto v = tree.get_bool(key)) out = *v;
    else diags.push_back({key, "expected true or false"});
  }
  void time_of_day(const std::string& key, TimeMs& out) {
    mark(key);
    if (!tree.has(key)) return;
    auto s = tree.get_string(key);
    if (!s) {
      diags.push_back({key, "expected \"HH:MM\""});
      return;
    }
    if (auto t = parse_time_of_day(*s)) out = *t;
    else diags.push_back({key, "unparsable time of day: " + *s});
  }
  void timestamp(const std::string& key, TimeMs& out) {
    mark(key);
    if (!tree.has(key)) return;
    auto s = tree.get_string(key);
    if (!s) {
      diags.push_back({key, "expected an ISO timestamp string"});
      return;
    }
    if (auto t = parse_iso(*s)) out = *t;
    else diags.push_back({key, "unparsable timestamp: " + *s});
  }
};

}  // namespace detail_config

inline Result<RunConfig, std::vector<Diagnostic>> RunConfig::from_tree(
    const ConfigTree& tree) {
  RunConfig cfg;
  std::vector<Diagnostic> diags;
  detail_config::Loader L{tree, diags, {}};

  L.str("backend", cfg.backend);
  L.time_of_day("window.start", cfg.window.start);
  L.time_of_day("window.end", cfg.window.end);
  L.str("paths.archive_dir", cfg.archive_dir);
  L.str("paths.state_dir", cfg.state_dir);
  L.str("paths.log_dir", cfg.log_dir);

  {
    std::string level = "info";
    L.str("log.level", level);
    if (level == "debug") cfg.log_level = LogLevel::Debug;
    else if (level == "info") cfg.log_level = LogLevel::Info;
    else if (level == "warn") cfg.log_level = LogLevel::Warn;
    else if (level == "error") cfg.log_level = LogLevel::Error;
    else diags.push_back({"log.level", "expected debug|info|warn|error"});
  }

  L.num("adc.full_scale", cfg.hal.adc_full_scale);
  L.integer64("adc.conversion_ms", cfg.hal.adc_conversion_ms);
  L.integer64("adc.settle_ms", cfg.hal.mux_settle_ms);
  L.integer64("adc.irradiance_settle_ms", cfg.hal.irradiance_settle_ms);

  L.num("thermistor.r_fixed", cfg.thermistor.r_fixed);
  L.num("thermistor.v_supply", cfg.thermistor.v_supply);
  L.num("thermistor.r0", cfg.thermistor.r0);
  L.num("thermistor.t0", cfg.thermistor.t0);
  L.num("thermistor.beta", cfg.thermistor.beta);
  L.boolean("thermistor.fixed_high_side", cfg.thermistor.fixed_high_side);

  L.num("electrical.current_lsb", cfg.electrical.current_lsb);
  L.num("electrical.bus_voltage_lsb", cfg.electrical.bus_voltage_lsb);
  L.integer("electrical.averaging", cfg.hal.monitor_averaging);
  L.num("electrical.conversion_ms", cfg.hal.monitor_conversion_ms);

  L.num("meteo.irradiance_gain", cfg.meteo.irradiance_gain);
  L.num("meteo.wind_speed_per_hz", cfg.meteo.wind_speed_per_hz);
  L.num("meteo.rain_mm_per_tip", cfg.meteo.rain_mm_per_tip);
  L.mark("meteo.vane_voltages");
  L.mark("meteo.vane_directions");
  if (tree.has("meteo.vane_voltages") || tree.has("meteo.vane_directions")) {
    auto volts = tree.get_double_array("meteo.vane_voltages");
    auto dirs = tree.get_double_array("meteo.vane_directions");
    if (!volts || !dirs || volts->size() != dirs->size() || volts->empty()) {
      diags.push_back({"meteo.vane_voltages",
                       "vane_voltages and vane_directions must be equal-length arrays"});
    } else {
      cfg.meteo.vane_lookup.clear();
      for (size_t i = 0; i < volts->size(); ++i)
        cfg.meteo.vane_lookup.push_back(VaneEntry{(*volts)[i], (*dirs)[i]});
    }
  }

  {
    std::string mode = "none";
    L.str("sink.mode", mode);
    if (mode == "none") cfg.sink.mode = SinkMode::None;
    else if (mode == "file") cfg.sink.mode = SinkMode::File;
    else if (mode == "http") cfg.sink.mode = SinkMode::Http;
    else diags.push_back({"sink.mode", "expected none|file|http"});
  }
  L.str("sink.file_path", cfg.sink.file_path);
  L.str("sink.endpoint", cfg.sink.endpoint);
  L.str("sink.org", cfg.sink.org);
  L.str("sink.bucket", cfg.sink.bucket);
  L.str("sink.token", cfg.sink.token);
  L.integer("sink.backlog_max", cfg.sink.backlog_max);

  L.boolean("sync.enabled", cfg.sync.enabled);
  L.str("sync.target_dir", cfg.sync.target_dir);
  L.integer("sync.interval_min", cfg.sync.interval_min);

  L.integer("recovery.failure_threshold", cfg.failure_threshold);

  std::int64_t seed = static_cast<std::int64_t>(cfg.sim.seed);
  L.integer64("sim.seed", seed);
  cfg.sim.seed = static_cast<std::uint64_t>(seed);
  L.timestamp("sim.start", cfg.sim.start);
  L.str("sim.fault_script", cfg.sim.fault_script_path);
  L.boolean("sim.call_log", cfg.sim.call_log);
  {
    TimeMs sunrise = cfg.sim.env.sunrise_minute * kMinuteMs;
    TimeMs sunset = cfg.sim.env.sunset_minute * kMinuteMs;
    L.time_of_day("sim.sunrise", sunrise);
    L.time_of_day("sim.sunset", sunset);
    cfg.sim.env.sunrise_minute = static_cast<int>(sunrise / kMinuteMs);
    cfg.sim.env.sunset_minute = static_cast<int>(sunset / kMinuteMs);
  }
  L.num("sim.peak_irradiance", cfg.sim.env.peak_irradiance);
  L.num("sim.ambient_base", cfg.sim.env.ambient_base);
  L.num("sim.ambient_amplitude", cfg.sim.env.ambient_amplitude);
  {
    int lag_min = static_cast<int>(cfg.sim.env.ambient_lag_ms / kMinuteMs);
    L.integer("sim.ambient_lag_min", lag_min);
    cfg.sim.env.ambient_lag_ms = lag_min * kMinuteMs;
  }
  L.num("sim.humidity_base", cfg.sim.env.humidity_base);
  L.num("sim.humidity_drop", cfg.sim.env.humidity_drop);
  L.num("sim.wind_base_hz", cfg.sim.env.wind_base_hz);
  L.num("sim.wind_gust_hz", cfg.sim.env.wind_gust_hz);
  L.num("sim.rain_shower_probability", cfg.sim.env.rain_shower_probability);
  L.num("sim.rain_tips_per_minute", cfg.sim.env.rain_tips_per_minute);
  L.integer("sim.vane_fixed_index", cfg.sim.env.vane_fixed_index);
  L.num("sim.panel_vmp", cfg.sim.env.panel_vmp);
  L.num("sim.panel0_eff", cfg.sim.env.panel0_eff);
  L.num("sim.panel1_eff", cfg.sim.env.panel1_eff);
  L.num("sim.panel0_heating", cfg.sim.env.panel0_heating);
  L.num("sim.panel1_heating", cfg.sim.env.panel1_heating);
  L.num("sim.position_gradient", cfg.sim.env.position_gradient);
  L.num("sim.irr_minus_tap", cfg.sim.env.irr_minus_tap);

  for (const auto& [key, value] : tree.values()) {
    (void)value;
    bool known = false;
    for (const auto& s : L.seen)
      if (s == key) {
        known = true;
        break;
      }
    if (!known) diags.push_back({key, "unknown configuration key"});
  }

  for (const auto& d : cfg.validate()) diags.push_back(d);
  if (!diags.empty()) return diags;
  return cfg;
}

inline Result<RunConfig, std::vector<Diagnostic>> RunConfig::load(
    const std::filesystem::path& p) {
  auto tree = ConfigTree::load(p);
  if (!tree.ok())
    return std::vector<Diagnostic>{{p.string(), tree.error()}};
  return from_tree(tree.value());
}

}  // namespace pvdaq

#pragma once

#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "pvdaq/lockfile.hpp"
#include "pvdaq/state_file.hpp"

namespace pvdaq {

// newest daq_*.log in the log directory
inline std::optional<std::filesystem::path> newest_log(const std::filesystem::path& dir) {
  std::optional<std::filesystem::path> best;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("daq_", 0) != 0 || e.path().extension() != ".log") continue;
    if (!best || best->filename().string() < name) best = e.path();
  }
  return best;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// last N entries of the current log
inline Result<std::vector<std::string>, std::string> admin_recent(
    const std::filesystem::path& log_dir, size_t n) {
  auto log = newest_log(log_dir);
  if (!log) return std::string("no log files in " + log_dir.string());
  auto lines = read_lines(*log);
  if (lines.size() > n) lines.erase(lines.begin(), lines.end() - static_cast<long>(n));
  return lines;
}

// pattern search across all logs, newest file last; ECMAScript regex
inline Result<std::vector<std::string>, std::string> admin_grep(
    const std::filesystem::path& log_dir, const std::string& pattern) {
  std::regex re;
  try {
    re = std::regex(pattern);
  } catch (const std::regex_error& e) {
    return std::string("bad pattern: ") + e.what();
  }
  std::vector<std::filesystem::path> logs;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(log_dir, ec)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("daq_", 0) == 0 && e.path().extension() == ".log")
      logs.push_back(e.path());
  }
  if (logs.empty()) return std::string("no log files in " + log_dir.string());
  std::sort(logs.begin(), logs.end());
  std::vector<std::string> hits;
  for (const auto& log : logs) {
    const auto lines = read_lines(log);
    for (size_t i = 0; i < lines.size(); ++i)
      if (std::regex_search(lines[i], re))
        hits.push_back(log.filename().string() + ":" + std::to_string(i + 1) + ": " +
                       lines[i]);
  }
  return hits;
}

struct LogStats {
  std::map<std::string, std::uint64_t> level_counts;
  std::uint64_t reinit_count = 0;
  std::string last_frame_time;  // empty when no frame logged yet
  std::uint64_t total_lines = 0;
};

inline Result<LogStats, std::string> admin_stats(const std::filesystem::path& log_dir) {
  auto log = newest_log(log_dir);
  if (!log) return std::string("no log files in " + log_dir.string());
  LogStats stats;
  static const std::regex level_re(R"(\[(DEBUG|INFO|WARN|ERROR)\])");
  static const std::regex frame_re(R"(frame (\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}))");
  for (const auto& line : read_lines(*log)) {
    ++stats.total_lines;
    std::smatch m;
    if (std::regex_search(line, m, level_re)) ++stats.level_counts[m[1]];
    if (line.find("REINIT hardware reinitialization") != std::string::npos)
      ++stats.reinit_count;
    if (std::regex_search(line, m, frame_re)) stats.last_frame_time = m[1];
  }
  return stats;
}

inline std::string admin_state_text(const std::filesystem::path& state_dir) {
  const StateLoadResult r = load_state(state_dir);
  switch (r.kind) {
    case StateLoadKind::Absent:
      return "no saved session\n";
    case StateLoadKind::Corrupt:
      return "state file unusable: " + r.warning + "\n";
    case StateLoadKind::Loaded:
      break;
  }
  const SessionState& s = r.state;
  std::string out;
  out += "session date:     " + format_date(s.session_date) + "\n";
  out += "archive:          " + s.csv_path + "\n";
  out += "rows written:     " + std::to_string(s.rows_written) + "\n";
  out += "rain accumulated: " + std::to_string(s.rain_day_accum) + " mm\n";
  out += "recording:        " + std::string(s.recording ? "yes" : "no") + "\n";
  out += "last write:       " + format_iso(s.last_write) + "\n";
  return out;
}

// Clean-shutdown signal to the instance holding the state directory.
inline Result<pid_t, std::string> admin_stop(const std::filesystem::path& state_dir) {
  if (!InstanceLock::is_locked(state_dir))
    return std::string("no running instance for " + state_dir.string());
  auto pid = InstanceLock::read_pid(state_dir);
  if (!pid) return std::string("lock file holds no pid");
  if (::kill(*pid, SIGINT) != 0)
    return std::string("cannot signal pid " + std::to_string(*pid));
  return *pid;
}

// Follow the newest log to `out`, polling until `stop` returns true.
inline void admin_tail(const std::filesystem::path& log_dir, std::ostream& out,
                       const std::function<bool()>& stop) {
  std::streampos offset{0};
  std::filesystem::path current;
  while (!stop()) {
    auto log = newest_log(log_dir);
    if (log) {
      if (current != *log) {
        current = *log;
        offset = 0;
      }
      std::ifstream in(current);
      in.seekg(offset);
      std::string line;
      while (std::getline(in, line)) out << line << '\n';
      out.flush();
      if (in.eof()) in.clear();
      offset = in.tellg();
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(250));
  }
}

}  // namespace pvdaq

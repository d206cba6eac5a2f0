#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>

#include "pvdaq/civil_time.hpp"
#include "pvdaq/clock.hpp"

namespace pvdaq {

enum class LogLevel { Debug = 0, Info, Warn, Error };

inline const char* log_level_name(LogLevel l) {
  switch (l) {
    case LogLevel::Debug: return "DEBUG";
    case LogLevel::Info: return "INFO";
    case LogLevel::Warn: return "WARN";
    case LogLevel::Error: return "ERROR";
  }
  return "?";
}

// Line-oriented operations log: `<iso timestamp> [LEVEL] message`, rotated
// daily alongside the CSV archive as daq_YYYYMMDD.log.
class Logger {
 public:
  Logger(std::filesystem::path dir, Clock& clock, LogLevel min_level = LogLevel::Info,
         bool echo_stderr = false)
      : dir_(std::move(dir)), clock_(clock), min_level_(min_level), echo_(echo_stderr) {
    std::filesystem::create_directories(dir_);
  }

  void log(LogLevel level, const std::string& message) {
    if (level < min_level_) return;
    std::lock_guard<std::mutex> lock(mutex_);
    const TimeMs now = clock_.now();
    rotate_if_needed(now);
    const std::string line =
        format_iso(now) + " [" + log_level_name(level) + "] " + message;
    if (out_.is_open()) {
      out_ << line << '\n';
      out_.flush();
    }
    if (echo_) std::cerr << line << '\n';
  }

  void debug(const std::string& m) { log(LogLevel::Debug, m); }
  void info(const std::string& m) { log(LogLevel::Info, m); }
  void warn(const std::string& m) { log(LogLevel::Warn, m); }
  void error(const std::string& m) { log(LogLevel::Error, m); }

  std::filesystem::path current_file() {
    std::lock_guard<std::mutex> lock(mutex_);
    rotate_if_needed(clock_.now());
    return current_path_;
  }

  static std::filesystem::path file_for_date(const std::filesystem::path& dir, TimeMs t) {
    return dir / ("daq_" + format_date_compact(t) + ".log");
  }

 private:
  void rotate_if_needed(TimeMs now) {
    const TimeMs day = day_start(now);
    if (day == current_day_ && out_.is_open()) return;
    if (out_.is_open()) out_.close();
    current_day_ = day;
    current_path_ = file_for_date(dir_, now);
    out_.open(current_path_, std::ios::app);
  }

  std::filesystem::path dir_;
  Clock& clock_;
  LogLevel min_level_;
  bool echo_;
  std::mutex mutex_;
  std::ofstream out_;
  TimeMs current_day_ = std::numeric_limits<TimeMs>::min();
  std::filesystem::path current_path_;
};

}  // namespace pvdaq

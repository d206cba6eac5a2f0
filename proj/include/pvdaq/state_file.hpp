#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "pvdaq/civil_time.hpp"
#include "pvdaq/result.hpp"

namespace pvdaq {

inline constexpr int kStateSchemaVersion = 1;
inline constexpr const char* kStateFileName = "daq_state.txt";

// Persisted recovery record. Human-readable key=value lines so a field tech
// can read and, in a pinch, repair it.
struct SessionState {
  int schema_version = kStateSchemaVersion;
  TimeMs session_date = 0;  // midnight of the recording day
  std::string csv_path;
  std::uint64_t rows_written = 0;
  double rain_day_accum = 0.0;
  // reported = offset + monitor reading; last lets resume detect a monitor
  // that lost its accumulator to the power cycle
  double p0_energy_offset = 0.0;
  double p1_energy_offset = 0.0;
  double p0_last_energy = 0.0;
  double p1_last_energy = 0.0;
  bool recording = false;
  TimeMs last_write = 0;

  std::string serialize() const {
    std::ostringstream os;
    os << "schema_version = " << schema_version << '\n';
    os << "session_date = " << format_date(session_date) << '\n';
    os << "csv_path = " << csv_path << '\n';
    os << "rows_written = " << rows_written << '\n';
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", rain_day_accum);
    os << "rain_day_accum = " << buf << '\n';
    std::snprintf(buf, sizeof(buf), "%.3f", p0_energy_offset);
    os << "p0_energy_offset = " << buf << '\n';
    std::snprintf(buf, sizeof(buf), "%.3f", p1_energy_offset);
    os << "p1_energy_offset = " << buf << '\n';
    std::snprintf(buf, sizeof(buf), "%.3f", p0_last_energy);
    os << "p0_last_energy = " << buf << '\n';
    std::snprintf(buf, sizeof(buf), "%.3f", p1_last_energy);
    os << "p1_last_energy = " << buf << '\n';
    os << "recording = " << (recording ? "true" : "false") << '\n';
    os << "last_write = " << format_iso(last_write) << '\n';
    return os.str();
  }
};

enum class StateIoError { IoError };

// Every externally observable step of the atomic write; crash-injection
// tests abort at each one and assert the reload is never torn.
enum class StateWriteStep {
  BeforeTmpWrite,
  AfterPartialWrite,
  AfterTmpWrite,
  AfterTmpSync,
  AfterRename,
};

// Returning false simulates the process dying at that step.
using StateCrashHook = std::function<bool(StateWriteStep)>;

inline std::filesystem::path state_file_path(const std::filesystem::path& state_dir) {
  return state_dir / kStateFileName;
}

// Temp-write + fsync + atomic rename: a crash at any instant leaves either
// the previous complete state or the new complete state on disk.
inline Status<StateIoError> write_state(const std::filesystem::path& state_dir,
                                        const SessionState& state,
                                        const StateCrashHook& crash = {}) {
  std::error_code ec;
  std::filesystem::create_directories(state_dir, ec);
  const std::filesystem::path final_path = state_file_path(state_dir);
  const std::filesystem::path tmp_path = final_path.string() + ".tmp";
  const std::string content = state.serialize();

  if (crash && !crash(StateWriteStep::BeforeTmpWrite)) return StateIoError::IoError;

  const int fd = ::open(tmp_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) return StateIoError::IoError;

  const size_t half = content.size() / 2;
  if (::write(fd, content.data(), half) != static_cast<ssize_t>(half)) {
    ::close(fd);
    return StateIoError::IoError;
  }
  if (crash && !crash(StateWriteStep::AfterPartialWrite)) {
    ::close(fd);
    return StateIoError::IoError;
  }
  if (::write(fd, content.data() + half, content.size() - half) !=
      static_cast<ssize_t>(content.size() - half)) {
    ::close(fd);
    return StateIoError::IoError;
  }
  if (crash && !crash(StateWriteStep::AfterTmpWrite)) {
    ::close(fd);
    return StateIoError::IoError;
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    return StateIoError::IoError;
  }
  ::close(fd);
  if (crash && !crash(StateWriteStep::AfterTmpSync)) return StateIoError::IoError;

  std::filesystem::rename(tmp_path, final_path, ec);
  if (ec) return StateIoError::IoError;
  if (crash && !crash(StateWriteStep::AfterRename)) return StateIoError::IoError;

  // direct the directory entry update to disk as well (best effort)
  const int dirfd = ::open(state_dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dirfd >= 0) {
    ::fsync(dirfd);
    ::close(dirfd);
  }
  return {};
}

enum class StateLoadKind { Loaded, Absent, Corrupt };

struct StateLoadResult {
  StateLoadKind kind = StateLoadKind::Absent;
  SessionState state;
  std::string warning;  // populated for Corrupt

  bool loaded() const { return kind == StateLoadKind::Loaded; }
};

// Absent when missing; unparsable or schema-mismatched files are reported as
// Corrupt and treated as Absent by the caller, with a logged warning.
inline StateLoadResult load_state(const std::filesystem::path& state_dir) {
  StateLoadResult out;
  const auto path = state_file_path(state_dir);
  std::ifstream in(path);
  if (!in) {
    out.kind = StateLoadKind::Absent;
    return out;
  }
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      out.kind = StateLoadKind::Corrupt;
      out.warning = "state file line without '=': " + line;
      return out;
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      while (!s.empty() && s.front() == ' ') s.erase(0, 1);
      while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
    };
    trim(key);
    trim(value);
    kv[key] = value;
  }

  auto corrupt = [&](const std::string& why) {
    out.kind = StateLoadKind::Corrupt;
    out.warning = why;
    return out;
  };

  const char* required[] = {"schema_version", "session_date", "csv_path",
                            "rows_written",   "rain_day_accum", "recording",
                            "last_write"};
  for (const char* key : required)
    if (!kv.count(key)) return corrupt(std::string("missing key: ") + key);

  try {
    out.state.schema_version = std::stoi(kv["schema_version"]);
    if (out.state.schema_version != kStateSchemaVersion)
      return corrupt("schema_version mismatch: " + kv["schema_version"]);
    auto date = parse_iso(kv["session_date"]);
    if (!date) return corrupt("bad session_date: " + kv["session_date"]);
    out.state.session_date = *date;
    out.state.csv_path = kv["csv_path"];
    if (out.state.csv_path.empty()) return corrupt("empty csv_path");
    out.state.rows_written = std::stoull(kv["rows_written"]);
    out.state.rain_day_accum = std::stod(kv["rain_day_accum"]);
    out.state.p0_energy_offset = std::stod(kv.count("p0_energy_offset") ? kv["p0_energy_offset"] : "0");
    out.state.p1_energy_offset = std::stod(kv.count("p1_energy_offset") ? kv["p1_energy_offset"] : "0");
    out.state.p0_last_energy = std::stod(kv.count("p0_last_energy") ? kv["p0_last_energy"] : "0");
    out.state.p1_last_energy = std::stod(kv.count("p1_last_energy") ? kv["p1_last_energy"] : "0");
    if (kv["recording"] == "true") out.state.recording = true;
    else if (kv["recording"] == "false") out.state.recording = false;
    else return corrupt("bad recording flag: " + kv["recording"]);
    auto lw = parse_iso(kv["last_write"]);
    if (!lw) return corrupt("bad last_write: " + kv["last_write"]);
    out.state.last_write = *lw;
  } catch (const std::exception& e) {
    return corrupt(std::string("unparsable state value: ") + e.what());
  }

  out.kind = StateLoadKind::Loaded;
  return out;
}

}  // namespace pvdaq

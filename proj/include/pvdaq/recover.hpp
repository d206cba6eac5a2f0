#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "pvdaq/civil_time.hpp"
#include "pvdaq/config.hpp"
#include "pvdaq/csv_store.hpp"
#include "pvdaq/hal.hpp"
#include "pvdaq/log.hpp"
#include "pvdaq/state_file.hpp"

namespace pvdaq {

enum class RecoveryMode { Resume, FreshActive, FreshIdle };

inline const char* recovery_mode_name(RecoveryMode m) {
  switch (m) {
    case RecoveryMode::Resume: return "RESUME";
    case RecoveryMode::FreshActive: return "FRESH_ACTIVE";
    case RecoveryMode::FreshIdle: return "FRESH_IDLE";
  }
  return "?";
}

enum class RecoveryReason {
  ResumeOk,
  NoState,
  StateCorrupt,
  DateMismatch,
  OutOfWindow,
  IntegrityFailed,
  NotRecording,
};

inline const char* recovery_reason_name(RecoveryReason r) {
  switch (r) {
    case RecoveryReason::ResumeOk: return "RESUME_OK";
    case RecoveryReason::NoState: return "NO_STATE";
    case RecoveryReason::StateCorrupt: return "STATE_CORRUPT";
    case RecoveryReason::DateMismatch: return "DATE_MISMATCH";
    case RecoveryReason::OutOfWindow: return "OUT_OF_WINDOW";
    case RecoveryReason::IntegrityFailed: return "INTEGRITY_FAILED";
    case RecoveryReason::NotRecording: return "NOT_RECORDING";
  }
  return "?";
}

struct RecoveryDecision {
  RecoveryMode mode = RecoveryMode::FreshIdle;
  RecoveryReason reason = RecoveryReason::NoState;
};

// Archive integrity for resume: file exists, header matches, every line
// parses, and the file holds at least the rows the state claims (a crash
// between append and state write legitimately leaves extra rows).
inline bool csv_integrity_ok(const SessionState& state) {
  if (state.csv_path.empty()) return false;
  auto parsed = parse_csv_file(state.csv_path);
  if (!parsed.ok()) return false;
  if (parsed.value().rows.size() < state.rows_written) return false;
  TimeMs prev = std::numeric_limits<TimeMs>::min();
  for (const auto& row : parsed.value().rows) {
    if (row.timestamp <= prev) return false;  // duplicates or disorder
    prev = row.timestamp;
  }
  return true;
}

// Session continuation decision. Resume requires, in evaluation order:
// usable saved state, same calendar day, inside the operational window,
// archive integrity, and a previous recording-in-progress flag. Every input
// maps to a decision; the first failed criterion names the reason.
inline RecoveryDecision evaluate_recovery(const StateLoadResult& saved, TimeMs now,
                                          const WindowConfig& window) {
  const bool in_window = window.contains(now);
  const RecoveryMode fresh = in_window ? RecoveryMode::FreshActive : RecoveryMode::FreshIdle;

  if (saved.kind == StateLoadKind::Absent)
    return {fresh, RecoveryReason::NoState};
  if (saved.kind == StateLoadKind::Corrupt)
    return {fresh, RecoveryReason::StateCorrupt};
  if (saved.state.session_date != day_start(now))
    return {fresh, RecoveryReason::DateMismatch};
  if (!in_window) return {fresh, RecoveryReason::OutOfWindow};
  if (!csv_integrity_ok(saved.state))
    return {fresh, RecoveryReason::IntegrityFailed};
  if (!saved.state.recording) return {fresh, RecoveryReason::NotRecording};
  return {RecoveryMode::Resume, RecoveryReason::ResumeOk};
}

enum class CycleAction { Continue, Reinitialize };

// Consecutive-failure escalation. A clean cycle resets the streak; the Nth
// consecutive failure fires a reinitialization and restarts the count.
class ErrorCounter {
 public:
  explicit ErrorCounter(int threshold = 10) : threshold_(threshold) {}

  CycleAction record_cycle_result(bool ok) {
    if (ok) {
      consecutive_ = 0;
      return CycleAction::Continue;
    }
    ++total_;
    if (++consecutive_ >= threshold_) {
      consecutive_ = 0;
      return CycleAction::Reinitialize;
    }
    return CycleAction::Continue;
  }

  void record_read_failure() { ++total_reads_; }

  int consecutive_failures() const { return consecutive_; }
  std::uint64_t total_cycle_failures() const { return total_; }
  std::uint64_t total_read_failures() const { return total_reads_; }
  int threshold() const { return threshold_; }

 private:
  int threshold_;
  int consecutive_ = 0;
  std::uint64_t total_ = 0;
  std::uint64_t total_reads_ = 0;
};

// Re-runs the hal initialization sequence after an escalation; transient bus
// lockups clear, scripted faults of course persist. Failure leaves the
// counter armed to fire again.
inline bool reinitialize_hardware(Hal& hal, Logger& log) {
  log.warn("REINIT hardware reinitialization triggered");
  auto status = hal.initialize();
  if (!status.ok()) {
    log.error("REINIT failed: " + std::string(hal_error_name(status.error())));
    return false;
  }
  log.info("REINIT completed");
  return true;
}

struct HealthReport {
  bool archive_open = false;
  bool rows_consistent = false;
  std::uint64_t state_rows = 0;
  std::uint64_t file_rows = 0;
  size_t backlog_pending = 0;
  size_t backlog_high_water = 0;
  std::uint64_t total_read_failures = 0;
  std::uint64_t total_cycle_failures = 0;

  bool all_green() const { return archive_open && rows_consistent; }
};

// Cheap row count: data lines in the file, no full parse.
inline std::uint64_t count_csv_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return 0;
  std::uint64_t lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  return lines == 0 ? 0 : lines - 1;  // minus header
}

}  // namespace pvdaq

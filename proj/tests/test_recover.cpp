#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "pvdaq/csv_store.hpp"
#include "pvdaq/noise.hpp"
#include "pvdaq/recover.hpp"

using namespace pvdaq;

namespace {

const TimeMs kDay = ms_from_civil(2025, 3, 10);

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("pvdaq_rec_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

// intact archive with `rows` frames, one per minute from 05:00
std::filesystem::path make_archive(const std::filesystem::path& dir, int rows) {
  auto csv = DailyCsv::open(dir, kDay, DailyCsv::OpenMode::AppendOrCreate);
  REQUIRE(csv.ok());
  for (int i = 0; i < rows; ++i) {
    MeasurementFrame f;
    f.timestamp = kDay + 5 * kHourMs + i * kMinuteMs;
    for (int j = 0; j < kFieldCount; ++j) f.set(static_cast<Field>(j), j);
    REQUIRE(csv.value().append(f).ok());
  }
  return csv.value().path();
}

StateLoadResult loaded_state(const std::filesystem::path& csv_path, int rows,
                             TimeMs date = kDay, bool recording = true) {
  StateLoadResult r;
  r.kind = StateLoadKind::Loaded;
  r.state.session_date = date;
  r.state.csv_path = csv_path.string();
  r.state.rows_written = static_cast<std::uint64_t>(rows);
  r.state.recording = recording;
  r.state.last_write = date + 5 * kHourMs + rows * kMinuteMs;
  return r;
}

StateLoadResult absent_state() { return StateLoadResult{}; }

}  // namespace

TEST_CASE("recovery decision matrix", "[recover]") {
  const WindowConfig window;
  TempDir dir;
  const auto csv = make_archive(dir.path, 30);

  SECTION("same-day intact mid-window recording resumes") {
    const auto d = evaluate_recovery(loaded_state(csv, 30), kDay + 12 * kHourMs, window);
    CHECK(d.mode == RecoveryMode::Resume);
    CHECK(d.reason == RecoveryReason::ResumeOk);
  }

  SECTION("restart before the window idles") {
    const auto d = evaluate_recovery(absent_state(), kDay + 4 * kHourMs + 30 * kMinuteMs,
                                     window);
    CHECK(d.mode == RecoveryMode::FreshIdle);
    CHECK(d.reason == RecoveryReason::NoState);
  }

  SECTION("restart after hours idles with clean counters") {
    const auto d = evaluate_recovery(loaded_state(csv, 30), kDay + 19 * kHourMs, window);
    CHECK(d.mode == RecoveryMode::FreshIdle);
    CHECK(d.reason == RecoveryReason::OutOfWindow);
  }

  SECTION("yesterday's state today starts fresh") {
    const auto d = evaluate_recovery(loaded_state(csv, 30, kDay - kDayMs),
                                     kDay + 9 * kHourMs, window);
    CHECK(d.mode == RecoveryMode::FreshActive);
    CHECK(d.reason == RecoveryReason::DateMismatch);
  }

  SECTION("truncated archive fails integrity") {
    // tear through the last row so its cell count no longer matches
    const auto size = std::filesystem::file_size(csv);
    std::filesystem::resize_file(csv, size - 40);
    const auto d = evaluate_recovery(loaded_state(csv, 30), kDay + 12 * kHourMs, window);
    CHECK(d.mode == RecoveryMode::FreshActive);
    CHECK(d.reason == RecoveryReason::IntegrityFailed);
  }

  SECTION("fewer rows than the state claims fails integrity") {
    const auto d = evaluate_recovery(loaded_state(csv, 31), kDay + 12 * kHourMs, window);
    CHECK(d.mode == RecoveryMode::FreshActive);
    CHECK(d.reason == RecoveryReason::IntegrityFailed);
  }

  SECTION("more rows than the state claims is fine") {
    const auto d = evaluate_recovery(loaded_state(csv, 29), kDay + 12 * kHourMs, window);
    CHECK(d.mode == RecoveryMode::Resume);
  }

  SECTION("previous session not recording starts fresh") {
    const auto d = evaluate_recovery(loaded_state(csv, 30, kDay, false),
                                     kDay + 12 * kHourMs, window);
    CHECK(d.mode == RecoveryMode::FreshActive);
    CHECK(d.reason == RecoveryReason::NotRecording);
  }

  SECTION("corrupt state behaves like absent") {
    StateLoadResult corrupt;
    corrupt.kind = StateLoadKind::Corrupt;
    const auto d = evaluate_recovery(corrupt, kDay + 12 * kHourMs, window);
    CHECK(d.mode == RecoveryMode::FreshActive);
    CHECK(d.reason == RecoveryReason::StateCorrupt);
  }
}

TEST_CASE("recovery is total and RESUME implies all criteria", "[recover][property]") {
  const WindowConfig window;
  TempDir dir;
  const auto good_csv = make_archive(dir.path, 10);

  for (int trial = 0; trial < 500; ++trial) {
    StateLoadResult saved;
    const double kind_pick = unit_noise(21, 1, trial);
    if (kind_pick < 0.2) saved.kind = StateLoadKind::Absent;
    else if (kind_pick < 0.3) saved.kind = StateLoadKind::Corrupt;
    else {
      saved.kind = StateLoadKind::Loaded;
      saved.state.session_date =
          kDay + (static_cast<TimeMs>(unit_noise(21, 2, trial) * 5) - 2) * kDayMs;
      saved.state.csv_path = unit_noise(21, 3, trial) < 0.7
                                 ? good_csv.string()
                                 : (dir.path / "missing.csv").string();
      saved.state.rows_written = static_cast<std::uint64_t>(unit_noise(21, 4, trial) * 20);
      saved.state.recording = unit_noise(21, 5, trial) < 0.7;
    }
    const TimeMs now = kDay + static_cast<TimeMs>(unit_noise(21, 6, trial) * kDayMs);

    const RecoveryDecision d = evaluate_recovery(saved, now, window);

    // independent re-derivation of the four criteria
    const bool crit_state = saved.kind == StateLoadKind::Loaded;
    const bool crit_date = crit_state && saved.state.session_date == day_start(now);
    const bool crit_window = ms_of_day(now) >= window.start && ms_of_day(now) < window.end;
    const bool crit_integrity = crit_state && csv_integrity_ok(saved.state);
    const bool crit_recording = crit_state && saved.state.recording;
    const bool resume_expected =
        crit_state && crit_date && crit_window && crit_integrity && crit_recording;

    REQUIRE((d.mode == RecoveryMode::Resume) == resume_expected);
    if (!resume_expected)
      REQUIRE(d.mode ==
              (crit_window ? RecoveryMode::FreshActive : RecoveryMode::FreshIdle));
  }
}

TEST_CASE("error counter threshold semantics", "[recover]") {
  SECTION("nine failures then success never fires") {
    ErrorCounter c(10);
    for (int i = 0; i < 9; ++i)
      CHECK(c.record_cycle_result(false) == CycleAction::Continue);
    CHECK(c.record_cycle_result(true) == CycleAction::Continue);
    CHECK(c.consecutive_failures() == 0);
  }
  SECTION("the tenth consecutive failure reinitializes") {
    ErrorCounter c(10);
    for (int i = 0; i < 9; ++i)
      REQUIRE(c.record_cycle_result(false) == CycleAction::Continue);
    CHECK(c.record_cycle_result(false) == CycleAction::Reinitialize);
    CHECK(c.consecutive_failures() == 0);  // streak restarts after firing
  }
  SECTION("alternating failure and success never fires") {
    ErrorCounter c(10);
    for (int i = 0; i < 1000; ++i) {
      CHECK(c.record_cycle_result(false) == CycleAction::Continue);
      CHECK(c.record_cycle_result(true) == CycleAction::Continue);
    }
  }
  SECTION("totals accumulate while the streak resets") {
    ErrorCounter c(10);
    (void)c.record_cycle_result(false);
    (void)c.record_cycle_result(true);
    (void)c.record_cycle_result(false);
    CHECK(c.total_cycle_failures() == 2);
  }
}

TEST_CASE("reinit fires exactly on the Nth consecutive failure for N in 1..20",
          "[recover][property]") {
  for (int threshold = 1; threshold <= 20; ++threshold) {
    ErrorCounter counter(threshold);
    int streak = 0;
    for (int step = 0; step < 2000; ++step) {
      const bool ok = unit_noise(31, threshold, step) < 0.4;
      const CycleAction action = counter.record_cycle_result(ok);
      if (ok) {
        streak = 0;
        REQUIRE(action == CycleAction::Continue);
      } else {
        ++streak;
        if (streak == threshold) {
          REQUIRE(action == CycleAction::Reinitialize);
          streak = 0;
        } else {
          REQUIRE(action == CycleAction::Continue);
        }
      }
    }
  }
}

TEST_CASE("csv row counting", "[recover]") {
  TempDir dir;
  const auto csv = make_archive(dir.path, 12);
  CHECK(count_csv_rows(csv) == 12);
  CHECK(count_csv_rows(dir.path / "missing.csv") == 0);
}

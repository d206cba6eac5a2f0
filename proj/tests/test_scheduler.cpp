#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace pvdaq;
using pvdaq::testing::TestWorld;
using Catch::Approx;

namespace {

const TimeMs kDay = ms_from_civil(2025, 3, 10);

void set_window(TestWorld& w, int start_min, int end_min) {
  w.config.window.start = start_min * kMinuteMs;
  w.config.window.end = end_min * kMinuteMs;
}

}  // namespace

TEST_CASE("a session window yields one frame per minute boundary", "[scheduler]") {
  TestWorld w;
  set_window(w, 6 * 60, 6 * 60 + 10);  // 06:00 .. 06:10
  w.build(kDay + 6 * kHourMs);
  const auto decision = w.start();
  CHECK(decision.mode == RecoveryMode::FreshActive);

  w.run_until(kDay + 6 * kHourMs + 12 * kMinuteMs);

  REQUIRE(w.frames.size() == 10);  // 06:00 .. 06:09
  for (size_t i = 0; i < w.frames.size(); ++i) {
    CHECK(w.frames[i].timestamp == kDay + 6 * kHourMs + static_cast<TimeMs>(i) * kMinuteMs);
    CHECK(w.frames[i].fully_valid());
  }

  // archived rows match the emitted frames
  auto parsed = parse_csv_file(w.daemon->scheduler().csv_path());
  REQUIRE(parsed.ok());
  CHECK(parsed.value().rows.size() == 10);

  // end of day closed the session and left a non-recording state
  const auto state = load_state(w.config.state_dir);
  REQUIRE(state.kind == StateLoadKind::Loaded);
  CHECK_FALSE(state.state.recording);
  CHECK(state.state.rows_written == 10);
  CHECK_FALSE(w.daemon->scheduler().session_active());
}

TEST_CASE("frames carry the scheduling minute, values read after it", "[scheduler]") {
  TestWorld w;
  set_window(w, 6 * 60, 6 * 60 + 2);
  w.build(kDay + 6 * kHourMs);
  w.start();
  w.run_until(kDay + 6 * kHourMs + 3 * kMinuteMs);

  REQUIRE(w.frames.size() == 2);
  CHECK(w.frames[0].timestamp == kDay + 6 * kHourMs);
  CHECK(w.frames[1].timestamp == kDay + 6 * kHourMs + kMinuteMs);
  CHECK(ms_of_day(w.frames[0].timestamp) % kMinuteMs == 0);
}

TEST_CASE("idle before the window, recording from its first minute", "[scheduler]") {
  TestWorld w;
  set_window(w, 6 * 60, 6 * 60 + 5);
  w.build(kDay + 5 * kHourMs + 58 * kMinuteMs);  // boots 05:58
  const auto decision = w.start();
  CHECK(decision.mode == RecoveryMode::FreshIdle);

  w.run_until(kDay + 6 * kHourMs + 7 * kMinuteMs);
  REQUIRE(w.frames.size() == 5);
  CHECK(w.frames.front().timestamp == kDay + 6 * kHourMs);
}

TEST_CASE("mid-window start produces the next boundary first", "[scheduler]") {
  TestWorld w;
  set_window(w, 6 * 60, 6 * 60 + 10);
  w.build(kDay + 6 * kHourMs + 3 * kMinuteMs + 30 * kSecondMs);  // 06:03:30
  const auto decision = w.start();
  CHECK(decision.mode == RecoveryMode::FreshActive);

  w.run_until(kDay + 6 * kHourMs + 12 * kMinuteMs);
  REQUIRE_FALSE(w.frames.empty());
  CHECK(w.frames.front().timestamp == kDay + 6 * kHourMs + 4 * kMinuteMs);
  CHECK(w.frames.size() == 6);  // 06:04 .. 06:09
}

TEST_CASE("health verification runs every fifth minute", "[scheduler]") {
  TestWorld w;
  set_window(w, 6 * 60, 7 * 60);  // one hour
  w.build(kDay + 6 * kHourMs);
  w.start();
  w.run_until(kDay + 7 * kHourMs + kMinuteMs);

  CHECK(w.frames.size() == 60);
  CHECK(w.daemon->scheduler().health_reports() == 12);  // 06:00, 06:05, ... 06:55
}

TEST_CASE("archive write failure retains the frame and retries next minute",
          "[scheduler]") {
  TestWorld w;
  set_window(w, 6 * 60, 6 * 60 + 6);
  int failures = 2;
  w.config_archive_fault = [&failures] {
    if (failures > 0) {
      --failures;
      return true;
    }
    return false;
  };
  w.build(kDay + 6 * kHourMs);
  w.start();
  w.run_until(kDay + 6 * kHourMs + 8 * kMinuteMs);

  CHECK(w.frames.size() == 6);
  auto parsed = parse_csv_file(w.daemon->scheduler().csv_path());
  REQUIRE(parsed.ok());
  // every frame eventually lands, in order, no duplicates
  REQUIRE(parsed.value().rows.size() == 6);
  for (size_t i = 0; i < parsed.value().rows.size(); ++i)
    CHECK(parsed.value().rows[i].timestamp ==
          kDay + 6 * kHourMs + static_cast<TimeMs>(i) * kMinuteMs);
}

TEST_CASE("a fully flagged cycle streak triggers reinitialization", "[scheduler]") {
  TestWorld w;
  set_window(w, 6 * 60, 6 * 60 + 30);
  w.config.failure_threshold = 5;
  // every analog signal dies: frames go fully flagged on the bus-read fields
  FaultScript script({
      FaultEntry{kDay + 6 * kHourMs + 2 * kMinuteMs, SensorFail{"SEL", 20 * kMinuteMs}},
      FaultEntry{kDay + 6 * kHourMs + 2 * kMinuteMs, SensorFail{"DHT", 20 * kMinuteMs}},
      FaultEntry{kDay + 6 * kHourMs + 2 * kMinuteMs, SensorFail{"P0", 20 * kMinuteMs}},
      FaultEntry{kDay + 6 * kHourMs + 2 * kMinuteMs, SensorFail{"P1", 20 * kMinuteMs}},
      FaultEntry{kDay + 6 * kHourMs + 2 * kMinuteMs, SensorFail{"WIND_VANE", 20 * kMinuteMs}},
  });
  w.build(kDay + 6 * kHourMs, std::move(script));
  w.start();
  w.run_until(kDay + 6 * kHourMs + 31 * kMinuteMs);

  CHECK(w.daemon->scheduler().reinit_events() >= 1);
  CHECK(w.frames.size() == 30);  // partial capture continues throughout
}

TEST_CASE("rain accumulation resets at day start", "[scheduler]") {
  TestWorld w;
  set_window(w, 6 * 60, 6 * 60 + 10);
  w.config.sim.env.rain_shower_probability = 1.0;  // always raining
  w.config.sim.env.rain_tips_per_minute = 2.0;
  w.build(kDay + 6 * kHourMs);
  w.start();

  w.run_until(kDay + 6 * kHourMs + 11 * kMinuteMs);
  const auto day1 = load_state(w.config.state_dir);
  REQUIRE(day1.kind == StateLoadKind::Loaded);
  const double day1_accum = day1.state.rain_day_accum;
  CHECK(day1_accum > 0.0);

  // run on into the same window next day
  w.run_until(kDay + kDayMs + 6 * kHourMs + 11 * kMinuteMs);
  const auto day2 = load_state(w.config.state_dir);
  REQUIRE(day2.kind == StateLoadKind::Loaded);
  CHECK(day2.state.session_date == kDay + kDayMs);
  // reset at day start: accumulation equals one day's worth, not two
  CHECK(day2.state.rain_day_accum == Approx(day1_accum).epsilon(0.25));
  CHECK(day2.state.rain_day_accum < 1.5 * day1_accum);
}

TEST_CASE("shutdown inside the window preserves recording", "[scheduler]") {
  TestWorld w;
  set_window(w, 6 * 60, 18 * 60);
  w.build(kDay + 6 * kHourMs);
  w.start();
  w.run_until(kDay + 6 * kHourMs + 5 * kMinuteMs + 30 * kSecondMs);

  w.daemon->shutdown();
  const auto state = load_state(w.config.state_dir);
  REQUIRE(state.kind == StateLoadKind::Loaded);
  CHECK(state.state.recording);
  CHECK(state.state.session_date == kDay);
  CHECK(state.state.rows_written == 6);

  // a second shutdown is ignored
  w.daemon->shutdown();
  CHECK(load_state(w.config.state_dir).state.rows_written == 6);
}

TEST_CASE("shutdown after hours leaves a non-recording state", "[scheduler]") {
  TestWorld w;
  set_window(w, 6 * 60, 6 * 60 + 5);
  w.build(kDay + 6 * kHourMs);
  w.start();
  w.run_until(kDay + 6 * kHourMs + 30 * kMinuteMs);  // end-of-day long past

  w.daemon->shutdown();
  const auto state = load_state(w.config.state_dir);
  REQUIRE(state.kind == StateLoadKind::Loaded);
  CHECK_FALSE(state.state.recording);
}

TEST_CASE("cadence holds under sensor faults", "[scheduler][property]") {
  TestWorld w;
  set_window(w, 6 * 60, 6 * 60 + 20);
  FaultScript script({
      FaultEntry{kDay + 6 * kHourMs + 3 * kMinuteMs, SensorFail{"T4", 5 * kMinuteMs}},
      FaultEntry{kDay + 6 * kHourMs + 7 * kMinuteMs, SensorFail{"IRR+", 2 * kMinuteMs}},
      FaultEntry{kDay + 6 * kHourMs + 9 * kMinuteMs, SensorFail{"DHT", 4 * kMinuteMs}},
  });
  w.build(kDay + 6 * kHourMs, std::move(script));
  w.start();
  w.run_until(kDay + 6 * kHourMs + 22 * kMinuteMs);

  REQUIRE(w.frames.size() == 20);
  for (size_t i = 1; i < w.frames.size(); ++i)
    REQUIRE(w.frames[i].timestamp - w.frames[i - 1].timestamp == kMinuteMs);
}

TEST_CASE("sink backlog drains during an outage window", "[scheduler][sink]") {
  TestWorld w;
  set_window(w, 6 * 60, 6 * 60 + 30);
  FaultScript script(
      {FaultEntry{kDay + 6 * kHourMs + 5 * kMinuteMs, NetOutage{10 * kMinuteMs}}});
  w.build(kDay + 6 * kHourMs, std::move(script));
  w.start();
  w.run_until(kDay + 6 * kHourMs + 31 * kMinuteMs);

  CHECK(w.frames.size() == 30);
  // everything reached the sink by day end, in timestamp order
  CHECK(w.sink.delivered_frames() == 30);
  CHECK(w.backlog->empty());
  CHECK(w.backlog->high_water() >= 10);  // queued through the outage
}

TEST_CASE("ambient fault through a full minute flags only its fields", "[scheduler]") {
  TestWorld w;
  set_window(w, 6 * 60, 6 * 60 + 5);
  FaultScript script(
      {FaultEntry{kDay + 6 * kHourMs + kMinuteMs, SensorFail{"DHT", 2 * kMinuteMs}}});
  w.build(kDay + 6 * kHourMs, std::move(script));
  w.start();
  w.run_until(kDay + 6 * kHourMs + 6 * kMinuteMs);

  REQUIRE(w.frames.size() == 5);
  for (const auto& frame : w.frames) {
    const int minute = minute_of_day(frame.timestamp) - 6 * 60;
    const bool expect_flagged = minute == 2;  // the only window with zero samples
    INFO("minute " << minute);
    CHECK(frame.is_valid(Field::AmbientTemp) == !expect_flagged);
    CHECK(frame.is_valid(Field::Humidity) == !expect_flagged);
    for (int i = 0; i < 20; ++i) CHECK(frame.is_valid(thermistor_field(i)));
    CHECK(frame.is_valid(Field::Irradiance));
    CHECK(frame.is_valid(Field::WindSpeed));
  }
}

TEST_CASE("wind average uses the past sixty seconds of pulses", "[scheduler]") {
  TestWorld w;
  set_window(w, 6 * 60, 6 * 60 + 3);
  w.config.sim.env.wind_base_hz = 1.0;  // exactly 60 pulses per minute
  w.config.sim.env.wind_gust_hz = 0.0;
  w.build(kDay + 6 * kHourMs);
  w.start();
  w.run_until(kDay + 6 * kHourMs + 4 * kMinuteMs);

  REQUIRE(w.frames.size() == 3);
  // second and later frames have a full 60 s accumulator behind them
  CHECK(w.frames[1].value(Field::WindSpeed) == Approx(0.667));
  CHECK(w.frames[2].value(Field::WindSpeed) == Approx(0.667));
}

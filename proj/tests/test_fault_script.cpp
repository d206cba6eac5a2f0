#include <catch2/catch_amalgamated.hpp>

#include "pvdaq/civil_time.hpp"
#include "pvdaq/fault_script.hpp"

using namespace pvdaq;

namespace {
const TimeMs kDay = ms_from_civil(2025, 3, 10);
}

TEST_CASE("fault script parsing", "[fault_script]") {
  const char* text = R"([
    {"kind": "net_outage",  "at": "11:00:00", "duration_s": 2700},
    {"kind": "sensor_fail", "at": "10:00:00", "signal": "T11", "duration_s": 1200},
    {"kind": "power_cycle", "at": "2025-03-10T12:00:30", "downtime_s": 120}
  ])";

  auto parsed = FaultScript::parse_json(text, kDay);
  REQUIRE(parsed.ok());
  const FaultScript& s = parsed.value();
  REQUIRE(s.entries().size() == 3);

  // sorted by activation time regardless of file order
  CHECK(s.entries()[0].at == kDay + 10 * kHourMs);
  CHECK(s.entries()[1].at == kDay + 11 * kHourMs);
  CHECK(s.entries()[2].at == kDay + 12 * kHourMs + 30 * kSecondMs);

  CHECK(s.sensor_failed("T11", kDay + 10 * kHourMs));
  CHECK(s.sensor_failed("T11", kDay + 10 * kHourMs + 1199 * kSecondMs));
  CHECK_FALSE(s.sensor_failed("T11", kDay + 10 * kHourMs + 1200 * kSecondMs));
  CHECK_FALSE(s.sensor_failed("T11", kDay + 10 * kHourMs - 1));
  CHECK_FALSE(s.sensor_failed("T12", kDay + 10 * kHourMs));

  CHECK(s.network_up(kDay + 10 * kHourMs));
  CHECK_FALSE(s.network_up(kDay + 11 * kHourMs + 30 * kMinuteMs));
  CHECK(s.network_up(kDay + 11 * kHourMs + 45 * kMinuteMs));

  const auto cycles = s.power_cycles();
  REQUIRE(cycles.size() == 1);
  CHECK(cycles[0].first == kDay + 12 * kHourMs + 30 * kSecondMs);
  CHECK(cycles[0].second == 120 * kSecondMs);
}

TEST_CASE("fault script rejects malformed input", "[fault_script]") {
  CHECK_FALSE(FaultScript::parse_json("{", kDay).ok());
  CHECK_FALSE(FaultScript::parse_json("{\"kind\": \"x\"}", kDay).ok());
  CHECK_FALSE(FaultScript::parse_json(R"([{"kind": "warp", "at": "10:00:00"}])", kDay).ok());
  CHECK_FALSE(FaultScript::parse_json(R"([{"kind": "sensor_fail"}])", kDay).ok());
  CHECK_FALSE(FaultScript::parse_json(
                  R"([{"kind": "sensor_fail", "at": "bogus", "signal": "T1", "duration_s": 5}])",
                  kDay)
                  .ok());
  // non-positive durations violate the script invariants
  CHECK_FALSE(FaultScript::parse_json(
                  R"([{"kind": "net_outage", "at": "10:00:00", "duration_s": 0}])", kDay)
                  .ok());
}

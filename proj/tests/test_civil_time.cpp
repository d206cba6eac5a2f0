#include <catch2/catch_amalgamated.hpp>

#include "pvdaq/civil_time.hpp"

using namespace pvdaq;

TEST_CASE("civil time round trips", "[time]") {
  const TimeMs t = ms_from_civil(2025, 3, 10, 12, 34, 56);
  const CivilDateTime c = civil_from_ms(t);
  CHECK(c.year == 2025);
  CHECK(c.month == 3);
  CHECK(c.day == 10);
  CHECK(c.hour == 12);
  CHECK(c.minute == 34);
  CHECK(c.second == 56);
  CHECK(ms_from_civil(c) == t);
}

TEST_CASE("formatting", "[time]") {
  const TimeMs t = ms_from_civil(2025, 3, 10, 5, 0, 0);
  CHECK(format_iso(t) == "2025-03-10T05:00:00");
  CHECK(format_date(t) == "2025-03-10");
  CHECK(format_date_compact(t) == "20250310");
  CHECK(format_time_of_day(t + 83 * kMinuteMs) == "06:23:00");
}

TEST_CASE("parsing", "[time]") {
  CHECK(parse_iso("2025-03-10T05:00:00") == ms_from_civil(2025, 3, 10, 5, 0, 0));
  CHECK(parse_iso("2025-03-10 05:00:00") == ms_from_civil(2025, 3, 10, 5, 0, 0));
  CHECK(parse_iso("2025-03-10T05:00") == ms_from_civil(2025, 3, 10, 5, 0, 0));
  CHECK(parse_iso("2025-03-10") == ms_from_civil(2025, 3, 10));
  CHECK_FALSE(parse_iso("10/03/2025").has_value());
  CHECK_FALSE(parse_iso("2025-13-10").has_value());

  CHECK(parse_time_of_day("05:00") == 5 * kHourMs);
  CHECK(parse_time_of_day("17:59:30") == 17 * kHourMs + 59 * kMinuteMs + 30 * kSecondMs);
  CHECK_FALSE(parse_time_of_day("nope").has_value());
}

TEST_CASE("day arithmetic", "[time]") {
  const TimeMs t = ms_from_civil(2025, 3, 10, 13, 7, 42) + 123;
  CHECK(floor_minute(t) == ms_from_civil(2025, 3, 10, 13, 7, 0));
  CHECK(day_start(t) == ms_from_civil(2025, 3, 10));
  CHECK(minute_of_day(t) == 13 * 60 + 7);
  CHECK(ms_of_day(day_start(t)) == 0);

  // next civil day
  CHECK(format_date(day_start(t) + kDayMs) == "2025-03-11");
}

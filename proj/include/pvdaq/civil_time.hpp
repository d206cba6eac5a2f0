#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace pvdaq {

// All timestamps in this project are naive local civil time expressed as
// milliseconds since 1970-01-01T00:00:00. There is no timezone handling:
// the simulator defines its own timeline and the system clock backend
// applies the host's local offset once at read time.
using TimeMs = std::int64_t;

inline constexpr TimeMs kSecondMs = 1000;
inline constexpr TimeMs kMinuteMs = 60 * kSecondMs;
inline constexpr TimeMs kHourMs = 60 * kMinuteMs;
inline constexpr TimeMs kDayMs = 24 * kHourMs;

struct CivilDateTime {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;
  int minute = 0;
  int second = 0;
  int millisecond = 0;
};

namespace detail {
// floor division that stays correct for negative timestamps
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
}  // namespace detail

inline TimeMs floor_to(TimeMs t, TimeMs unit) {
  return detail::floor_div(t, unit) * unit;
}

inline TimeMs floor_minute(TimeMs t) { return floor_to(t, kMinuteMs); }
inline TimeMs day_start(TimeMs t) { return floor_to(t, kDayMs); }

// milliseconds elapsed since local midnight
inline TimeMs ms_of_day(TimeMs t) { return t - day_start(t); }
inline int minute_of_day(TimeMs t) { return static_cast<int>(ms_of_day(t) / kMinuteMs); }

inline CivilDateTime civil_from_ms(TimeMs t) {
  using namespace std::chrono;
  const std::int64_t days = detail::floor_div(t, kDayMs);
  const std::int64_t rem = t - days * kDayMs;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  CivilDateTime c;
  c.year = static_cast<int>(ymd.year());
  c.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  c.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
  c.hour = static_cast<int>(rem / kHourMs);
  c.minute = static_cast<int>((rem / kMinuteMs) % 60);
  c.second = static_cast<int>((rem / kSecondMs) % 60);
  c.millisecond = static_cast<int>(rem % kSecondMs);
  return c;
}

inline TimeMs ms_from_civil(const CivilDateTime& c) {
  using namespace std::chrono;
  const year_month_day ymd{year{c.year}, month{static_cast<unsigned>(c.month)},
                           day{static_cast<unsigned>(c.day)}};
  const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
  return days * kDayMs + c.hour * kHourMs + c.minute * kMinuteMs +
         c.second * kSecondMs + c.millisecond;
}

inline TimeMs ms_from_civil(int year, int month, int day, int hour = 0, int minute = 0,
                            int second = 0) {
  return ms_from_civil(CivilDateTime{year, month, day, hour, minute, second, 0});
}

// "2025-03-10T12:34:56"
inline std::string format_iso(TimeMs t) {
  const CivilDateTime c = civil_from_ms(t);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d", c.year, c.month, c.day,
                c.hour, c.minute, c.second);
  return buf;
}

// "2025-03-10"
inline std::string format_date(TimeMs t) {
  const CivilDateTime c = civil_from_ms(t);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", c.year, c.month, c.day);
  return buf;
}

// "20250310", used for daily file names
inline std::string format_date_compact(TimeMs t) {
  const CivilDateTime c = civil_from_ms(t);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d%02d%02d", c.year, c.month, c.day);
  return buf;
}

// "12:34:56"
inline std::string format_time_of_day(TimeMs t) {
  const CivilDateTime c = civil_from_ms(t);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d", c.hour, c.minute, c.second);
  return buf;
}

// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM", "YYYY-MM-DDTHH:MM:SS" (space also ok).
inline std::optional<TimeMs> parse_iso(std::string_view s) {
  CivilDateTime c;
  int n = static_cast<int>(s.size());
  char sep = 0;
  if (n == 10) {
    if (std::sscanf(std::string(s).c_str(), "%d-%d-%d", &c.year, &c.month, &c.day) != 3)
      return std::nullopt;
  } else if (n == 16 || n == 19) {
    int fields = std::sscanf(std::string(s).c_str(), "%d-%d-%d%c%d:%d:%d", &c.year,
                             &c.month, &c.day, &sep, &c.hour, &c.minute, &c.second);
    if (fields < 6 || (sep != 'T' && sep != ' ')) return std::nullopt;
  } else {
    return std::nullopt;
  }
  if (c.month < 1 || c.month > 12 || c.day < 1 || c.day > 31) return std::nullopt;
  if (c.hour < 0 || c.hour > 23 || c.minute < 0 || c.minute > 59 || c.second < 0 ||
      c.second > 59)
    return std::nullopt;
  return ms_from_civil(c);
}

// "HH:MM" or "HH:MM:SS" as milliseconds since midnight
inline std::optional<TimeMs> parse_time_of_day(std::string_view s) {
  int h = 0, m = 0, sec = 0;
  const std::string str(s);
  int fields = std::sscanf(str.c_str(), "%d:%d:%d", &h, &m, &sec);
  if (fields < 2) return std::nullopt;
  if (h < 0 || h > 24 || m < 0 || m > 59 || sec < 0 || sec > 59) return std::nullopt;
  return h * kHourMs + m * kMinuteMs + sec * kSecondMs;
}

}  // namespace pvdaq

#pragma once

#include <array>
#include <cstdio>
#include <string>

#include "pvdaq/civil_time.hpp"

namespace pvdaq {

// Archived fields of one minute, in CSV column order (timestamp excluded).
enum class Field : int {
  T00 = 0, T01, T02, T03, T04, T05, T06, T07, T08, T09,
  T10, T11, T12, T13, T14, T15, T16, T17, T18, T19,
  P0Volts, P0Amps, P0Watts, P0Joules,
  P1Volts, P1Amps, P1Watts, P1Joules,
  AmbientTemp, Humidity, Irradiance, WindSpeed, WindDir, RainMm,
};

inline constexpr int kFieldCount = 34;

inline Field thermistor_field(int index) { return static_cast<Field>(index); }

inline Field panel_field(int panel, int component) {
  return static_cast<Field>(static_cast<int>(Field::P0Volts) + panel * 4 + component);
}

inline const char* field_name(Field f) {
  static constexpr const char* kNames[kFieldCount] = {
      "t00", "t01", "t02", "t03", "t04", "t05", "t06", "t07", "t08", "t09",
      "t10", "t11", "t12", "t13", "t14", "t15", "t16", "t17", "t18", "t19",
      "p0_volts", "p0_amps", "p0_watts", "p0_joules",
      "p1_volts", "p1_amps", "p1_watts", "p1_joules",
      "ambient_temp", "humidity", "irradiance", "wind_speed", "wind_dir", "rain_mm"};
  return kNames[static_cast<int>(f)];
}

// Fixed decimal places per field; shared by the CSV archive and the sink
// encoder so the two stores serialize identical values.
inline int field_decimals(Field f) {
  switch (f) {
    case Field::P0Volts: case Field::P1Volts:
    case Field::P0Amps: case Field::P1Amps:
    case Field::P0Watts: case Field::P1Watts:
      return 4;
    case Field::P0Joules: case Field::P1Joules:
      return 1;
    case Field::Humidity: case Field::Irradiance: case Field::WindDir:
      return 1;
    case Field::RainMm:
      return 4;
    default:
      return 3;  // temperatures, wind speed
  }
}

inline std::string format_field_value(Field f, double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", field_decimals(f), v);
  return buf;
}

// One archived minute of all channels. Invalid fields keep a flag cleared and
// serialize as empty cells; the frame is still produced and stored.
struct MeasurementFrame {
  TimeMs timestamp = 0;  // minute-aligned civil time
  std::array<double, kFieldCount> values{};
  std::array<bool, kFieldCount> valid{};
  double rain_day_accum = 0.0;  // session counter, not archived in the CSV row

  void set(Field f, double v) {
    values[static_cast<int>(f)] = v;
    valid[static_cast<int>(f)] = true;
  }
  void invalidate(Field f) { valid[static_cast<int>(f)] = false; }
  bool is_valid(Field f) const { return valid[static_cast<int>(f)]; }
  double value(Field f) const { return values[static_cast<int>(f)]; }

  int invalid_count() const {
    int n = 0;
    for (bool v : valid)
      if (!v) ++n;
    return n;
  }
  bool fully_valid() const { return invalid_count() == 0; }
};

}  // namespace pvdaq

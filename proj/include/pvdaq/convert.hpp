#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvdaq/result.hpp"

namespace pvdaq {

enum class ConvertError { RangeError };

// NTC thermistor divider + beta-equation calibration. The divider places the
// fixed resistor on the low side by default; set fixed_high_side when the
// board is wired the other way around.
struct ThermistorCal {
  double r_fixed = 10000.0;  // ohm
  double v_supply = 3.3;     // V
  double r0 = 10000.0;       // ohm at t0
  double t0 = 298.15;        // K
  double beta = 3950.0;      // K
  bool fixed_high_side = false;

  std::vector<std::string> validate() const {
    std::vector<std::string> problems;
    if (!(r_fixed > 0)) problems.push_back("thermistor.r_fixed must be > 0");
    if (!(v_supply > 0)) problems.push_back("thermistor.v_supply must be > 0");
    if (!(r0 > 0)) problems.push_back("thermistor.r0 must be > 0");
    if (!(t0 > 0)) problems.push_back("thermistor.t0 must be > 0");
    if (!(beta > 0)) problems.push_back("thermistor.beta must be > 0");
    return problems;
  }
};

// Register scaling for the INA228-class power monitors. Power and energy
// factors are fixed device ratios of the current LSB, not free parameters.
struct ElectricalCal {
  double current_lsb = 2.0 / 524288.0;  // A/count, 2 A full scale over 2^19
  double bus_voltage_lsb = 195.3125e-6; // V/count

  double power_factor() const { return 3.2 * current_lsb; }   // W/count
  double energy_factor() const { return 16.0 * power_factor(); }  // J/count

  std::vector<std::string> validate() const {
    std::vector<std::string> problems;
    if (!(current_lsb > 0)) problems.push_back("electrical.current_lsb must be > 0");
    if (!(bus_voltage_lsb > 0))
      problems.push_back("electrical.bus_voltage_lsb must be > 0");
    return problems;
  }
};

struct VaneEntry {
  double voltage = 0.0;    // expected divider voltage
  double direction = 0.0;  // degrees, [0, 360)
};

struct MeteoCal {
  double irradiance_gain = 10000.0;  // (W/m^2) per volt of differential
  double wind_speed_per_hz = 0.667;  // m/s per pulse-Hz
  double rain_mm_per_tip = 0.2794;   // mm per bucket tip
  std::vector<VaneEntry> vane_lookup;

  std::vector<std::string> validate() const {
    std::vector<std::string> problems;
    if (!(irradiance_gain > 0)) problems.push_back("meteo.irradiance_gain must be > 0");
    if (!(wind_speed_per_hz > 0))
      problems.push_back("meteo.wind_speed_per_hz must be > 0");
    if (!(rain_mm_per_tip > 0)) problems.push_back("meteo.rain_mm_per_tip must be > 0");
    if (vane_lookup.empty()) problems.push_back("meteo.vane_lookup must not be empty");
    for (size_t i = 0; i < vane_lookup.size(); ++i) {
      if (vane_lookup[i].direction < 0 || vane_lookup[i].direction >= 360)
        problems.push_back("meteo.vane_lookup direction out of [0,360)");
      for (size_t j = i + 1; j < vane_lookup.size(); ++j)
        if (vane_lookup[i].voltage == vane_lookup[j].voltage)
          problems.push_back("meteo.vane_lookup voltages must be pairwise distinct");
    }
    return problems;
  }
};

// 16-position reed/resistor ladder of the stock wind vane, as divider
// voltages against a 10k fixed resistor at 3.3 V supply.
inline MeteoCal default_meteo_cal() {
  MeteoCal cal;
  struct Pos { double dir; double r; };
  static constexpr Pos kLadder[16] = {
      {0.0, 33000.0},    {22.5, 6570.0},  {45.0, 8200.0},   {67.5, 891.0},
      {90.0, 1000.0},    {112.5, 688.0},  {135.0, 2200.0},  {157.5, 1410.0},
      {180.0, 3900.0},   {202.5, 3140.0}, {225.0, 16000.0}, {247.5, 14120.0},
      {270.0, 120000.0}, {292.5, 42120.0},{315.0, 64900.0}, {337.5, 21880.0}};
  for (const auto& p : kLadder)
    cal.vane_lookup.push_back(VaneEntry{3.3 * p.r / (p.r + 10000.0), p.dir});
  return cal;
}

// ---- ADC ----

// Single-ended convention: negative codes are noise below the 0 V rail and
// clamp to zero; 32768 counts span the full-scale range.
inline double adc_code_to_voltage(std::int16_t code, double full_scale) {
  if (!(full_scale > 0)) throw std::invalid_argument("full_scale must be > 0");
  const double c = code < 0 ? 0.0 : static_cast<double>(code);
  return c * full_scale / 32768.0;
}

// ---- thermistors ----

// Divider inversion. v_out at or beyond the rails means an open or shorted
// sensor and is reported as a range error for the caller to flag.
inline Result<double, ConvertError> divider_to_resistance(double v_out,
                                                          const ThermistorCal& cal) {
  if (!(v_out > 0.0) || !(v_out < cal.v_supply))
    return Result<double, ConvertError>(ConvertError::RangeError);
  if (cal.fixed_high_side)
    return Result<double, ConvertError>(cal.r_fixed * v_out / (cal.v_supply - v_out));
  return Result<double, ConvertError>(cal.r_fixed * (cal.v_supply / v_out - 1.0));
}

// beta equation: 1/T = 1/T0 + ln(R/R0)/B, result in Celsius
inline double resistance_to_temperature(double r, const ThermistorCal& cal) {
  if (!(r > 0)) throw std::invalid_argument("resistance must be > 0");
  const double inv_t = 1.0 / cal.t0 + std::log(r / cal.r0) / cal.beta;
  return 1.0 / inv_t - 273.15;
}

// ---- meteorology ----

inline double differential_to_irradiance(double v_plus, double v_minus,
                                         const MeteoCal& cal) {
  return std::max(0.0, cal.irradiance_gain * (v_plus - v_minus));
}

inline double pulses_to_wind_speed(std::uint64_t pulses, double window_s,
                                   const MeteoCal& cal) {
  if (!(window_s > 0)) throw std::invalid_argument("window must be > 0");
  return cal.wind_speed_per_hz * static_cast<double>(pulses) / window_s;
}

inline double tips_to_rain_depth(std::uint64_t tips, const MeteoCal& cal) {
  return static_cast<double>(tips) * cal.rain_mm_per_tip;
}

// Nearest lookup entry wins; equidistant candidates resolve to the smaller
// direction value.
inline double vane_voltage_to_direction(double v, const MeteoCal& cal) {
  if (cal.vane_lookup.empty()) throw std::invalid_argument("empty vane lookup");
  double best_dir = 0.0;
  double best_dist = -1.0;
  for (const auto& e : cal.vane_lookup) {
    const double d = std::fabs(e.voltage - v);
    if (best_dist < 0 || d < best_dist || (d == best_dist && e.direction < best_dir)) {
      best_dist = d;
      best_dir = e.direction;
    }
  }
  return best_dir;
}

// ---- power monitors ----

struct ElectricalSi {
  double volts = 0.0;
  double amps = 0.0;
  double watts = 0.0;
  double joules = 0.0;
};

struct RawPowerReading {
  std::uint32_t bus_voltage_code = 0;  // 20-bit register image
  std::int32_t current_code = 0;       // 20-bit signed
  std::uint32_t power_code = 0;        // 24-bit
  std::uint64_t energy_code = 0;       // 40-bit, cumulative since monitor reset
};

inline ElectricalSi power_registers_to_si(const RawPowerReading& raw,
                                          const ElectricalCal& cal) {
  ElectricalSi si;
  si.volts = static_cast<double>(raw.bus_voltage_code) * cal.bus_voltage_lsb;
  si.amps = static_cast<double>(raw.current_code) * cal.current_lsb;
  si.watts = static_cast<double>(raw.power_code) * cal.power_factor();
  si.joules = static_cast<double>(raw.energy_code) * cal.energy_factor();
  return si;
}

}  // namespace pvdaq

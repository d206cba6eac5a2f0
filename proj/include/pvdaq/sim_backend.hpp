#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <string>

#include "pvdaq/channel_map.hpp"
#include "pvdaq/civil_time.hpp"
#include "pvdaq/convert.hpp"
#include "pvdaq/fault_script.hpp"
#include "pvdaq/hal.hpp"
#include "pvdaq/noise.hpp"

namespace pvdaq {

// Diurnal environment model driving the simulated bench. Everything is a
// deterministic function of (seed, time): irradiance follows a half-sine
// between sunrise and sunset, ambient temperature tracks irradiance with a
// lag, wind and rain come from seeded value noise, panel output scales with
// irradiance. Gradients across the two thermistor banks keep the
// treatment-vs-control delta visible.
struct SimEnvConfig {
  int sunrise_minute = 5 * 60;
  int sunset_minute = 18 * 60;
  double peak_irradiance = 1000.0;  // W/m^2

  double ambient_base = 18.0;      // degC at night
  double ambient_amplitude = 10.0; // added at full sun
  TimeMs ambient_lag_ms = 90 * kMinuteMs;

  double humidity_base = 80.0;  // %RH at night
  double humidity_drop = 30.0;  // subtracted at full sun

  double wind_base_hz = 3.0;   // anemometer pulse rate floor
  double wind_gust_hz = 6.0;   // extra rate scaled by noise
  TimeMs wind_block_ms = 10 * kSecondMs;

  double rain_shower_probability = 0.04;  // per 10-minute block
  double rain_tips_per_minute = 2.0;      // tip rate inside a shower

  // -1 lets the vane wander with seeded noise; 0..15 pins a ladder position.
  int vane_fixed_index = -1;
  TimeMs vane_block_ms = kMinuteMs;

  double panel_vmp = 6.0;            // bus voltage used by both panels
  double panel0_eff = 0.0060;        // W per W/m^2 (control)
  double panel1_eff = 0.0063;        // W per W/m^2 (passive-cooled)
  double panel0_heating = 20.0;      // surface degC above ambient at peak
  double panel1_heating = 13.0;
  double position_gradient = 0.5;    // degC step across each 10-sensor bank

  double irr_minus_tap = 0.05;  // differential reference tap, volts
};

class SimBackend final : public Backend {
 public:
  SimBackend(std::uint64_t seed, SimEnvConfig env, ThermistorCal thermistor,
             ElectricalCal electrical, MeteoCal meteo, HalConfig hal_config,
             ChannelMap map = ChannelMap::standard())
      : seed_(seed),
        env_(env),
        thermistor_(thermistor),
        electrical_(electrical),
        meteo_(std::move(meteo)),
        hal_config_(hal_config),
        map_(std::move(map)) {}

  // ---- simulation control (clock owner only) ----

  void set_fault_script(FaultScript script) { script_ = std::move(script); }
  const FaultScript& fault_script() const { return script_; }

  // Advance simulated time; fault entries whose activation time has passed
  // become visible to subsequent reads. Reads themselves never move time.
  void advance_to(TimeMs t) {
    if (t > now_) now_ = t;
  }
  TimeMs now() const { return now_; }

  bool network_up() const { return script_.network_up(now_); }

  // Node power-up at time t: monitor energy accumulators and the pulse
  // counters start from here, select lines reset. Called once at simulation
  // start and again after every power cycle.
  void power_on(TimeMs t) {
    std::lock_guard<std::mutex> lock(counter_mutex_);
    now_ = std::max(now_, t);
    energy_reset_at_ = t;
    selected_code_ = 0;
    wind_consumed_ = cumulative_wind_pulses(t);
    rain_consumed_ = cumulative_rain_tips(t);
  }

  BusLog& log() { return log_; }
  const BusLog* bus_log() const override { return &log_; }

  // ---- Backend ----

  Status<HalError> initialize() override {
    if (failed("SEL")) {
      log_.record(now_, "init.mux_reset", "", "BUS_FAULT");
      return Status<HalError>(HalError::BusFault);
    }
    selected_code_ = 0;
    log_.record(now_, "init.mux_reset", "code=0", "ok");
    log_.record(now_, "init.adc_config",
                "fs=" + std::to_string(hal_config_.adc_full_scale), "ok");
    for (auto addr : map_.power_monitor_addresses()) {
      char detail[64];
      std::snprintf(detail, sizeof(detail), "addr=0x%02x avg=%d conv_ms=%.3f", addr,
                    hal_config_.monitor_averaging, hal_config_.monitor_conversion_ms);
      log_.record(now_, "init.monitor_config", detail, "ok");
    }
    return Status<HalError>();
  }

  Status<HalError> select_mux_channel(int select_code) override {
    if (failed("SEL")) {
      log_.record(now_, "select", "code=" + std::to_string(select_code), "BUS_FAULT");
      return Status<HalError>(HalError::BusFault);
    }
    selected_code_ = select_code;
    log_.record(now_, "select", "code=" + std::to_string(select_code), "ok");
    return Status<HalError>();
  }

  Result<std::int16_t, HalError> read_adc(AdcInput input) override {
    const auto signal = map_.routed_signal(input, selected_code_);
    const std::string name = signal.value_or("(unassigned)");
    if (signal && failed(*signal)) {
      log_.record(now_, "adc", std::string(adc_input_name(input)) + " sel=" +
                                   std::to_string(selected_code_) + " " + name,
                  "BUS_FAULT");
      return Result<std::int16_t, HalError>(HalError::BusFault);
    }
    const double volts = signal ? signal_voltage(*signal, now_) : 0.0;
    const std::int16_t code = quantize(volts);
    log_.record(now_, "adc",
                std::string(adc_input_name(input)) + " sel=" +
                    std::to_string(selected_code_) + " " + name,
                std::to_string(code));
    return Result<std::int16_t, HalError>(code);
  }

  Result<RawPowerReading, HalError> read_power_monitor(std::uint8_t address) override {
    const int panel = address == map_.power_monitor_addresses()[0] ? 0 : 1;
    char detail[32];
    std::snprintf(detail, sizeof(detail), "addr=0x%02x", address);
    if (failed(panel == 0 ? "P0" : "P1")) {
      log_.record(now_, "monitor", detail, "BUS_FAULT");
      return Result<RawPowerReading, HalError>(HalError::BusFault);
    }
    RawPowerReading raw;
    const double volts = env_.panel_vmp;
    const double watts = panel_power(panel, now_);
    const double amps = volts > 0 ? watts / volts : 0.0;
    const double joules = panel_energy(panel, energy_reset_at_, now_);
    raw.bus_voltage_code = clamp_code(volts / electrical_.bus_voltage_lsb, 20);
    raw.current_code =
        static_cast<std::int32_t>(clamp_code(amps / electrical_.current_lsb, 20));
    raw.power_code = clamp_code(watts / electrical_.power_factor(), 24);
    raw.energy_code = clamp_code64(joules / electrical_.energy_factor(), 40);
    log_.record(now_, "monitor", detail,
                "v=" + std::to_string(raw.bus_voltage_code) +
                    " i=" + std::to_string(raw.current_code) +
                    " p=" + std::to_string(raw.power_code) +
                    " e=" + std::to_string(raw.energy_code));
    return Result<RawPowerReading, HalError>(raw);
  }

  Result<AmbientReading, HalError> read_ambient() override {
    if (failed("DHT")) {
      log_.record(now_, "ambient", "", "READ_TIMEOUT");
      return Result<AmbientReading, HalError>(HalError::ReadTimeout);
    }
    AmbientReading r;
    r.temperature_c = ambient_temperature(now_);
    r.humidity_rh = humidity(now_);
    log_.record(now_, "ambient", "",
                format_field("t=", r.temperature_c) + format_field(" rh=", r.humidity_rh));
    return Result<AmbientReading, HalError>(r);
  }

  PulseCounters poll_pulse_counters() override {
    std::lock_guard<std::mutex> lock(counter_mutex_);
    PulseCounters out;
    const std::uint64_t wind_now = cumulative_wind_pulses(now_);
    const std::uint64_t rain_now = cumulative_rain_tips(now_);
    out.anemometer_pulses = static_cast<std::uint32_t>(wind_now - wind_consumed_);
    out.rain_tips = static_cast<std::uint32_t>(rain_now - rain_consumed_);
    wind_consumed_ = wind_now;
    rain_consumed_ = rain_now;
    return out;
  }

  // ---- environment model (shared with tests that need oracles) ----

  // 0..1 solar shape; half-sine over the configured daylight span
  double sun_shape(TimeMs t) const {
    const double m = static_cast<double>(ms_of_day(t)) / kMinuteMs;
    if (m < env_.sunrise_minute || m > env_.sunset_minute) return 0.0;
    const double span = env_.sunset_minute - env_.sunrise_minute;
    return std::sin(M_PI * (m - env_.sunrise_minute) / span);
  }

  double irradiance(TimeMs t) const { return env_.peak_irradiance * sun_shape(t); }

  double ambient_temperature(TimeMs t) const {
    return env_.ambient_base + env_.ambient_amplitude * sun_shape(t - env_.ambient_lag_ms);
  }

  double humidity(TimeMs t) const {
    return std::clamp(env_.humidity_base - env_.humidity_drop * sun_shape(t), 2.0, 100.0);
  }

  double thermistor_temperature(int index, TimeMs t) const {
    const int panel = index < 10 ? 0 : 1;
    const double heating = panel == 0 ? env_.panel0_heating : env_.panel1_heating;
    const double gradient = ((index % 10) - 4.5) * env_.position_gradient;
    return ambient_temperature(t) + sun_shape(t) * (heating + gradient);
  }

  double panel_power(int panel, TimeMs t) const {
    const double eff = panel == 0 ? env_.panel0_eff : env_.panel1_eff;
    return env_.peak_irradiance * sun_shape(t) * eff;
  }

  // Closed-form integral of the half-sine, so energy needs no state.
  double panel_energy(int panel, TimeMs from, TimeMs to) const {
    const double eff = panel == 0 ? env_.panel0_eff : env_.panel1_eff;
    return env_.peak_irradiance * eff * (sun_shape_integral(to) - sun_shape_integral(from));
  }

  double wind_rate_hz(TimeMs t) const {
    const std::int64_t block = detail::floor_div(t, env_.wind_block_ms);
    return env_.wind_base_hz + env_.wind_gust_hz * unit_noise(seed_, kWindStream, block);
  }

  int vane_index(TimeMs t) const {
    if (env_.vane_fixed_index >= 0) return env_.vane_fixed_index % 16;
    const std::int64_t block = detail::floor_div(t, env_.vane_block_ms);
    const size_t n = meteo_.vane_lookup.size();
    return static_cast<int>(unit_noise(seed_, kVaneStream, block) * static_cast<double>(n));
  }

  bool shower_active(TimeMs t) const {
    const std::int64_t block = detail::floor_div(t, 10 * kMinuteMs);
    return unit_noise(seed_, kRainStream, block) < env_.rain_shower_probability;
  }

  std::uint64_t cumulative_wind_pulses(TimeMs t) const {
    return static_cast<std::uint64_t>(std::floor(wind_pulse_integral(t)));
  }

  std::uint64_t cumulative_rain_tips(TimeMs t) const {
    return static_cast<std::uint64_t>(std::floor(rain_tip_integral(t)));
  }

 private:
  static constexpr std::uint64_t kWindStream = 0x77696e64;  // 'wind'
  static constexpr std::uint64_t kVaneStream = 0x76616e65;  // 'vane'
  static constexpr std::uint64_t kRainStream = 0x7261696e;  // 'rain'

  bool failed(const std::string& signal) const { return script_.sensor_failed(signal, now_); }

  static std::string format_field(const char* prefix, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s%.3f", prefix, v);
    return buf;
  }

  std::int16_t quantize(double volts) const {
    const double code = std::llround(volts / hal_config_.adc_full_scale * 32768.0);
    return static_cast<std::int16_t>(std::clamp(code, 0.0, 32767.0));
  }

  static std::uint32_t clamp_code(double counts, int bits) {
    const double max = static_cast<double>((1ULL << bits) - 1);
    return static_cast<std::uint32_t>(std::clamp(std::round(counts), 0.0, max));
  }
  static std::uint64_t clamp_code64(double counts, int bits) {
    const double max = static_cast<double>((1ULL << bits) - 1);
    return static_cast<std::uint64_t>(std::clamp(std::round(counts), 0.0, max));
  }

  double signal_voltage(const std::string& signal, TimeMs t) const {
    if (signal.size() >= 2 && signal[0] == 'T') {
      const int index = std::stoi(signal.substr(1));
      const double temp_k = thermistor_temperature(index, t) + 273.15;
      const double r = thermistor_.r0 *
                       std::exp(thermistor_.beta * (1.0 / temp_k - 1.0 / thermistor_.t0));
      if (thermistor_.fixed_high_side)
        return thermistor_.v_supply * r / (r + thermistor_.r_fixed);
      return thermistor_.v_supply * thermistor_.r_fixed / (thermistor_.r_fixed + r);
    }
    if (signal == "IRR-") return env_.irr_minus_tap;
    if (signal == "IRR+")
      return env_.irr_minus_tap + irradiance(t) / meteo_.irradiance_gain;
    if (signal == "WIND_VANE") {
      const auto& lut = meteo_.vane_lookup;
      return lut[static_cast<size_t>(vane_index(t)) % lut.size()].voltage;
    }
    return 0.0;
  }

  // integral of sun_shape in seconds, as a running total over days
  double sun_shape_integral(TimeMs t) const {
    const double span_s = (env_.sunset_minute - env_.sunrise_minute) * 60.0;
    const double full_day = 2.0 * span_s / M_PI;  // integral over one daylight arc
    const std::int64_t days = detail::floor_div(t, kDayMs);
    const double m = static_cast<double>(t - days * kDayMs) / kMinuteMs;
    double partial = 0.0;
    if (m >= env_.sunset_minute) {
      partial = full_day;
    } else if (m > env_.sunrise_minute) {
      const double span = env_.sunset_minute - env_.sunrise_minute;
      const double phase = M_PI * (m - env_.sunrise_minute) / span;
      partial = span_s / M_PI * (1.0 - std::cos(phase));
    }
    return static_cast<double>(days) * full_day + partial;
  }

  // piecewise-constant pulse rate integrated block by block
  double wind_pulse_integral(TimeMs t) const {
    const std::int64_t block = detail::floor_div(t, env_.wind_block_ms);
    double total = integral_cache_update(block);
    const TimeMs block_start = block * env_.wind_block_ms;
    total += wind_rate_hz(t) * static_cast<double>(t - block_start) / 1000.0;
    return total;
  }

  // cache whole-block sums so 1 Hz polling stays O(1)
  double integral_cache_update(std::int64_t block) const {
    if (wind_cache_block_ > block) {  // time went backwards only across runs
      wind_cache_block_ = 0;
      wind_cache_sum_ = 0.0;
    }
    while (wind_cache_block_ < block) {
      const TimeMs bs = wind_cache_block_ * env_.wind_block_ms;
      wind_cache_sum_ += wind_rate_hz(bs) * static_cast<double>(env_.wind_block_ms) / 1000.0;
      ++wind_cache_block_;
    }
    return wind_cache_sum_;
  }

  double rain_tip_integral(TimeMs t) const {
    const std::int64_t block = detail::floor_div(t, 10 * kMinuteMs);
    if (rain_cache_block_ > block) {
      rain_cache_block_ = 0;
      rain_cache_sum_ = 0.0;
    }
    while (rain_cache_block_ < block) {
      if (shower_active(rain_cache_block_ * 10 * kMinuteMs))
        rain_cache_sum_ += env_.rain_tips_per_minute * 10.0;
      ++rain_cache_block_;
    }
    double total = rain_cache_sum_;
    if (shower_active(t)) {
      const TimeMs block_start = block * 10 * kMinuteMs;
      total += env_.rain_tips_per_minute * static_cast<double>(t - block_start) / kMinuteMs;
    }
    return total;
  }

  std::uint64_t seed_;
  SimEnvConfig env_;
  ThermistorCal thermistor_;
  ElectricalCal electrical_;
  MeteoCal meteo_;
  HalConfig hal_config_;
  ChannelMap map_;
  FaultScript script_;

  TimeMs now_ = 0;
  TimeMs energy_reset_at_ = 0;
  int selected_code_ = 0;

  std::mutex counter_mutex_;
  std::uint64_t wind_consumed_ = 0;
  std::uint64_t rain_consumed_ = 0;
  mutable std::int64_t wind_cache_block_ = 0;
  mutable double wind_cache_sum_ = 0.0;
  mutable std::int64_t rain_cache_block_ = 0;
  mutable double rain_cache_sum_ = 0.0;

  BusLog log_;
};

}  // namespace pvdaq

#pragma once

#include <cstdint>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvdaq/channel_map.hpp"
#include "pvdaq/civil_time.hpp"
#include "pvdaq/convert.hpp"
#include "pvdaq/result.hpp"

namespace pvdaq {

enum class HalError { BusFault, ReadTimeout };

inline const char* hal_error_name(HalError e) {
  return e == HalError::BusFault ? "BUS_FAULT" : "READ_TIMEOUT";
}

struct AmbientReading {
  double temperature_c = 0.0;
  double humidity_rh = 0.0;
};

struct PulseCounters {
  std::uint32_t anemometer_pulses = 0;
  std::uint32_t rain_tips = 0;
};

// Ordered record of every backend transaction. The simulator fills it in;
// tests use it to assert sequencing, settling gaps and determinism.
struct BusLogEntry {
  TimeMs t = 0;
  std::string op;      // "select", "adc", "monitor", "ambient", "init.*"
  std::string detail;  // argument, e.g. "code=5" or "A1"
  std::string result;  // "ok", a value, or an error name

  std::string to_line() const {
    std::ostringstream os;
    os << "t=" << t << ' ' << op;
    if (!detail.empty()) os << ' ' << detail;
    os << " -> " << result;
    return os.str();
  }
};

class BusLog {
 public:
  void record(TimeMs t, std::string op, std::string detail, std::string result) {
    if (!enabled_) return;
    entries_.push_back(BusLogEntry{t, std::move(op), std::move(detail), std::move(result)});
  }
  void set_enabled(bool on) { enabled_ = on; }
  void clear() { entries_.clear(); }
  const std::vector<BusLogEntry>& entries() const { return entries_; }

  std::string to_text() const {
    std::string out;
    for (const auto& e : entries_) {
      out += e.to_line();
      out += '\n';
    }
    return out;
  }

 private:
  bool enabled_ = true;
  std::vector<BusLogEntry> entries_;
};

// Driver-facing bus contract. A real deployment implements this against the
// I2C/GPIO stack; register-level semantics the implementation must honor:
//
//   initialize()          mux select lines reset to code 0; ADC configured
//                         single-ended, full-scale range per config, one
//                         conversion takes the configured window; each power
//                         monitor configured with averaging=1024 and 1.052 ms
//                         conversion timing. Initialization does not clear a
//                         monitor's cumulative energy accumulator.
//   select_mux_channel()  drives the shared 3-bit select lines; all three
//                         multiplexers switch together.
//   read_adc()            one signed 16-bit conversion result of the named
//                         input; single-ended inputs occupy 0..32767.
//   read_power_monitor()  latest averaged register image at a 7-bit bus
//                         address; voltage/current registers are 20-bit,
//                         power 24-bit, energy 40-bit cumulative.
//   read_ambient()        one single-wire temperature/humidity transaction;
//                         timeouts are a normal transient outcome.
//   poll_pulse_counters() returns interrupt-driven pulse deltas since the
//                         previous poll and resets them atomically.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual Status<HalError> initialize() = 0;
  virtual Status<HalError> select_mux_channel(int select_code) = 0;
  virtual Result<std::int16_t, HalError> read_adc(AdcInput input) = 0;
  virtual Result<RawPowerReading, HalError> read_power_monitor(std::uint8_t address) = 0;
  virtual Result<AmbientReading, HalError> read_ambient() = 0;
  virtual PulseCounters poll_pulse_counters() = 0;

  virtual const BusLog* bus_log() const { return nullptr; }
};

struct HalConfig {
  double adc_full_scale = 4.096;        // V
  TimeMs adc_conversion_ms = 16;        // per-channel conversion window
  TimeMs mux_settle_ms = 5;             // settling after a select
  TimeMs irradiance_settle_ms = 100;    // settling for the differential taps
  TimeMs ambient_min_interval_ms = 2000;  // single-wire sensor re-read floor
  int monitor_averaging = 1024;
  double monitor_conversion_ms = 1.052;
};

// Hardware abstraction boundary. Validates call contracts, serializes bus
// access behind one token, and delegates to the configured backend.
class Hal {
 public:
  Hal(Backend& backend, ChannelMap map, HalConfig config)
      : backend_(backend), map_(std::move(map)), config_(config) {}

  const ChannelMap& channel_map() const { return map_; }
  const HalConfig& config() const { return config_; }

  // Exclusive bus token; hal operations happen through a held lease.
  class BusLease {
   public:
    explicit BusLease(Hal& hal) : hal_(hal), lock_(hal.bus_mutex_) {}

    Status<HalError> select_mux_channel(int select_code) {
      if (select_code < 0 || select_code > 7)
        throw std::invalid_argument("select_code must be in 0..7");
      return hal_.backend_.select_mux_channel(select_code);
    }

    Result<std::int16_t, HalError> read_adc(AdcInput input) {
      return hal_.backend_.read_adc(input);
    }

    Result<RawPowerReading, HalError> read_power_monitor(std::uint8_t address) {
      if (!hal_.map_.has_power_monitor(address)) {
        std::ostringstream os;
        os << "power monitor address 0x" << std::hex << int(address)
           << " is not configured";
        throw std::invalid_argument(os.str());
      }
      return hal_.backend_.read_power_monitor(address);
    }

    // Transient failures are expected; the caller keeps its last buffered
    // value. Re-reads faster than the sensor's minimum interval are a
    // programming error.
    Result<AmbientReading, HalError> read_ambient(TimeMs now) {
      if (hal_.last_ambient_query_ != kNoQuery &&
          now - hal_.last_ambient_query_ < hal_.config_.ambient_min_interval_ms)
        throw std::logic_error("ambient sensor queried faster than its minimum interval");
      hal_.last_ambient_query_ = now;
      return hal_.backend_.read_ambient();
    }

    Status<HalError> initialize() { return hal_.backend_.initialize(); }

   private:
    Hal& hal_;
    std::unique_lock<std::mutex> lock_;
  };

  BusLease acquire_bus() { return BusLease(*this); }

  // Counters live on GPIO interrupts, not the shared bus.
  PulseCounters poll_pulse_counters() { return backend_.poll_pulse_counters(); }

  Status<HalError> initialize() {
    auto lease = acquire_bus();
    return lease.initialize();
  }

  const BusLog* bus_log() const { return backend_.bus_log(); }

 private:
  static constexpr TimeMs kNoQuery = std::numeric_limits<TimeMs>::min();

  Backend& backend_;
  ChannelMap map_;
  HalConfig config_;
  std::mutex bus_mutex_;
  TimeMs last_ambient_query_ = kNoQuery;
};

}  // namespace pvdaq

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvdaq {

// The four ADS1115 inputs and what feeds them.
enum class AdcInput { A0 = 0, A1 = 1, A2 = 2, A3 = 3 };

enum class AdcSource { Mux1, Mux2, Mux3, WindVane };

inline const char* adc_input_name(AdcInput in) {
  switch (in) {
    case AdcInput::A0: return "A0";
    case AdcInput::A1: return "A1";
    case AdcInput::A2: return "A2";
    case AdcInput::A3: return "A3";
  }
  return "?";
}

struct MuxAssignment {
  int mux_id = 0;       // 1..3
  int select_code = 0;  // 0..7
  std::string signal;   // "T0".."T19", "IRR-", "IRR+"
};

// Wiring of the three synchronized 8:1 multiplexers, the ADC input routing
// and the power-monitor bus addresses. The default map is the deployed one:
//   MUX1 0..7 -> T0..T7, MUX2 0..7 -> T8..T15,
//   MUX3 0..3 -> T16..T19, 4 -> IRR-, 5 -> IRR+, 6..7 unassigned,
//   A3 <- MUX1, A2 <- MUX2, A1 <- MUX3, A0 <- wind vane, monitors 0x40/0x41.
class ChannelMap {
 public:
  static ChannelMap standard() {
    ChannelMap m;
    for (int code = 0; code < 8; ++code) {
      m.mux_signals_[0][code] = "T" + std::to_string(code);
      m.mux_signals_[1][code] = "T" + std::to_string(8 + code);
    }
    for (int code = 0; code < 4; ++code)
      m.mux_signals_[2][code] = "T" + std::to_string(16 + code);
    m.mux_signals_[2][4] = "IRR-";
    m.mux_signals_[2][5] = "IRR+";
    m.adc_sources_[static_cast<int>(AdcInput::A3)] = AdcSource::Mux1;
    m.adc_sources_[static_cast<int>(AdcInput::A2)] = AdcSource::Mux2;
    m.adc_sources_[static_cast<int>(AdcInput::A1)] = AdcSource::Mux3;
    m.adc_sources_[static_cast<int>(AdcInput::A0)] = AdcSource::WindVane;
    m.power_monitor_addresses_ = {0x40, 0x41};
    return m;
  }

  // Signal routed to (mux_id, select_code), empty for unassigned channels.
  std::optional<std::string> mux_signal(int mux_id, int select_code) const {
    check_mux(mux_id);
    check_code(select_code);
    const auto& s = mux_signals_[mux_id - 1][select_code];
    if (s.empty()) return std::nullopt;
    return s;
  }

  AdcSource adc_source(AdcInput input) const {
    return adc_sources_[static_cast<int>(input)];
  }

  // Signal observed on an ADC input for a given mux select code.
  std::optional<std::string> routed_signal(AdcInput input, int select_code) const {
    switch (adc_source(input)) {
      case AdcSource::Mux1: return mux_signal(1, select_code);
      case AdcSource::Mux2: return mux_signal(2, select_code);
      case AdcSource::Mux3: return mux_signal(3, select_code);
      case AdcSource::WindVane: return "WIND_VANE";
    }
    return std::nullopt;
  }

  const std::vector<std::uint8_t>& power_monitor_addresses() const {
    return power_monitor_addresses_;
  }

  bool has_power_monitor(std::uint8_t address) const {
    for (auto a : power_monitor_addresses_)
      if (a == address) return true;
    return false;
  }

  // All assigned (mux, code, signal) rows in mux-then-code order.
  std::vector<MuxAssignment> enumerate_assignments() const {
    std::vector<MuxAssignment> out;
    for (int mux = 1; mux <= 3; ++mux)
      for (int code = 0; code < 8; ++code)
        if (auto s = mux_signal(mux, code))
          out.push_back(MuxAssignment{mux, code, *s});
    return out;
  }

  // Structural invariants: every signal assigned exactly once, ADC sources a
  // bijection over the four inputs, monitor addresses distinct.
  std::vector<std::string> validate() const {
    std::vector<std::string> problems;
    std::vector<std::string> seen;
    for (const auto& a : enumerate_assignments()) {
      for (const auto& s : seen)
        if (s == a.signal) problems.push_back("duplicate signal " + a.signal);
      seen.push_back(a.signal);
    }
    std::array<int, 4> source_count{};
    for (int i = 0; i < 4; ++i) source_count[static_cast<int>(adc_sources_[i])]++;
    for (int i = 0; i < 4; ++i)
      if (source_count[i] != 1) problems.push_back("adc source mapping is not a bijection");
    if (power_monitor_addresses_.size() != 2 ||
        power_monitor_addresses_[0] == power_monitor_addresses_[1])
      problems.push_back("power monitor addresses must be two distinct bus addresses");
    return problems;
  }

 private:
  static void check_mux(int mux_id) {
    if (mux_id < 1 || mux_id > 3) throw std::invalid_argument("mux_id out of range");
  }
  static void check_code(int code) {
    if (code < 0 || code > 7) throw std::invalid_argument("select code out of range");
  }

  std::array<std::array<std::string, 8>, 3> mux_signals_{};
  std::array<AdcSource, 4> adc_sources_{};
  std::vector<std::uint8_t> power_monitor_addresses_;
};

}  // namespace pvdaq

#include <catch2/catch_amalgamated.hpp>

#include <thread>

#include "pvdaq/hal.hpp"
#include "pvdaq/sim_backend.hpp"

using namespace pvdaq;
using Catch::Approx;

namespace {

const TimeMs kDay = ms_from_civil(2025, 3, 10);

struct Bench {
  SimEnvConfig env;
  ThermistorCal thermistor;
  ElectricalCal electrical;
  MeteoCal meteo = default_meteo_cal();
  HalConfig hal_config;

  std::unique_ptr<SimBackend> backend;
  std::unique_ptr<Hal> hal;

  void build(std::uint64_t seed = 42) {
    backend = std::make_unique<SimBackend>(seed, env, thermistor, electrical, meteo,
                                           hal_config);
    hal = std::make_unique<Hal>(*backend, ChannelMap::standard(), hal_config);
    backend->power_on(kDay);
    REQUIRE(hal->initialize().ok());
  }
};

}  // namespace

TEST_CASE("mux selection routes all three multiplexers", "[hal]") {
  Bench b;
  b.build();
  auto lease = b.hal->acquire_bus();

  REQUIRE(lease.select_mux_channel(0).ok());
  const ChannelMap& map = b.hal->channel_map();
  CHECK(map.routed_signal(AdcInput::A3, 0) == "T0");
  CHECK(map.routed_signal(AdcInput::A2, 0) == "T8");
  CHECK(map.routed_signal(AdcInput::A1, 0) == "T16");

  REQUIRE(lease.select_mux_channel(5).ok());
  CHECK(map.routed_signal(AdcInput::A1, 5) == "IRR+");

  CHECK_THROWS_AS(lease.select_mux_channel(8), std::invalid_argument);
  CHECK_THROWS_AS(lease.select_mux_channel(-1), std::invalid_argument);
}

TEST_CASE("adc conversion against known sources", "[hal]") {
  Bench b;
  b.env.vane_fixed_index = 0;
  b.meteo.vane_lookup[0].voltage = 0.0;

  SECTION("0 V source reads code 0") {
    b.build();
    auto lease = b.hal->acquire_bus();
    auto code = lease.read_adc(AdcInput::A0);
    REQUIRE(code.ok());
    CHECK(code.value() == 0);
  }

  SECTION("half of full scale reads 16384") {
    b.meteo.vane_lookup[0].voltage = 2.048;
    b.build();
    auto lease = b.hal->acquire_bus();
    auto code = lease.read_adc(AdcInput::A0);
    REQUIRE(code.ok());
    CHECK(code.value() == 16384);
  }

  SECTION("overrange clamps at positive full scale") {
    b.meteo.vane_lookup[0].voltage = 5.0;
    b.build();
    auto lease = b.hal->acquire_bus();
    auto code = lease.read_adc(AdcInput::A0);
    REQUIRE(code.ok());
    CHECK(code.value() == 32767);
  }
}

TEST_CASE("sensor faults are scoped to the failed signal", "[hal][fault]") {
  Bench b;
  b.build();
  b.backend->set_fault_script(FaultScript(
      {FaultEntry{kDay + 10 * kHourMs, SensorFail{"T3", 20 * kMinuteMs}}}));
  b.backend->advance_to(kDay + 10 * kHourMs + kMinuteMs);

  auto lease = b.hal->acquire_bus();
  REQUIRE(lease.select_mux_channel(3).ok());

  auto t3 = lease.read_adc(AdcInput::A3);  // routed to T3
  REQUIRE_FALSE(t3.ok());
  CHECK(t3.error() == HalError::BusFault);

  auto t11 = lease.read_adc(AdcInput::A2);  // same select code, different mux
  CHECK(t11.ok());
  auto t19 = lease.read_adc(AdcInput::A1);
  CHECK(t19.ok());

  // after the fault window the channel recovers
  b.backend->advance_to(kDay + 10 * kHourMs + 21 * kMinuteMs);
  CHECK(lease.read_adc(AdcInput::A3).ok());
}

TEST_CASE("fault on the shared select lines fails selection and init", "[hal][fault]") {
  Bench b;
  b.build();
  b.backend->set_fault_script(
      FaultScript({FaultEntry{kDay + kHourMs, SensorFail{"SEL", kMinuteMs}}}));
  b.backend->advance_to(kDay + kHourMs);

  auto lease = b.hal->acquire_bus();
  auto sel = lease.select_mux_channel(2);
  REQUIRE_FALSE(sel.ok());
  CHECK(sel.error() == HalError::BusFault);
  CHECK_FALSE(lease.initialize().ok());
}

TEST_CASE("power monitor readings", "[hal]") {
  Bench b;

  SECTION("open circuit at night reads zero current and power") {
    b.build();
    b.backend->advance_to(kDay + 3 * kHourMs);  // 03:00, no sun
    auto lease = b.hal->acquire_bus();
    auto raw = lease.read_power_monitor(0x40);
    REQUIRE(raw.ok());
    CHECK(raw.value().current_code == 0);
    CHECK(raw.value().power_code == 0);
  }

  SECTION("energy accumulates strictly under constant positive power") {
    b.build();
    b.backend->advance_to(kDay + 12 * kHourMs);
    auto lease = b.hal->acquire_bus();
    auto first = lease.read_power_monitor(0x40);
    b.backend->advance_to(kDay + 12 * kHourMs + 10 * kSecondMs);
    auto second = lease.read_power_monitor(0x40);
    REQUIRE(first.ok());
    REQUIRE(second.ok());
    CHECK(second.value().energy_code > first.value().energy_code);
  }

  SECTION("unconfigured address is rejected") {
    b.build();
    auto lease = b.hal->acquire_bus();
    CHECK_THROWS_AS(lease.read_power_monitor(0x42), std::invalid_argument);
  }

  SECTION("power cycle resets the energy accumulator") {
    b.build();
    b.backend->advance_to(kDay + 12 * kHourMs);
    auto lease = b.hal->acquire_bus();
    auto before = lease.read_power_monitor(0x40);
    REQUIRE(before.ok());
    CHECK(before.value().energy_code > 0);
    b.backend->power_on(kDay + 12 * kHourMs);  // reboot at noon
    auto after = lease.read_power_monitor(0x40);
    REQUIRE(after.ok());
    CHECK(after.value().energy_code == 0);
  }
}

TEST_CASE("ambient sensor behavior", "[hal]") {
  Bench b;
  b.env.ambient_base = 25.0;
  b.env.ambient_amplitude = 0.0;
  b.env.humidity_base = 60.0;
  b.env.humidity_drop = 0.0;
  b.build();

  auto lease = b.hal->acquire_bus();

  SECTION("simulator values pass through") {
    auto r = lease.read_ambient(kDay + 6 * kHourMs);
    REQUIRE(r.ok());
    CHECK(r.value().temperature_c == Approx(25.0));
    CHECK(r.value().humidity_rh == Approx(60.0));
  }

  SECTION("re-reading faster than the sensor allows is a contract violation") {
    REQUIRE(lease.read_ambient(kDay).ok());
    CHECK_THROWS_AS(lease.read_ambient(kDay + 500), std::logic_error);
    CHECK(lease.read_ambient(kDay + 2000).ok());
  }

  SECTION("a scripted DHT fault reads as timeout") {
    b.backend->set_fault_script(
        FaultScript({FaultEntry{kDay + kHourMs, SensorFail{"DHT", kMinuteMs}}}));
    b.backend->advance_to(kDay + kHourMs);
    auto r = lease.read_ambient(kDay + kHourMs);
    REQUIRE_FALSE(r.ok());
    CHECK(r.error() == HalError::ReadTimeout);
  }
}

TEST_CASE("pulse counters return deltas and reset atomically", "[hal]") {
  Bench b;

  SECTION("no wind, no rain") {
    b.env.wind_base_hz = 0.0;
    b.env.wind_gust_hz = 0.0;
    b.env.rain_shower_probability = 0.0;
    b.build();
    b.backend->advance_to(kDay + kMinuteMs);
    auto c = b.hal->poll_pulse_counters();
    CHECK(c.anemometer_pulses == 0);
    CHECK(c.rain_tips == 0);
  }

  SECTION("steady 1 Hz wind polled after 60 s yields 60 pulses") {
    b.env.wind_base_hz = 1.0;
    b.env.wind_gust_hz = 0.0;
    b.env.rain_shower_probability = 0.0;
    b.build();
    b.backend->advance_to(kDay + kMinuteMs);
    auto c = b.hal->poll_pulse_counters();
    CHECK(c.anemometer_pulses == 60);

    // immediate re-poll is a zero delta
    auto c2 = b.hal->poll_pulse_counters();
    CHECK(c2.anemometer_pulses == 0);
    CHECK(c2.rain_tips == 0);
  }

  SECTION("no pulse lost or double-counted across consecutive polls") {
    b.env.wind_base_hz = 2.0;
    b.env.wind_gust_hz = 5.0;
    b.build();
    std::uint64_t sum = 0;
    for (int i = 1; i <= 600; ++i) {
      b.backend->advance_to(kDay + i * kSecondMs);
      sum += b.hal->poll_pulse_counters().anemometer_pulses;
    }
    CHECK(sum == b.backend->cumulative_wind_pulses(kDay + 600 * kSecondMs) -
                     b.backend->cumulative_wind_pulses(kDay));
  }
}

TEST_CASE("diurnal model shape", "[hal][sim]") {
  Bench b;
  b.build();

  // solar noon for a 05:00..18:00 arc is 11:30
  const TimeMs noon = kDay + 11 * kHourMs + 30 * kMinuteMs;
  CHECK(b.backend->irradiance(noon) == Approx(1000.0));
  CHECK(b.backend->irradiance(kDay + 3 * kHourMs) == 0.0);
  CHECK(b.backend->irradiance(kDay + 5 * kHourMs) == Approx(0.0).margin(1e-9));

  // ambient lags irradiance
  CHECK(b.backend->ambient_temperature(noon + b.env.ambient_lag_ms) ==
        Approx(b.env.ambient_base + b.env.ambient_amplitude));

  // control panel runs hotter than the passive-cooled one at full sun
  CHECK(b.backend->thermistor_temperature(4, noon) >
        b.backend->thermistor_temperature(14, noon));
}

TEST_CASE("same seed and script give a byte-identical bus log", "[hal][determinism]") {
  auto run = [](std::uint64_t seed) {
    Bench b;
    b.build(seed);
    b.backend->set_fault_script(FaultScript(
        {FaultEntry{kDay + 10 * kHourMs + 30 * kSecondMs, SensorFail{"T7", kMinuteMs}}}));
    for (int i = 0; i < 240; ++i) {
      b.backend->advance_to(kDay + 10 * kHourMs + i * kSecondMs);
      auto lease = b.hal->acquire_bus();
      const int code = i % 8;
      (void)lease.select_mux_channel(code);
      (void)lease.read_adc(AdcInput::A3);
      (void)lease.read_adc(AdcInput::A2);
      (void)lease.read_adc(AdcInput::A0);  // vane: seeded noise
      if (i % 5 == 0) (void)lease.read_power_monitor(i % 10 == 0 ? 0x40 : 0x41);
      b.hal->poll_pulse_counters();
    }
    return b.backend->bus_log()->to_text();
  };

  const std::string a = run(1234);
  const std::string b = run(1234);
  const std::string c = run(4321);
  CHECK(a == b);
  CHECK(a != c);  // the seed actually matters
}

TEST_CASE("bus lease serializes concurrent access", "[hal][concurrency]") {
  Bench b;
  b.build();
  b.backend->advance_to(kDay + 12 * kHourMs);

  constexpr int kRounds = 200;
  auto worker = [&](int code) {
    for (int i = 0; i < kRounds; ++i) {
      auto lease = b.hal->acquire_bus();
      REQUIRE(lease.select_mux_channel(code).ok());
      REQUIRE(lease.read_adc(AdcInput::A3).ok());
    }
  };
  std::thread t1(worker, 1);
  std::thread t2(worker, 2);
  t1.join();
  t2.join();

  // every select is immediately followed by its own adc read: leases never interleave
  const auto& entries = b.backend->bus_log()->entries();
  for (size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].op == "select") {
      REQUIRE(i + 1 < entries.size());
      CHECK(entries[i + 1].op == "adc");
      const std::string code = entries[i].detail.substr(5);  // "code=N"
      CHECK(entries[i + 1].detail.find("sel=" + code) != std::string::npos);
    }
  }
}

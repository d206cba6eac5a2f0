#include <catch2/catch_amalgamated.hpp>

#include "pvdaq/channel_map.hpp"

using namespace pvdaq;

TEST_CASE("standard map matches the deployed wiring row by row", "[channel_map]") {
  const ChannelMap map = ChannelMap::standard();

  // 22 assigned signals: 16 thermistors on MUX1/2, 4 thermistors plus the
  // differential irradiance taps on MUX3, codes 6 and 7 left open.
  struct Row { int mux; int code; const char* signal; };
  const Row expected[] = {
      {1, 0, "T0"},  {1, 1, "T1"},  {1, 2, "T2"},  {1, 3, "T3"},
      {1, 4, "T4"},  {1, 5, "T5"},  {1, 6, "T6"},  {1, 7, "T7"},
      {2, 0, "T8"},  {2, 1, "T9"},  {2, 2, "T10"}, {2, 3, "T11"},
      {2, 4, "T12"}, {2, 5, "T13"}, {2, 6, "T14"}, {2, 7, "T15"},
      {3, 0, "T16"}, {3, 1, "T17"}, {3, 2, "T18"}, {3, 3, "T19"},
      {3, 4, "IRR-"}, {3, 5, "IRR+"},
  };

  const auto rows = map.enumerate_assignments();
  REQUIRE(rows.size() == 22);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].mux_id == expected[i].mux);
    CHECK(rows[i].select_code == expected[i].code);
    CHECK(rows[i].signal == expected[i].signal);
  }

  CHECK_FALSE(map.mux_signal(3, 6).has_value());
  CHECK_FALSE(map.mux_signal(3, 7).has_value());
}

TEST_CASE("adc routing and monitor addresses", "[channel_map]") {
  const ChannelMap map = ChannelMap::standard();

  CHECK(map.adc_source(AdcInput::A3) == AdcSource::Mux1);
  CHECK(map.adc_source(AdcInput::A2) == AdcSource::Mux2);
  CHECK(map.adc_source(AdcInput::A1) == AdcSource::Mux3);
  CHECK(map.adc_source(AdcInput::A0) == AdcSource::WindVane);

  CHECK(map.routed_signal(AdcInput::A3, 0) == "T0");
  CHECK(map.routed_signal(AdcInput::A2, 0) == "T8");
  CHECK(map.routed_signal(AdcInput::A1, 0) == "T16");
  CHECK(map.routed_signal(AdcInput::A1, 5) == "IRR+");
  CHECK(map.routed_signal(AdcInput::A0, 3) == "WIND_VANE");
  CHECK_FALSE(map.routed_signal(AdcInput::A1, 7).has_value());

  REQUIRE(map.power_monitor_addresses().size() == 2);
  CHECK(map.power_monitor_addresses()[0] == 0x40);
  CHECK(map.power_monitor_addresses()[1] == 0x41);
  CHECK(map.has_power_monitor(0x41));
  CHECK_FALSE(map.has_power_monitor(0x42));

  CHECK(map.validate().empty());
}

TEST_CASE("out of range lookups are rejected", "[channel_map]") {
  const ChannelMap map = ChannelMap::standard();
  CHECK_THROWS_AS(map.mux_signal(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(map.mux_signal(4, 0), std::invalid_argument);
  CHECK_THROWS_AS(map.mux_signal(1, 8), std::invalid_argument);
  CHECK_THROWS_AS(map.mux_signal(1, -1), std::invalid_argument);
}

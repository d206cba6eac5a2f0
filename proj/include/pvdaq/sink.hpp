#pragma once

#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "pvdaq/civil_time.hpp"
#include "pvdaq/frame.hpp"

namespace pvdaq {

// Line-protocol encoding of one frame, second-precision timestamps:
//   pv_electrical,panel=0 volts=5.9,amps=0.98,watts=5.8,joules=123.4 1741600800
//   pv_thermal,sensor=t07 temp=41.2 1741600800
//   weather ambient_temp=25.1,humidity=55.0,... 1741600800
// Flagged fields are omitted; a measurement with no surviving field emits no
// line. Values reuse the CSV fixed-decimal formatting so the two stores are
// comparable byte for byte.
inline std::vector<std::string> encode_line_protocol(const MeasurementFrame& frame) {
  std::vector<std::string> lines;
  const std::string ts = " " + std::to_string(frame.timestamp / kSecondMs);

  for (int panel = 0; panel < 2; ++panel) {
    static constexpr const char* kComponents[4] = {"volts", "amps", "watts", "joules"};
    std::string fields;
    for (int c = 0; c < 4; ++c) {
      const Field f = panel_field(panel, c);
      if (!frame.is_valid(f)) continue;
      if (!fields.empty()) fields += ',';
      fields += kComponents[c];
      fields += '=';
      fields += format_field_value(f, frame.value(f));
    }
    if (!fields.empty())
      lines.push_back("pv_electrical,panel=" + std::to_string(panel) + " " + fields + ts);
  }

  for (int i = 0; i < 20; ++i) {
    const Field f = thermistor_field(i);
    if (!frame.is_valid(f)) continue;
    lines.push_back("pv_thermal,sensor=" + std::string(field_name(f)) +
                    " temp=" + format_field_value(f, frame.value(f)) + ts);
  }

  {
    static constexpr Field kWeather[] = {Field::AmbientTemp, Field::Humidity,
                                         Field::Irradiance, Field::WindSpeed,
                                         Field::WindDir, Field::RainMm};
    std::string fields;
    for (Field f : kWeather) {
      if (!frame.is_valid(f)) continue;
      if (!fields.empty()) fields += ',';
      fields += field_name(f);
      fields += '=';
      fields += format_field_value(f, frame.value(f));
    }
    if (!fields.empty()) lines.push_back("weather " + fields + ts);
  }

  return lines;
}

// Transport for encoded batches. Returns false on connection failure, in
// which case the batch stays queued; network failure is a normal state.
class SinkClient {
 public:
  virtual ~SinkClient() = default;
  virtual bool deliver(const std::vector<std::string>& lines) = 0;
};

// Local line-protocol dump; doubles as the scenario sink export.
class FileSinkClient final : public SinkClient {
 public:
  explicit FileSinkClient(std::filesystem::path path) : path_(std::move(path)) {
    std::filesystem::create_directories(path_.parent_path());
  }

  bool deliver(const std::vector<std::string>& lines) override {
    std::ofstream out(path_, std::ios::app);
    if (!out) return false;
    for (const auto& l : lines) out << l << '\n';
    out.flush();
    return static_cast<bool>(out);
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Wraps a client behind a connectivity predicate (the simulated uplink).
class GatedSinkClient final : public SinkClient {
 public:
  GatedSinkClient(SinkClient& inner, std::function<bool()> up)
      : inner_(inner), up_(std::move(up)) {}

  bool deliver(const std::vector<std::string>& lines) override {
    if (up_ && !up_()) return false;
    return inner_.deliver(lines);
  }

 private:
  SinkClient& inner_;
  std::function<bool()> up_;
};

struct DrainReport {
  size_t delivered_batches = 0;
  size_t remaining_batches = 0;
  bool connection_ok = true;
};

// FIFO of encoded frame batches awaiting delivery. Bounded: when the uplink
// stays dark past the high-water mark the oldest batches are dropped with a
// warning. The CSV remains the complete record.
class SinkBacklog {
 public:
  explicit SinkBacklog(size_t max_batches = 1440) : max_batches_(max_batches) {}

  struct Batch {
    TimeMs timestamp = 0;
    std::vector<std::string> lines;
  };

  // returns the number of batches dropped to make room
  size_t push(TimeMs timestamp, std::vector<std::string> lines) {
    size_t dropped = 0;
    pending_.push_back(Batch{timestamp, std::move(lines)});
    while (pending_.size() > max_batches_) {
      pending_.pop_front();
      ++dropped;
    }
    high_water_ = std::max(high_water_, pending_.size());
    return dropped;
  }

  // Delivers pending batches in order; stops at the first connection
  // failure. Never raises toward acquisition.
  DrainReport drain(SinkClient& client) {
    DrainReport report;
    while (!pending_.empty()) {
      if (!client.deliver(pending_.front().lines)) {
        report.connection_ok = false;
        break;
      }
      pending_.pop_front();
      ++report.delivered_batches;
    }
    report.remaining_batches = pending_.size();
    return report;
  }

  size_t pending() const { return pending_.size(); }
  size_t high_water() const { return high_water_; }
  bool empty() const { return pending_.empty(); }
  const std::deque<Batch>& batches() const { return pending_; }

 private:
  size_t max_batches_;
  size_t high_water_ = 0;
  std::deque<Batch> pending_;
};

}  // namespace pvdaq

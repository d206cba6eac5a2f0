#pragma once

#include <array>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pvdaq/clock.hpp"
#include "pvdaq/config.hpp"
#include "pvdaq/convert.hpp"
#include "pvdaq/csv_store.hpp"
#include "pvdaq/frame.hpp"
#include "pvdaq/hal.hpp"
#include "pvdaq/log.hpp"
#include "pvdaq/recover.hpp"
#include "pvdaq/rolling.hpp"
#include "pvdaq/sink.hpp"
#include "pvdaq/state_file.hpp"
#include "pvdaq/sync.hpp"

namespace pvdaq {

// Shared between the fast sampler (writer) and the scheduler (reader).
// 20 thermistor windows + ambient + humidity, plus the 1 Hz pulse polls the
// wind average and rain accumulation are computed from.
struct SampleBuffers {
  std::mutex mutex;
  std::array<RollingWindow, 20> thermistors;
  RollingWindow ambient{kMinuteMs};
  RollingWindow humidity{kMinuteMs};

  struct Poll {
    TimeMs t;
    std::uint32_t count;
  };
  std::deque<Poll> wind_polls;
  std::deque<Poll> rain_polls;

  // pulses accumulated in (from, to]; polls are 1 Hz so the sum over poll
  // deltas reproduces the interval exactly
  std::uint64_t wind_pulses_between(TimeMs from, TimeMs to) const {
    std::uint64_t sum = 0;
    for (const auto& p : wind_polls)
      if (p.t > from && p.t <= to) sum += p.count;
    return sum;
  }
  std::uint64_t rain_tips_between(TimeMs from, TimeMs to) const {
    std::uint64_t sum = 0;
    for (const auto& p : rain_polls)
      if (p.t > from && p.t <= to) sum += p.count;
    return sum;
  }
  bool has_wind_polls(TimeMs from, TimeMs to) const {
    for (const auto& p : wind_polls)
      if (p.t > from && p.t <= to) return true;
    return false;
  }

  void prune(TimeMs now) {
    const TimeMs keep = now - 2 * kMinuteMs;
    while (!wind_polls.empty() && wind_polls.front().t < keep) wind_polls.pop_front();
    while (!rain_polls.empty() && rain_polls.front().t < keep) rain_polls.pop_front();
  }

  void clear() {
    for (auto& w : thermistors) w.clear();
    ambient.clear();
    humidity.clear();
    wind_polls.clear();
    rain_polls.clear();
  }
};

struct ScanResult {
  std::array<std::optional<double>, 20> temperatures;
  int read_failures = 0;
};

// Complete thermistor pass: select codes 0..7 read the two full banks, codes
// 0..3 read the third. Each read waits the mux settling plus one conversion
// window, so a full scan costs 20*(settle+conversion) of bus time, well
// under the 5 s cadence. A per-channel fault marks only that channel.
inline ScanResult scan_thermistors(Hal& hal, Clock& clock, const ThermistorCal& cal) {
  ScanResult result;
  const HalConfig& hc = hal.config();
  auto lease = hal.acquire_bus();

  auto read_channel = [&](AdcInput input, int t_index) {
    clock.sleep_for(hc.mux_settle_ms + hc.adc_conversion_ms, nullptr);
    auto code = lease.read_adc(input);
    if (!code.ok()) {
      ++result.read_failures;
      return;
    }
    const double volts = adc_code_to_voltage(code.value(), hc.adc_full_scale);
    auto r = divider_to_resistance(volts, cal);
    if (!r.ok()) {  // open or shorted sensor
      ++result.read_failures;
      return;
    }
    result.temperatures[t_index] = resistance_to_temperature(r.value(), cal);
  };

  for (int code = 0; code < 8; ++code) {
    if (!lease.select_mux_channel(code).ok()) {
      result.read_failures += code < 4 ? 3 : 2;
      continue;
    }
    read_channel(AdcInput::A3, code);
    read_channel(AdcInput::A2, 8 + code);
    if (code < 4) read_channel(AdcInput::A1, 16 + code);
  }
  return result;
}

// Differential irradiance: route IRR-, settle >= the configured 100 ms, read,
// then the same for IRR+. The settling gap between the two conversions is
// what makes the reading trustworthy, and tests assert it from the bus log.
inline std::optional<double> read_irradiance_pass(Hal& hal, Clock& clock,
                                                  const MeteoCal& cal) {
  const HalConfig& hc = hal.config();
  auto lease = hal.acquire_bus();

  auto read_tap = [&](int select_code) -> std::optional<double> {
    if (!lease.select_mux_channel(select_code).ok()) return std::nullopt;
    clock.sleep_for(hc.irradiance_settle_ms + hc.adc_conversion_ms, nullptr);
    auto code = lease.read_adc(AdcInput::A1);
    if (!code.ok()) return std::nullopt;
    return adc_code_to_voltage(code.value(), hc.adc_full_scale);
  };

  const auto v_minus = read_tap(4);
  if (!v_minus) return std::nullopt;
  const auto v_plus = read_tap(5);
  if (!v_plus) return std::nullopt;
  return differential_to_irradiance(*v_plus, *v_minus, cal);
}

inline std::optional<double> read_vane_direction(Hal& hal, Clock& clock,
                                                 const MeteoCal& cal) {
  const HalConfig& hc = hal.config();
  auto lease = hal.acquire_bus();
  clock.sleep_for(hc.adc_conversion_ms, nullptr);
  auto code = lease.read_adc(AdcInput::A0);
  if (!code.ok()) return std::nullopt;
  return vane_voltage_to_direction(adc_code_to_voltage(code.value(), hc.adc_full_scale),
                                   cal);
}

// Continuous high-rate acquisition: pulse counters at 1 Hz, a full thermistor
// scan plus one ambient query every 5 s. Individual read failures mark
// validity (by not appending) and bump the failure totals; the loop itself
// never stops on a sensor error.
class FastSampler {
 public:
  FastSampler(Hal& hal, Clock& clock, SampleBuffers& buffers, const ThermistorCal& cal,
              Logger& log, ErrorCounter& counter)
      : hal_(hal), clock_(clock), buffers_(buffers), cal_(cal), log_(log),
        counter_(counter) {}

  void start(TimeMs now) {
    next_tick_ = floor_to(now, kSecondMs);
    if (next_tick_ < now) next_tick_ += kSecondMs;
  }

  TimeMs next_due() const { return next_tick_; }

  void tick(TimeMs scheduled) {
    const PulseCounters pulses = hal_.poll_pulse_counters();
    {
      std::lock_guard<std::mutex> lock(buffers_.mutex);
      buffers_.wind_polls.push_back({scheduled, pulses.anemometer_pulses});
      buffers_.rain_polls.push_back({scheduled, pulses.rain_tips});
      buffers_.prune(scheduled);
    }

    if ((ms_of_day(scheduled) / kSecondMs) % 5 == 0) {
      const ScanResult scan = scan_thermistors(hal_, clock_, cal_);
      for (int i = 0; i < static_cast<int>(scan.read_failures); ++i)
        counter_.record_read_failure();
      if (scan.read_failures > 0)
        log_.debug("thermistor scan: " + std::to_string(scan.read_failures) +
                   " channel(s) failed");

      std::optional<AmbientReading> ambient;
      {
        auto lease = hal_.acquire_bus();
        auto r = lease.read_ambient(clock_.now());
        if (r.ok()) {
          ambient = r.value();
        } else {
          counter_.record_read_failure();
          log_.debug("ambient read timeout");
        }
      }

      std::lock_guard<std::mutex> lock(buffers_.mutex);
      for (int i = 0; i < 20; ++i)
        if (scan.temperatures[i]) buffers_.thermistors[i].append(scheduled, *scan.temperatures[i]);
      if (ambient) {
        buffers_.ambient.append(scheduled, ambient->temperature_c);
        buffers_.humidity.append(scheduled, ambient->humidity_rh);
      }
      ++scans_completed_;
    }

    next_tick_ = scheduled + kSecondMs;
    ++ticks_;
  }

  std::uint64_t ticks() const { return ticks_; }
  std::uint64_t scans_completed() const { return scans_completed_; }

 private:
  Hal& hal_;
  Clock& clock_;
  SampleBuffers& buffers_;
  const ThermistorCal& cal_;
  Logger& log_;
  ErrorCounter& counter_;
  TimeMs next_tick_ = 0;
  std::uint64_t ticks_ = 0;
  std::uint64_t scans_completed_ = 0;
};

// Everything the minute cycle needs from the outside world.
struct SchedulerContext {
  Clock& clock;
  Hal& hal;
  SampleBuffers& buffers;
  Logger& log;
  const RunConfig& config;
  ErrorCounter& counter;
  SinkClient* sink = nullptr;          // nullptr: sink disabled
  SinkBacklog* backlog = nullptr;
  RemoteTarget* sync_remote = nullptr; // nullptr: sync disabled
  std::filesystem::path archive_dir;
  std::filesystem::path state_dir;
  std::function<void(const MeasurementFrame&)> frame_observer;
  std::function<bool()> archive_fault_hook;  // fault injection for IO paths
};

// The daily task timeline: day start at the window opening, one measurement
// cycle per minute boundary inside the window, health verification every
// fifth minute, end-of-day processing at the window close, idle otherwise.
class MinuteScheduler {
 public:
  explicit MinuteScheduler(SchedulerContext ctx) : ctx_(std::move(ctx)) {}

  // Recovery evaluation happened before tasks start; act on the decision.
  void start(TimeMs now, const RecoveryDecision& decision, const StateLoadResult& saved) {
    next_minute_ = floor_minute(now);
    if (next_minute_ < now) next_minute_ += kMinuteMs;
    ctx_.log.info(std::string("recovery decision: ") + recovery_mode_name(decision.mode) +
                  " (" + recovery_reason_name(decision.reason) + ")");
    ctx_.log.info("frame assembly order: analog pass, then power monitors");
    switch (decision.mode) {
      case RecoveryMode::Resume:
        resume_session(now, saved.state);
        break;
      case RecoveryMode::FreshActive:
        start_session(now, decision.reason == RecoveryReason::IntegrityFailed);
        break;
      case RecoveryMode::FreshIdle:
        break;
    }
  }

  TimeMs next_due() const { return next_minute_; }

  void tick(TimeMs boundary) {
    next_minute_ = boundary + kMinuteMs;
    const TimeMs m = ms_of_day(boundary);
    const WindowConfig& window = ctx_.config.window;

    if (m == window.start && !session_active_) start_session(boundary, false);

    if (session_active_ && window.contains(boundary) && boundary >= session_begin_) {
      minute_cycle(boundary);
      const int minute = static_cast<int>(m / kMinuteMs);
      if (minute % 5 == 0) run_health_check();
      if (ctx_.sync_remote && ctx_.config.sync.enabled &&
          minute % ctx_.config.sync.interval_min == 0)
        run_sync();
    }

    if (m == window.end && session_active_) {
      ctx_.log.info("end-of-day processing");
      close_session(boundary, false);
    }
  }

  // Ordered teardown for signals; end-of-day for the partial day without
  // fabricating a final frame. Recording stays true inside the window so a
  // later restart can resume.
  void shutdown(TimeMs now) {
    if (!session_active_) return;
    const bool preserve = ctx_.config.window.contains(now);
    ctx_.log.info(std::string("shutdown requested, ") +
                  (preserve ? "session resumable" : "session closed"));
    close_session(now, preserve);
  }

  bool session_active() const { return session_active_; }
  const std::filesystem::path& csv_path() const { return csv_.path(); }
  std::uint64_t frames_emitted() const { return frames_emitted_; }
  int reinit_events() const { return reinit_events_; }
  int health_reports() const { return health_reports_; }
  size_t pending_retry_frames() const { return pending_.size(); }
  std::uint64_t rows_written() const { return csv_.is_open() ? csv_.rows_written() : 0; }
  double rain_day_accum() const { return rain_day_accum_; }

 private:
  void start_session(TimeMs now, bool force_new_file) {
    const auto mode =
        force_new_file ? DailyCsv::OpenMode::ForceNew : DailyCsv::OpenMode::AppendOrCreate;
    auto opened = DailyCsv::open(ctx_.archive_dir, now, mode);
    if (!opened.ok() && opened.error() == CsvError::HeaderMismatch) {
      // schema drift on disk: refuse to touch it, take a suffixed fresh file
      ctx_.log.warn("existing daily file has a foreign header, starting a suffixed file");
      opened = DailyCsv::open(ctx_.archive_dir, now, DailyCsv::OpenMode::ForceNew);
    }
    if (!opened.ok()) {
      ctx_.log.error("cannot open daily archive: " +
                     std::string(csv_error_name(opened.error())));
      return;
    }
    csv_ = std::move(opened.value());
    csv_.set_fail_hook(ctx_.archive_fault_hook);
    session_active_ = true;
    session_day_ = day_start(now);
    session_begin_ = now;
    rain_day_accum_ = 0.0;
    capture_energy_offsets();
    ctx_.log.info("session started, archive " + csv_.path().string());
    persist_state(now, true);
  }

  void resume_session(TimeMs now, const SessionState& saved) {
    auto opened =
        DailyCsv::open(ctx_.archive_dir, now, DailyCsv::OpenMode::AppendOrCreate);
    if (!opened.ok()) {
      ctx_.log.warn("resume failed to reopen archive, starting fresh");
      start_session(now, true);
      return;
    }
    csv_ = std::move(opened.value());
    csv_.set_fail_hook(ctx_.archive_fault_hook);
    session_active_ = true;
    session_day_ = saved.session_date;
    session_begin_ = now;
    rain_day_accum_ = saved.rain_day_accum;
    restore_energy_offsets(saved);
    ctx_.log.info("session resumed, archive " + csv_.path().string() + " rows=" +
                  std::to_string(csv_.rows_written()));
    persist_state(now, true);
  }

  void close_session(TimeMs now, bool preserve_recording) {
    if (ctx_.backlog && ctx_.sink) {
      const DrainReport drained = ctx_.backlog->drain(*ctx_.sink);
      if (drained.remaining_batches > 0)
        ctx_.log.warn("sink flush left " + std::to_string(drained.remaining_batches) +
                      " batch(es) queued");
    }
    if (ctx_.sync_remote && ctx_.config.sync.enabled) run_sync();
    persist_state(now, preserve_recording);
    csv_.close();
    session_active_ = false;
    pending_.clear();
  }

  void capture_energy_offsets() {
    auto lease = ctx_.hal.acquire_bus();
    const auto& addrs = ctx_.hal.channel_map().power_monitor_addresses();
    for (int p = 0; p < 2; ++p) {
      energy_offset_[p] = 0.0;
      energy_last_[p] = 0.0;
      auto raw = lease.read_power_monitor(addrs[p]);
      if (raw.ok()) {
        const auto si = power_registers_to_si(raw.value(), ctx_.config.electrical);
        energy_offset_[p] = -si.joules;  // day energy starts at zero
      } else {
        ctx_.counter.record_read_failure();
        ctx_.log.warn("energy offset capture failed for panel " + std::to_string(p));
      }
    }
  }

  void restore_energy_offsets(const SessionState& saved) {
    energy_offset_[0] = saved.p0_energy_offset;
    energy_offset_[1] = saved.p1_energy_offset;
    energy_last_[0] = saved.p0_last_energy;
    energy_last_[1] = saved.p1_last_energy;
    auto lease = ctx_.hal.acquire_bus();
    const auto& addrs = ctx_.hal.channel_map().power_monitor_addresses();
    for (int p = 0; p < 2; ++p) {
      auto raw = lease.read_power_monitor(addrs[p]);
      if (!raw.ok()) continue;
      const auto si = power_registers_to_si(raw.value(), ctx_.config.electrical);
      if (energy_offset_[p] + si.joules < energy_last_[p]) {
        // monitor lost its accumulator to the power cycle: re-anchor so the
        // reported cumulative value continues from the last archived one
        energy_offset_[p] = energy_last_[p] - si.joules;
      }
    }
  }

  void minute_cycle(TimeMs boundary) {
    retry_pending();
    MeasurementFrame frame = assemble_frame(boundary);
    if (ctx_.frame_observer) ctx_.frame_observer(frame);

    bool append_ok = true;
    auto appended = csv_.append(frame);
    if (appended.ok()) {
      ++frames_emitted_;
    } else {
      append_ok = false;
      pending_.push_back(frame);
      ctx_.log.error("archive append failed, frame retained for retry");
    }

    if (ctx_.backlog) {
      const size_t dropped = ctx_.backlog->push(frame.timestamp, encode_line_protocol(frame));
      if (dropped > 0)
        ctx_.log.warn("sink backlog overflow, dropped " + std::to_string(dropped) +
                      " oldest batch(es)");
      if (ctx_.sink) {
        const DrainReport d = ctx_.backlog->drain(*ctx_.sink);
        if (!d.connection_ok && !sink_down_) {
          ctx_.log.warn("sink unreachable, batches queue locally");
          sink_down_ = true;
        } else if (d.connection_ok && sink_down_) {
          ctx_.log.info("sink restored, backlog drained " +
                        std::to_string(d.delivered_batches) + " batch(es)");
          sink_down_ = false;
        }
      }
    }

    persist_state(boundary, true);

    const bool cycle_ok = frame.fully_valid() && append_ok;
    if (ctx_.counter.record_cycle_result(cycle_ok) == CycleAction::Reinitialize) {
      ++reinit_events_;
      reinitialize_hardware(ctx_.hal, ctx_.log);
    }
    ctx_.log.debug("frame " + format_iso(boundary) + " flags=" +
                   std::to_string(frame.invalid_count()));
  }

  void retry_pending() {
    while (!pending_.empty()) {
      auto res = csv_.append(pending_.front());
      if (!res.ok()) return;  // still failing, keep for next minute
      ++frames_emitted_;
      pending_.pop_front();
      ctx_.log.info("retried archive append succeeded");
    }
  }

  MeasurementFrame assemble_frame(TimeMs boundary) {
    MeasurementFrame frame;
    frame.timestamp = boundary;  // the scheduling minute, not read completion

    {
      std::lock_guard<std::mutex> lock(ctx_.buffers.mutex);
      for (int i = 0; i < 20; ++i)
        if (auto avg = ctx_.buffers.thermistors[i].average_at(boundary))
          frame.set(thermistor_field(i), *avg);
      if (auto avg = ctx_.buffers.ambient.average_at(boundary))
        frame.set(Field::AmbientTemp, *avg);
      if (auto avg = ctx_.buffers.humidity.average_at(boundary))
        frame.set(Field::Humidity, *avg);

      const TimeMs from = boundary - kMinuteMs;
      if (ctx_.buffers.has_wind_polls(from, boundary)) {
        const std::uint64_t pulses = ctx_.buffers.wind_pulses_between(from, boundary);
        frame.set(Field::WindSpeed, pulses_to_wind_speed(pulses, 60.0, ctx_.config.meteo));
      }
      const std::uint64_t tips = ctx_.buffers.rain_tips_between(from, boundary);
      frame.set(Field::RainMm, tips_to_rain_depth(tips, ctx_.config.meteo));
    }

    // analog pass first, then the power monitors
    if (auto irr = read_irradiance_pass(ctx_.hal, ctx_.clock, ctx_.config.meteo))
      frame.set(Field::Irradiance, *irr);
    else
      ctx_.counter.record_read_failure();

    if (auto dir = read_vane_direction(ctx_.hal, ctx_.clock, ctx_.config.meteo))
      frame.set(Field::WindDir, *dir);
    else
      ctx_.counter.record_read_failure();

    {
      auto lease = ctx_.hal.acquire_bus();
      const auto& addrs = ctx_.hal.channel_map().power_monitor_addresses();
      for (int p = 0; p < 2; ++p) {
        auto raw = lease.read_power_monitor(addrs[p]);
        if (!raw.ok()) {
          ctx_.counter.record_read_failure();
          continue;
        }
        const auto si = power_registers_to_si(raw.value(), ctx_.config.electrical);
        frame.set(panel_field(p, 0), si.volts);
        frame.set(panel_field(p, 1), si.amps);
        frame.set(panel_field(p, 2), si.watts);
        const double joules = energy_offset_[p] + si.joules;
        frame.set(panel_field(p, 3), joules);
        energy_last_[p] = joules;
      }
    }

    if (frame.is_valid(Field::RainMm)) rain_day_accum_ += frame.value(Field::RainMm);
    frame.rain_day_accum = rain_day_accum_;
    return frame;
  }

  void run_health_check() {
    HealthReport report;
    report.archive_open = csv_.is_open();
    report.state_rows = csv_.rows_written();
    report.file_rows = count_csv_rows_safe();
    report.rows_consistent = report.state_rows == report.file_rows;
    if (ctx_.backlog) {
      report.backlog_pending = ctx_.backlog->pending();
      report.backlog_high_water = ctx_.backlog->high_water();
    }
    report.total_read_failures = ctx_.counter.total_read_failures();
    report.total_cycle_failures = ctx_.counter.total_cycle_failures();
    ++health_reports_;

    std::string line = "health: archive=" + std::string(report.archive_open ? "ok" : "closed") +
                       " rows=" + std::to_string(report.file_rows) +
                       " backlog=" + std::to_string(report.backlog_pending) +
                       " read_failures=" + std::to_string(report.total_read_failures);
    if (!report.rows_consistent) {
      ctx_.log.warn("health: row count mismatch, session=" +
                    std::to_string(report.state_rows) + " file=" +
                    std::to_string(report.file_rows));
    }
    ctx_.log.info(line);
  }

  std::uint64_t count_csv_rows_safe() const {
    return csv_.is_open() ? count_csv_rows(csv_.path()) : 0;
  }

  void run_sync() {
    const SyncReport r = sync_archives(ctx_.archive_dir, *ctx_.sync_remote);
    if (!r.remote_available)
      ctx_.log.warn("archive sync skipped: remote unavailable");
    else if (r.failed > 0)
      ctx_.log.warn("archive sync: " + std::to_string(r.failed) + " transfer(s) failed");
    else if (r.transferred > 0)
      ctx_.log.info("archive sync: " + std::to_string(r.transferred) + " file(s) uploaded");
  }

  void persist_state(TimeMs now, bool recording) {
    SessionState state;
    state.session_date = session_day_;
    state.csv_path = csv_.path().string();
    state.rows_written = csv_.rows_written();
    state.rain_day_accum = rain_day_accum_;
    state.p0_energy_offset = energy_offset_[0];
    state.p1_energy_offset = energy_offset_[1];
    state.p0_last_energy = energy_last_[0];
    state.p1_last_energy = energy_last_[1];
    state.recording = recording;
    state.last_write = now;
    if (!write_state(ctx_.state_dir, state).ok())
      ctx_.log.error("state write failed, previous state remains authoritative");
  }

  SchedulerContext ctx_;
  TimeMs next_minute_ = 0;

  bool session_active_ = false;
  TimeMs session_day_ = 0;
  TimeMs session_begin_ = 0;
  DailyCsv csv_;
  double rain_day_accum_ = 0.0;
  double energy_offset_[2] = {0.0, 0.0};
  double energy_last_[2] = {0.0, 0.0};
  std::deque<MeasurementFrame> pending_;
  bool sink_down_ = false;

  std::uint64_t frames_emitted_ = 0;
  int reinit_events_ = 0;
  int health_reports_ = 0;
};

}  // namespace pvdaq

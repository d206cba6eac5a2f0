#pragma once

#include <atomic>
#include <memory>
#include <thread>

#include "pvdaq/acquire.hpp"
#include "pvdaq/clock.hpp"
#include "pvdaq/config.hpp"
#include "pvdaq/hal.hpp"
#include "pvdaq/lockfile.hpp"
#include "pvdaq/log.hpp"
#include "pvdaq/recover.hpp"

namespace pvdaq {

// Deterministic single-threaded executor for simulation: tasks run in
// virtual-time order, the sampler before the scheduler at equal instants.
// This is the same serialization the bus token produces under real threads,
// minus the nondeterminism.
class VirtualLoop {
 public:
  VirtualLoop(SimClock& clock, FastSampler& sampler, MinuteScheduler& scheduler)
      : clock_(clock), sampler_(sampler), scheduler_(scheduler) {}

  // Runs until simulated time would pass `end` (exclusive) or `stop` is set.
  void run_until(TimeMs end, const std::atomic<bool>* stop = nullptr) {
    while (true) {
      if (stop && stop->load(std::memory_order_relaxed)) return;
      const TimeMs sampler_due = sampler_.next_due();
      const TimeMs scheduler_due = scheduler_.next_due();
      const TimeMs next = std::min(sampler_due, scheduler_due);
      if (next >= end) return;
      clock_.advance_to(next);
      if (sampler_due == next) sampler_.tick(next);
      if (scheduler_due == next) scheduler_.tick(next);
    }
  }

 private:
  SimClock& clock_;
  FastSampler& sampler_;
  MinuteScheduler& scheduler_;
};

// Two long-lived tasks against a real clock: the fast sampler and the minute
// scheduler. Stop requests must be visible within one sampler tick.
class ThreadedRunner {
 public:
  ThreadedRunner(Clock& clock, FastSampler& sampler, MinuteScheduler& scheduler,
                 std::function<void(TimeMs)> pre_tick = {})
      : clock_(clock), sampler_(sampler), scheduler_(scheduler),
        pre_tick_(std::move(pre_tick)) {}

  void start() {
    stop_.store(false);
    sampler_thread_ = std::thread([this] {
      while (!stop_.load(std::memory_order_relaxed)) {
        clock_.sleep_until(sampler_.next_due(), &stop_);
        if (stop_.load(std::memory_order_relaxed)) break;
        const TimeMs due = sampler_.next_due();
        if (clock_.now() < due) continue;
        if (pre_tick_) pre_tick_(clock_.now());
        sampler_.tick(due);
      }
    });
    scheduler_thread_ = std::thread([this] {
      while (!stop_.load(std::memory_order_relaxed)) {
        clock_.sleep_until(scheduler_.next_due(), &stop_);
        if (stop_.load(std::memory_order_relaxed)) break;
        const TimeMs due = scheduler_.next_due();
        if (clock_.now() < due) continue;
        if (pre_tick_) pre_tick_(clock_.now());
        scheduler_.tick(due);
      }
    });
  }

  void stop_and_join() {
    stop_.store(true);
    if (sampler_thread_.joinable()) sampler_thread_.join();
    if (scheduler_thread_.joinable()) scheduler_thread_.join();
  }

  std::atomic<bool>& stop_flag() { return stop_; }

 private:
  Clock& clock_;
  FastSampler& sampler_;
  MinuteScheduler& scheduler_;
  std::function<void(TimeMs)> pre_tick_;
  std::atomic<bool> stop_{false};
  std::thread sampler_thread_;
  std::thread scheduler_thread_;
};

// One assembled acquisition node: hal + buffers + sampler + scheduler wired
// to a clock and a backend, with recovery evaluated before tasks start.
class Daemon {
 public:
  struct Wiring {
    Clock& clock;
    Hal& hal;
    Logger& log;
    const RunConfig& config;
    SinkClient* sink = nullptr;
    SinkBacklog* backlog = nullptr;
    RemoteTarget* sync_remote = nullptr;
    std::function<void(const MeasurementFrame&)> frame_observer;
  };

  explicit Daemon(const Wiring& w)
      : wiring_(w),
        counter_(w.config.failure_threshold),
        sampler_(w.hal, w.clock, buffers_, w.config.thermistor, w.log, counter_),
        scheduler_(SchedulerContext{w.clock, w.hal, buffers_, w.log, w.config, counter_,
                                    w.sink, w.backlog, w.sync_remote,
                                    w.config.archive_dir, w.config.state_dir,
                                    w.frame_observer}) {}

  // Startup: hardware init, state load, recovery decision, tasks armed.
  RecoveryDecision start() {
    auto init = wiring_.hal.initialize();
    if (!init.ok())
      wiring_.log.error("hardware initialization failed: " +
                        std::string(hal_error_name(init.error())));
    const TimeMs now = wiring_.clock.now();
    const StateLoadResult saved = load_state(wiring_.config.state_dir);
    if (saved.kind == StateLoadKind::Corrupt)
      wiring_.log.warn("state file unusable (" + saved.warning + "), treating as absent");
    decision_ = evaluate_recovery(saved, now, wiring_.config.window);
    sampler_.start(now);
    scheduler_.start(now, decision_, saved);
    return decision_;
  }

  // Ordered cleanup, exactly once: tasks are already stopped by the runner;
  // close the session (partial end-of-day), persist state, release the bus.
  void shutdown() {
    bool expected = false;
    if (!shutdown_done_.compare_exchange_strong(expected, true)) return;
    scheduler_.shutdown(wiring_.clock.now());
    wiring_.log.info("daemon stopped");
  }

  FastSampler& sampler() { return sampler_; }
  MinuteScheduler& scheduler() { return scheduler_; }
  ErrorCounter& counter() { return counter_; }
  SampleBuffers& buffers() { return buffers_; }
  RecoveryDecision decision() const { return decision_; }

 private:
  Wiring wiring_;
  SampleBuffers buffers_;
  ErrorCounter counter_;
  FastSampler sampler_;
  MinuteScheduler scheduler_;
  RecoveryDecision decision_;
  std::atomic<bool> shutdown_done_{false};
};

}  // namespace pvdaq

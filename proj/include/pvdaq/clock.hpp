#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <ctime>
#include <functional>
#include <mutex>
#include <thread>

#include "pvdaq/civil_time.hpp"

namespace pvdaq {

// All timing flows through this interface so the whole stack runs either
// against the wall clock or inside an accelerated simulation.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimeMs now() = 0;
  // Sleeps until `t` or until *stop becomes true; returns promptly on stop.
  virtual void sleep_until(TimeMs t, const std::atomic<bool>* stop) = 0;
  void sleep_for(TimeMs d, const std::atomic<bool>* stop = nullptr) {
    sleep_until(now() + d, stop);
  }
};

// Wall clock in naive local civil time.
class SystemClock final : public Clock {
 public:
  TimeMs now() override {
    using namespace std::chrono;
    const auto utc = system_clock::now();
    const std::time_t tt = system_clock::to_time_t(utc);
    std::tm local{};
    localtime_r(&tt, &local);
    std::tm utc_tm{};
    gmtime_r(&tt, &utc_tm);
    const TimeMs offset =
        (static_cast<TimeMs>(std::mktime(&local)) - static_cast<TimeMs>(std::mktime(&utc_tm))) *
        kSecondMs;
    const TimeMs epoch_ms =
        duration_cast<milliseconds>(utc.time_since_epoch()).count();
    return epoch_ms + offset;
  }

  void sleep_until(TimeMs t, const std::atomic<bool>* stop) override {
    // chunked waits keep stop signals observable within a fast-sampler tick
    while (true) {
      if (stop && stop->load(std::memory_order_relaxed)) return;
      const TimeMs remaining = t - now();
      if (remaining <= 0) return;
      const TimeMs chunk = std::min<TimeMs>(remaining, 200);
      std::unique_lock<std::mutex> lock(mutex_);
      cv_.wait_for(lock, std::chrono::milliseconds(chunk));
    }
  }

  // wakes sleepers early so shutdown does not wait out the chunk
  void kick() { cv_.notify_all(); }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
};

// Virtual clock: sleeping advances simulated time immediately. An advance
// hook chains the simulator (environment + fault activation) to the clock,
// making the loop the single owner of time. Optional pacing slows the wall
// rate down to sim/speedup for demonstration runs.
class SimClock final : public Clock {
 public:
  explicit SimClock(TimeMs start) : now_(start) {}

  void set_on_advance(std::function<void(TimeMs)> hook) { on_advance_ = std::move(hook); }
  void set_speedup(double speedup) { speedup_ = speedup; }

  TimeMs now() override { return now_; }

  void advance_to(TimeMs t) {
    if (t <= now_) return;
    if (speedup_ > 0) {
      const auto wall = std::chrono::microseconds(
          static_cast<std::int64_t>((t - now_) * 1000.0 / speedup_));
      std::this_thread::sleep_for(wall);
    }
    now_ = t;
    if (on_advance_) on_advance_(now_);
  }

  void sleep_until(TimeMs t, const std::atomic<bool>* stop) override {
    if (stop && stop->load(std::memory_order_relaxed)) return;
    advance_to(t);
  }

 private:
  TimeMs now_;
  double speedup_ = 0.0;  // 0 = run as fast as possible
  std::function<void(TimeMs)> on_advance_;
};

}  // namespace pvdaq

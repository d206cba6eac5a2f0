#pragma once

#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>

#include "pvdaq/civil_time.hpp"

namespace pvdaq {

// Fixed-horizon timestamped sample buffer feeding the one-minute rolling
// averages. Appends must be time-ordered; samples that fall out of the
// horizon relative to the newest appended sample are evicted.
class RollingWindow {
 public:
  explicit RollingWindow(TimeMs horizon_ms = kMinuteMs, size_t capacity = 32)
      : horizon_(horizon_ms), capacity_(capacity) {}

  // Samples usually arrive time-ordered; one already outside the horizon of
  // the newest sample is stale and dropped, a mildly late one is inserted in
  // order so the sortedness invariant holds.
  void append(TimeMs t, double value) {
    if (!samples_.empty() && t < samples_.back().t - horizon_) return;
    auto it = samples_.end();
    while (it != samples_.begin() && std::prev(it)->t > t) --it;
    samples_.insert(it, Sample{t, value});
    const TimeMs newest = samples_.back().t;
    while (!samples_.empty() && samples_.front().t < newest - horizon_)
      samples_.pop_front();
    while (samples_.size() > capacity_) samples_.pop_front();
  }

  void clear() { samples_.clear(); }
  size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  TimeMs horizon() const { return horizon_; }

  // Mean of samples within the horizon of the newest sample; nullopt when the
  // window is empty (caller flags the field invalid).
  std::optional<double> average() const {
    if (samples_.empty()) return std::nullopt;
    return mean_since(samples_.back().t - horizon_);
  }

  // Mean of samples in [now - horizon, now]; guards against stale data when
  // a sensor stopped delivering: only samples inside the queried window count.
  std::optional<double> average_at(TimeMs now) const {
    return mean_since(now - horizon_, now);
  }

 private:
  struct Sample {
    TimeMs t;
    double value;
  };

  std::optional<double> mean_since(TimeMs oldest,
                                   TimeMs newest = std::numeric_limits<TimeMs>::max()) const {
    double sum = 0.0;
    size_t n = 0;
    for (const auto& s : samples_) {
      if (s.t >= oldest && s.t <= newest) {
        sum += s.value;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }

  TimeMs horizon_;
  size_t capacity_;
  std::deque<Sample> samples_;
};

}  // namespace pvdaq

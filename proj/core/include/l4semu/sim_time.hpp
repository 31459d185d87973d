#pragma once

#include <chrono>
#include <compare>
#include <cstdint>

namespace l4semu {

using Duration = std::chrono::nanoseconds;
using namespace std::chrono_literals;

// Simulated time: integer nanoseconds since the start of a run.
class SimTime {
 public:
  constexpr SimTime() = default;
  constexpr explicit SimTime(Duration since_start) : ticks_(since_start.count()) {}

  static constexpr SimTime from_ns(std::int64_t ns) { return SimTime(Duration(ns)); }

  constexpr std::int64_t ns() const { return ticks_; }
  constexpr Duration since_start() const { return Duration(ticks_); }
  constexpr double seconds() const { return static_cast<double>(ticks_) * 1e-9; }

  constexpr auto operator<=>(const SimTime&) const = default;

 private:
  std::int64_t ticks_ = 0;
};

// Unchecked arithmetic for the hot path; advance_time() is the checked form.
constexpr SimTime operator+(SimTime t, Duration d) { return SimTime(t.since_start() + d); }
constexpr Duration operator-(SimTime a, SimTime b) { return a.since_start() - b.since_start(); }

// Returns clock + delta. Throws ConfigError for a negative delta or when the
// result would not fit in the 64-bit tick counter.
SimTime advance_time(SimTime clock, Duration delta);

constexpr double to_seconds(Duration d) { return std::chrono::duration<double>(d).count(); }

inline Duration from_seconds(double s) {
  return std::chrono::duration_cast<Duration>(std::chrono::duration<double>(s));
}

inline Duration from_millis(double ms) {
  return std::chrono::duration_cast<Duration>(std::chrono::duration<double, std::milli>(ms));
}

}  // namespace l4semu

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "l4semu/aqm.hpp"
#include "l4semu/packet.hpp"
#include "l4semu/rng.hpp"
#include "l4semu/sim_time.hpp"

namespace l4semu {

// Packet-delivery trace in the Mahimahi convention: each entry is a
// millisecond timestamp granting one MTU-sized delivery opportunity, and the
// whole list repeats every repeat_period_ms.
struct DeliveryTrace {
  std::vector<std::int64_t> opportunities_ms;
  std::int64_t repeat_period_ms = 0;

  // Throws ConfigError unless timestamps are non-negative, non-decreasing,
  // and fit inside the repeat period.
  void validate() const;

  // Long-run delivery rate implied by the trace.
  double average_rate_bps(std::uint32_t mtu = kMtu) const;

  // Reads one integer per line; the period is the last timestamp.
  static DeliveryTrace load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

// Longest loop synthesized for a constant rate. Rates whose exact period
// would be longer are approximated over this window.
inline constexpr std::int64_t kMaxTracePeriodMs = 1000;

// Spreads rate over a looping per-millisecond schedule by credit
// accumulation: every ms adds count/period opportunities and emits the
// integral part. Throws ConfigError when the rate cannot fill one MTU within
// the loop.
DeliveryTrace constant_rate_trace(std::uint64_t rate_bps, std::uint32_t mtu = kMtu);

enum class LinkMode : std::uint8_t {
  Bursty,  // ms-granularity opportunities from a DeliveryTrace
  Smooth,  // evenly spaced per-packet service at the configured rate
};

std::string_view to_string(LinkMode mode);
LinkMode parse_link_mode(std::string_view text);

// Fixed one-way delay. Constant delay keeps FIFO order.
class DelayElement {
 public:
  explicit DelayElement(Duration one_way_delay);
  Duration delay() const { return delay_; }
  SimTime forward(SimTime now) const { return now + delay_; }

 private:
  Duration delay_;
};

// The bottleneck: drains a DualPi2 instance according to the link mode.
//
// Bursty mode walks the trace. Every opportunity may carry one packet of at
// most one MTU; budget left unused at an instant is discarded.
// Smooth mode serves one packet at a time and holds the link busy for
// size*8/rate (tracked exactly in integer nanoseconds with a carried
// remainder), then goes idle when the AQM is empty.
class BottleneckLink {
 public:
  BottleneckLink(LinkMode mode, DeliveryTrace trace, std::uint64_t rate_bps);

  LinkMode mode() const { return mode_; }
  std::uint64_t rate_bps() const { return rate_bps_; }

  // Next instant at which advance() has work, if any. Bursty links always
  // have a next opportunity; idle Smooth links have none until woken.
  std::optional<SimTime> next_service() const;

  // Smooth mode: an enqueue happened at `now`; schedule service if idle.
  // No effect in Bursty mode.
  void wake(SimTime now);

  // Delivers everything the link may send at `now`.
  std::vector<Packet> advance(DualPi2& aqm, SimTime now, Rng& rng);

  // Transmission time of `bytes` at the configured rate, rounded down.
  Duration serialization_time(std::uint32_t bytes) const;

 private:
  SimTime current_opportunity() const;
  void step_opportunity();

  LinkMode mode_;
  DeliveryTrace trace_;
  std::uint64_t rate_bps_;

  // Bursty cursor.
  std::size_t trace_pos_ = 0;
  std::int64_t loop_ = 0;

  // Smooth state.
  std::optional<SimTime> next_smooth_;
  SimTime busy_until_{};
  std::uint64_t bit_remainder_ = 0;  // (bits*1e9) mod rate carried between packets
};

}  // namespace l4semu

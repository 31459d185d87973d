#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "l4semu/packet.hpp"
#include "l4semu/sim_time.hpp"

namespace l4semu {

enum class FlowKind : std::uint8_t { Scalable, Reno, Cubic };

std::string_view to_string(FlowKind kind);
FlowKind parse_flow_kind(std::string_view text);

// Scalable flows are ECT(1), Classic flows ECT(0).
constexpr EcnCodepoint codepoint_for(FlowKind kind) {
  return kind == FlowKind::Scalable ? EcnCodepoint::Ect1 : EcnCodepoint::Ect0;
}

inline constexpr double kInitialWindow = 10.0;

// DCTCP-style responder. ACK feedback accumulates over a round; at the end
// of each round the marked fraction is folded into an EWMA with gain 1/16.
// A round that saw marks shrinks the window by ewma/2, a clean round adds
// one packet. Before the first congestion signal the window doubles per
// round (one packet per ACK).
struct ScalableCc {
  static constexpr double kGain = 1.0 / 16.0;

  double cwnd = kInitialWindow;
  double marked_frac_ewma = 1.0;
  bool slow_start = true;
  std::uint32_t round_acked = 0;
  std::uint32_t round_ce = 0;

  // ce <= acked.
  void on_ack(std::uint32_t acked, std::uint32_t ce);
  void on_round_end();
  void on_loss();
};

enum class ClassicVariant : std::uint8_t { Reno, Cubic };

// Reno (AIMD 1, 0.5) or Cubic (C = 0.4, beta = 0.7) window. Callers gate
// on_congestion() to once per round trip.
struct ClassicCc {
  static constexpr double kCubicC = 0.4;
  static constexpr double kCubicBeta = 0.7;

  explicit ClassicCc(ClassicVariant v) : variant(v) {}

  ClassicVariant variant;
  double cwnd = kInitialWindow;
  double ssthresh = std::numeric_limits<double>::infinity();
  double w_max = 0.0;
  SimTime epoch_start{};
  double cubic_k = 0.0;  // seconds until W(t) returns to w_max

  bool in_slow_start() const { return cwnd < ssthresh; }

  void on_ack(std::uint32_t acked, SimTime now, Duration srtt);
  void on_congestion(SimTime now);

  // W(t) = C*(t-K)^3 + w_max, t in seconds since the last decrease.
  double cubic_window(double t_seconds) const;
};

struct Ack {
  FlowId flow = 0;
  std::uint64_t seq = 0;
  bool ce = false;
  SimTime data_sent_at{};
  // Sequence numbers the receiver has given up on: each had three later
  // arrivals without showing up.
  std::vector<std::uint64_t> lost;
};

class Receiver {
 public:
  static constexpr std::uint32_t kDupThreshold = 3;

  Ack on_packet(const Packet& pkt);

  std::uint64_t received_bytes() const { return received_bytes_; }
  std::uint64_t total_count() const { return total_count_; }
  std::uint64_t ce_count() const { return ce_count_; }
  std::uint64_t lost_count() const { return lost_count_; }

 private:
  struct Hole {
    std::uint64_t seq;
    std::uint32_t later_arrivals;
  };

  std::uint64_t next_expected_ = 0;
  std::deque<Hole> holes_;
  std::uint64_t received_bytes_ = 0;
  std::uint64_t total_count_ = 0;
  std::uint64_t ce_count_ = 0;
  std::uint64_t lost_count_ = 0;
};

// Window-limited bulk sender standing in for an iperf3 flow.
class Sender {
 public:
  Sender(FlowId id, FlowKind kind, SimTime start, std::optional<SimTime> stop,
         std::uint32_t packet_size = kMtu);

  FlowId id() const { return id_; }
  FlowKind kind() const { return kind_; }
  double cwnd() const;
  std::size_t in_flight() const { return outstanding_.size(); }
  std::uint64_t congestion_events() const { return decreases_; }
  std::uint64_t ce_acks() const { return ce_acks_; }
  std::uint64_t rounds() const { return rounds_; }
  Duration srtt() const { return srtt_; }

  const ScalableCc* scalable() const;
  const ClassicCc* classic() const;

  bool active(SimTime now) const;

  // Emits packets while in-flight < cwnd and the flow is active. `next_id`
  // supplies globally unique packet ids.
  std::vector<Packet> pump(SimTime now, std::uint64_t& next_id);

  void on_ack(const Ack& ack, SimTime now);

  // Fallback for losses that no later arrival can reveal (tail drops):
  // packets outstanding longer than rto() are written off as one loss event.
  void on_timeout(SimTime now);
  Duration rto() const;
  std::optional<SimTime> oldest_send_time() const;

 private:
  void signal_congestion(std::uint64_t seq, SimTime now);
  void forget(std::uint64_t seq);

  FlowId id_;
  FlowKind kind_;
  SimTime start_;
  std::optional<SimTime> stop_;
  std::uint32_t packet_size_;

  ScalableCc scalable_;
  ClassicCc classic_;

  std::uint64_t next_seq_ = 0;
  // Sent and not yet acknowledged or written off, in send order.
  std::deque<std::pair<std::uint64_t, SimTime>> outstanding_;
  std::uint64_t round_end_seq_ = 0;
  std::uint64_t recovery_seq_ = 0;
  Duration srtt_ = 0ns;

  std::uint64_t decreases_ = 0;
  std::uint64_t ce_acks_ = 0;
  std::uint64_t rounds_ = 0;
};

}  // namespace l4semu

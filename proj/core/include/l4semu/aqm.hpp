#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>

#include "l4semu/packet.hpp"
#include "l4semu/rng.hpp"
#include "l4semu/sim_time.hpp"

namespace l4semu {

struct AqmConfig {
  Duration target = 15ms;       // Classic queue delay setpoint
  Duration step_thresh = 1ms;   // L queue sojourn above which every packet is marked
  Duration tupdate = 16ms;      // probability update period
  double alpha = 0.16;          // integral gain, 1/s
  double beta = 3.20;           // proportional gain, 1/s
  double coupling_k = 2.0;
  std::uint64_t limit_bytes = 375'000;  // shared by both queues
  double classic_protection = 0.10;     // C queue byte share under contention
  bool ecn_classic_enabled = true;      // mark ECT(0) instead of dropping

  // Throws ConfigError on any out-of-range field.
  void validate() const;

  // Buffer sized to hold `horizon` worth of traffic at the given rate.
  static std::uint64_t limit_for_rate(std::uint64_t rate_bps, Duration horizon = 250ms);
};

enum class QueueId : std::uint8_t { Classic, L4s };

// ECT(1) and CE go to the L queue, Not-ECT and ECT(0) to the C queue.
constexpr QueueId classify(EcnCodepoint ecn) {
  return (ecn == EcnCodepoint::Ect1 || ecn == EcnCodepoint::Ce) ? QueueId::L4s : QueueId::Classic;
}
constexpr QueueId classify(const Packet& pkt) { return classify(pkt.ecn); }

enum class Verdict : std::uint8_t {
  EnqueuedC,
  EnqueuedL,
  DroppedOverflow,
  // The last two describe enqueue-time AQM decisions. DualPi2 signals at
  // dequeue, so its enqueue() never returns them; AQM drops and marks show
  // up in AqmCounters instead.
  DroppedAqm,
  MarkedAndQueued,
};

std::string_view to_string(Verdict v);

enum class ClassicAction : std::uint8_t { Pass, Mark, Drop };

// One PI² step. Delays are converted to seconds, alpha and beta are in 1/s:
//   p' + alpha*tupdate*(qdelay - target) + beta*(qdelay - prev_qdelay)
// clamped to [0, 1].
double pi2_step(double p_prime, Duration qdelay, Duration prev_qdelay, const AqmConfig& cfg);

// Classic drop/mark probability P_C = p'^2.
constexpr double classic_probability(double p_prime) { return p_prime * p_prime; }

// Coupled L4S marking probability P_CL = min(k*p', 1).
constexpr double coupled_probability(double p_prime, double k) {
  const double p = k * p_prime;
  return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

// Decision for the C queue head. Draws once with probability P_C; a selected
// ECT(0) packet is marked when Classic ECN is enabled, anything else is dropped.
ClassicAction classic_action(double p_prime, EcnCodepoint ecn, bool ecn_classic_enabled, Rng& rng);

// Decision for the L queue head: mark when the sojourn exceeds step_thresh
// (native step AQM), otherwise mark with the coupled probability. The
// coupled draw is skipped when the step already marks.
bool l4s_should_mark(Duration sojourn, double p_prime, const AqmConfig& cfg, Rng& rng);

class PacketFifo {
 public:
  bool empty() const { return packets_.empty(); }
  std::size_t size() const { return packets_.size(); }
  std::uint64_t bytes() const { return bytes_; }
  const Packet& front() const { return packets_.front(); }

  void push(Packet pkt) {
    bytes_ += pkt.size;
    packets_.push_back(pkt);
  }

  Packet pop() {
    Packet pkt = packets_.front();
    packets_.pop_front();
    bytes_ -= pkt.size;
    return pkt;
  }

 private:
  std::deque<Packet> packets_;
  std::uint64_t bytes_ = 0;
};

// Cumulative, monotone counters. enq_total counts every offered packet,
// including those refused for overflow, so that
//   enq_total == deq_total + drops_total + queued
// holds after every operation.
struct AqmCounters {
  std::uint64_t enq_total = 0;
  std::uint64_t deq_total = 0;
  std::uint64_t drops_total = 0;
  std::uint64_t drops_overflow = 0;
  std::uint64_t ecn_marks_l = 0;
  std::uint64_t ecn_marks_c = 0;

  std::uint64_t drops_aqm() const { return drops_total - drops_overflow; }
  std::uint64_t ecn_marks() const { return ecn_marks_l + ecn_marks_c; }
};

struct DualPi2State {
  double p_prime = 0.0;
  Duration prev_qdelay = 0ns;
  PacketFifo c_queue;
  PacketFifo l_queue;
  SimTime next_update_at{};
  // Positive when the C queue is owed service. Serving L adds
  // classic_protection*len, serving C subtracts (1-classic_protection)*len.
  double scheduler_credit = 0.0;
  AqmCounters counters;
};

// Dual-queue coupled AQM for one emulated link.
//
// enqueue() only enforces the shared byte limit. All congestion signalling
// happens in dequeue(): the credit scheduler picks a queue, the C head is
// dropped or marked with p'^2, the L head is marked by the step threshold or
// the coupled probability k*p'. update() runs the PI² controller and must be
// called every tupdate.
class DualPi2 {
 public:
  explicit DualPi2(const AqmConfig& cfg);

  const AqmConfig& config() const { return cfg_; }
  const DualPi2State& state() const { return state_; }
  const AqmCounters& counters() const { return state_.counters; }

  std::size_t queued_packets() const { return state_.c_queue.size() + state_.l_queue.size(); }
  std::uint64_t queued_bytes() const { return state_.c_queue.bytes() + state_.l_queue.bytes(); }
  bool empty() const { return queued_packets() == 0; }

  double base_probability() const { return state_.p_prime; }
  SimTime next_update_at() const { return state_.next_update_at; }

  Verdict enqueue(Packet pkt, SimTime now);

  // PI² update. Samples the head-of-C sojourn (0 when empty), steps p' and
  // schedules the next update one tupdate later. Returns the new p'.
  double update(SimTime now);

  // Returns the next packet to transmit, or nothing when both queues are
  // empty (or the only backlog was classic traffic that got dropped).
  std::optional<Packet> dequeue(SimTime now, Rng& rng);

  // Test access: seed the controller state directly.
  void set_controller(double p_prime, Duration prev_qdelay);

 private:
  AqmConfig cfg_;
  DualPi2State state_;
};

}  // namespace l4semu

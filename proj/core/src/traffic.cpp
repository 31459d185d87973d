#include "l4semu/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "l4semu/errors.hpp"

namespace l4semu {

std::string_view to_string(FlowKind kind) {
  switch (kind) {
    case FlowKind::Scalable: return "scalable";
    case FlowKind::Reno: return "reno";
    case FlowKind::Cubic: return "cubic";
  }
  return "?";
}

FlowKind parse_flow_kind(std::string_view text) {
  if (text == "scalable" || text == "prague") return FlowKind::Scalable;
  if (text == "reno") return FlowKind::Reno;
  if (text == "cubic") return FlowKind::Cubic;
  throw ConfigError("flow: unknown kind '" + std::string(text) + "' (scalable|reno|cubic)");
}

// ---------------------------------------------------------------------------
// ScalableCc

void ScalableCc::on_ack(std::uint32_t acked, std::uint32_t ce) {
  round_acked += acked;
  round_ce += ce;
  if (ce > 0) slow_start = false;
  if (slow_start) cwnd += acked;
}

void ScalableCc::on_round_end() {
  if (round_acked > 0) {
    const double frac = static_cast<double>(round_ce) / round_acked;
    marked_frac_ewma = (1.0 - kGain) * marked_frac_ewma + kGain * frac;
  }
  if (round_ce > 0) {
    cwnd *= 1.0 - marked_frac_ewma / 2.0;
  } else if (!slow_start) {
    cwnd += 1.0;
  }
  cwnd = std::max(cwnd, 1.0);
  round_acked = 0;
  round_ce = 0;
}

void ScalableCc::on_loss() {
  slow_start = false;
  cwnd = std::max(cwnd / 2.0, 1.0);
}

// ---------------------------------------------------------------------------
// ClassicCc

double ClassicCc::cubic_window(double t_seconds) const {
  const double d = t_seconds - cubic_k;
  return kCubicC * d * d * d + w_max;
}

void ClassicCc::on_ack(std::uint32_t acked, SimTime now, Duration srtt) {
  for (std::uint32_t i = 0; i < acked; ++i) {
    if (in_slow_start()) {
      cwnd += 1.0;
      continue;
    }
    if (variant == ClassicVariant::Reno) {
      cwnd += 1.0 / cwnd;
      continue;
    }
    // Cubic congestion avoidance: chase W(t + rtt), never slower than the
    // Reno-equivalent window.
    const double rtt = std::max(to_seconds(srtt), 1e-3);
    const double t = to_seconds(now - epoch_start);
    double target = cubic_window(t + rtt);
    const double reno_equiv =
        w_max * kCubicBeta + 3.0 * (1.0 - kCubicBeta) / (1.0 + kCubicBeta) * (t / rtt);
    target = std::max(target, reno_equiv);
    target = std::min(target, 1.5 * cwnd);
    if (target > cwnd) {
      cwnd += (target - cwnd) / cwnd;
    } else {
      cwnd += 0.01 / cwnd;
    }
  }
}

void ClassicCc::on_congestion(SimTime now) {
  if (variant == ClassicVariant::Reno) {
    cwnd = std::max(cwnd * 0.5, 1.0);
  } else {
    w_max = cwnd;
    cwnd = std::max(cwnd * kCubicBeta, 1.0);
    cubic_k = std::cbrt(w_max * (1.0 - kCubicBeta) / kCubicC);
    epoch_start = now;
  }
  ssthresh = cwnd;
}

// ---------------------------------------------------------------------------
// Receiver

Ack Receiver::on_packet(const Packet& pkt) {
  Ack ack{pkt.flow, pkt.seq, pkt.ecn == EcnCodepoint::Ce, pkt.created_at, {}};
  received_bytes_ += pkt.size;
  ++total_count_;
  if (ack.ce) ++ce_count_;

  if (pkt.seq >= next_expected_) {
    for (std::uint64_t s = next_expected_; s < pkt.seq; ++s) holes_.push_back({s, 0});
    next_expected_ = pkt.seq + 1;
  } else {
    // A late packet fills its hole.
    std::erase_if(holes_, [&](const Hole& h) { return h.seq == pkt.seq; });
  }
  // Holes are sorted; every one below this packet gained a later arrival.
  for (auto& h : holes_) {
    if (h.seq >= pkt.seq) break;
    ++h.later_arrivals;
  }
  while (!holes_.empty() && holes_.front().later_arrivals >= kDupThreshold) {
    ack.lost.push_back(holes_.front().seq);
    holes_.pop_front();
    ++lost_count_;
  }
  return ack;
}

// ---------------------------------------------------------------------------
// Sender

Sender::Sender(FlowId id, FlowKind kind, SimTime start, std::optional<SimTime> stop,
               std::uint32_t packet_size)
    : id_(id),
      kind_(kind),
      start_(start),
      stop_(stop),
      packet_size_(packet_size),
      classic_(kind == FlowKind::Reno ? ClassicVariant::Reno : ClassicVariant::Cubic) {}

double Sender::cwnd() const { return kind_ == FlowKind::Scalable ? scalable_.cwnd : classic_.cwnd; }

const ScalableCc* Sender::scalable() const { return kind_ == FlowKind::Scalable ? &scalable_ : nullptr; }
const ClassicCc* Sender::classic() const { return kind_ == FlowKind::Scalable ? nullptr : &classic_; }

bool Sender::active(SimTime now) const { return now >= start_ && (!stop_ || now < *stop_); }

std::vector<Packet> Sender::pump(SimTime now, std::uint64_t& next_id) {
  std::vector<Packet> out;
  if (!active(now)) return out;
  while (static_cast<double>(outstanding_.size()) < cwnd()) {
    Packet pkt;
    pkt.id = next_id++;
    pkt.flow = id_;
    pkt.size = packet_size_;
    pkt.ecn = codepoint_for(kind_);
    pkt.created_at = now;
    pkt.seq = next_seq_++;
    outstanding_.emplace_back(pkt.seq, now);
    out.push_back(pkt);
  }
  return out;
}

void Sender::forget(std::uint64_t seq) {
  // Outstanding entries are in sequence order.
  auto it = std::lower_bound(outstanding_.begin(), outstanding_.end(), seq,
                             [](const auto& e, std::uint64_t s) { return e.first < s; });
  if (it != outstanding_.end() && it->first == seq) outstanding_.erase(it);
}

void Sender::signal_congestion(std::uint64_t seq, SimTime now) {
  // One window reduction per round trip: signals about packets sent before
  // the last reduction are already accounted for.
  if (seq < recovery_seq_) return;
  recovery_seq_ = next_seq_;
  ++decreases_;
  if (kind_ == FlowKind::Scalable) {
    scalable_.on_loss();
  } else {
    classic_.on_congestion(now);
  }
}

void Sender::on_ack(const Ack& ack, SimTime now) {
  forget(ack.seq);
  const Duration sample = now - ack.data_sent_at;
  srtt_ = srtt_ == 0ns ? sample : Duration((srtt_.count() * 7 + sample.count()) / 8);

  for (auto lost : ack.lost) {
    forget(lost);
    signal_congestion(lost, now);
  }

  if (ack.ce) ++ce_acks_;
  if (kind_ == FlowKind::Scalable) {
    scalable_.on_ack(1, ack.ce ? 1 : 0);
  } else {
    if (ack.ce) signal_congestion(ack.seq, now);
    // The ACK that triggered a reduction does not also grow the window.
    if (!ack.ce) classic_.on_ack(1, now, srtt_);
  }

  if (ack.seq >= round_end_seq_) {
    ++rounds_;
    if (kind_ == FlowKind::Scalable) scalable_.on_round_end();
    round_end_seq_ = next_seq_;
  }
}

Duration Sender::rto() const {
  const Duration floor = 200ms;
  return std::max(floor, srtt_ * 3);
}

std::optional<SimTime> Sender::oldest_send_time() const {
  if (outstanding_.empty()) return std::nullopt;
  return outstanding_.front().second;
}

void Sender::on_timeout(SimTime now) {
  const Duration limit = rto();
  bool any = false;
  std::uint64_t first = 0;
  while (!outstanding_.empty() && now - outstanding_.front().second >= limit) {
    if (!any) first = outstanding_.front().first;
    any = true;
    outstanding_.pop_front();
  }
  if (any) signal_congestion(first, now);
}

}  // namespace l4semu

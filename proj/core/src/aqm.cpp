#include "l4semu/aqm.hpp"

#include <algorithm>
#include <cmath>

#include "l4semu/errors.hpp"

namespace l4semu {

void AqmConfig::validate() const {
  if (target <= 0ns) throw ConfigError("aqm: target must be positive");
  if (step_thresh <= 0ns) throw ConfigError("aqm: step_thresh must be positive");
  if (tupdate <= 0ns) throw ConfigError("aqm: tupdate must be positive");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("aqm: alpha must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("aqm: beta must be positive");
  if (!(coupling_k >= 1.0) || !std::isfinite(coupling_k))
    throw ConfigError("aqm: coupling_k must be >= 1");
  if (limit_bytes == 0) throw ConfigError("aqm: limit_bytes must be positive");
  if (!(classic_protection >= 0.0 && classic_protection < 1.0))
    throw ConfigError("aqm: classic_protection must lie in [0, 1)");
}

std::uint64_t AqmConfig::limit_for_rate(std::uint64_t rate_bps, Duration horizon) {
  // rate * horizon / 8, exact for the preset rates.
  const auto bits = static_cast<unsigned __int128>(rate_bps) * static_cast<std::uint64_t>(horizon.count());
  return static_cast<std::uint64_t>(bits / 8'000'000'000ULL);
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::EnqueuedC: return "enqueued_c";
    case Verdict::EnqueuedL: return "enqueued_l";
    case Verdict::DroppedOverflow: return "dropped_overflow";
    case Verdict::DroppedAqm: return "dropped_aqm";
    case Verdict::MarkedAndQueued: return "marked_and_queued";
  }
  return "?";
}

double pi2_step(double p_prime, Duration qdelay, Duration prev_qdelay, const AqmConfig& cfg) {
  const double err = to_seconds(qdelay - cfg.target);
  const double trend = to_seconds(qdelay - prev_qdelay);
  const double p = p_prime + cfg.alpha * to_seconds(cfg.tupdate) * err + cfg.beta * trend;
  return std::clamp(p, 0.0, 1.0);
}

ClassicAction classic_action(double p_prime, EcnCodepoint ecn, bool ecn_classic_enabled, Rng& rng) {
  if (!rng.bernoulli(std::clamp(classic_probability(p_prime), 0.0, 1.0))) return ClassicAction::Pass;
  if (ecn_classic_enabled && ecn == EcnCodepoint::Ect0) return ClassicAction::Mark;
  return ClassicAction::Drop;
}

bool l4s_should_mark(Duration sojourn, double p_prime, const AqmConfig& cfg, Rng& rng) {
  if (sojourn > cfg.step_thresh) return true;
  return rng.bernoulli(coupled_probability(p_prime, cfg.coupling_k));
}

DualPi2::DualPi2(const AqmConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  state_.next_update_at = SimTime(cfg_.tupdate);
}

Verdict DualPi2::enqueue(Packet pkt, SimTime now) {
  auto& c = state_.counters;
  ++c.enq_total;
  if (queued_bytes() + pkt.size > cfg_.limit_bytes) {
    ++c.drops_total;
    ++c.drops_overflow;
    return Verdict::DroppedOverflow;
  }
  pkt.enqueued_at = now;
  if (classify(pkt) == QueueId::L4s) {
    state_.l_queue.push(pkt);
    return Verdict::EnqueuedL;
  }
  state_.c_queue.push(pkt);
  return Verdict::EnqueuedC;
}

double DualPi2::update(SimTime now) {
  const Duration qdelay = state_.c_queue.empty() ? 0ns : now - state_.c_queue.front().enqueued_at;
  state_.p_prime = pi2_step(state_.p_prime, qdelay, state_.prev_qdelay, cfg_);
  state_.prev_qdelay = qdelay;
  state_.next_update_at = state_.next_update_at + cfg_.tupdate;
  return state_.p_prime;
}

std::optional<Packet> DualPi2::dequeue(SimTime now, Rng& rng) {
  auto& s = state_;
  const double w_classic = cfg_.classic_protection;
  const double w_l4s = 1.0 - cfg_.classic_protection;

  // Each pass pops one packet, so classic drops cannot loop past the backlog.
  while (!s.c_queue.empty() || !s.l_queue.empty()) {
    const bool serve_l = !s.l_queue.empty() && (s.c_queue.empty() || s.scheduler_credit <= 0.0);
    if (serve_l) {
      Packet pkt = s.l_queue.pop();
      // Credit only accrues while both queues compete.
      s.scheduler_credit = s.c_queue.empty() ? 0.0 : s.scheduler_credit + w_classic * pkt.size;
      if (l4s_should_mark(now - pkt.enqueued_at, s.p_prime, cfg_, rng)) {
        pkt.ecn = EcnCodepoint::Ce;
        ++s.counters.ecn_marks_l;
      }
      ++s.counters.deq_total;
      return pkt;
    }

    Packet pkt = s.c_queue.pop();
    switch (classic_action(s.p_prime, pkt.ecn, cfg_.ecn_classic_enabled, rng)) {
      case ClassicAction::Drop:
        ++s.counters.drops_total;
        continue;
      case ClassicAction::Mark:
        pkt.ecn = EcnCodepoint::Ce;
        ++s.counters.ecn_marks_c;
        break;
      case ClassicAction::Pass:
        break;
    }
    s.scheduler_credit = s.l_queue.empty() ? 0.0 : s.scheduler_credit - w_l4s * pkt.size;
    ++s.counters.deq_total;
    return pkt;
  }
  s.scheduler_credit = 0.0;
  return std::nullopt;
}

void DualPi2::set_controller(double p_prime, Duration prev_qdelay) {
  state_.p_prime = std::clamp(p_prime, 0.0, 1.0);
  state_.prev_qdelay = prev_qdelay;
}

}  // namespace l4semu

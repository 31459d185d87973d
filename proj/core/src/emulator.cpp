#include "l4semu/emulator.hpp"

#include <deque>
#include <queue>

#include "l4semu/errors.hpp"
#include "l4semu/link.hpp"
#include "l4semu/rng.hpp"
#include "l4semu/traffic.hpp"

namespace l4semu {

namespace {

// Lower value runs first at equal timestamps.
enum class EventClass : std::uint8_t { LinkService = 0, AqmUpdate = 1, Arrival = 2, Ack = 3 };

enum class EventKind : std::uint8_t { LinkService, AqmUpdate, FlowStart, DataArrival, AckArrival, Timeout };

struct Event {
  SimTime at;
  EventClass cls;
  std::uint64_t order;
  EventKind kind;
  FlowId flow;

  // Min-heap ordering for std::priority_queue.
  bool operator>(const Event& o) const {
    if (at != o.at) return at > o.at;
    if (cls != o.cls) return cls > o.cls;
    return order > o.order;
  }
};

EventClass class_of(EventKind k) {
  switch (k) {
    case EventKind::LinkService: return EventClass::LinkService;
    case EventKind::AqmUpdate: return EventClass::AqmUpdate;
    case EventKind::FlowStart:
    case EventKind::DataArrival: return EventClass::Arrival;
    case EventKind::AckArrival:
    case EventKind::Timeout: return EventClass::Ack;
  }
  return EventClass::Ack;
}

DeliveryTrace make_trace(const ScenarioConfig& cfg) {
  if (cfg.link.trace_file) return DeliveryTrace::load(*cfg.link.trace_file);
  return constant_rate_trace(cfg.link.rate_bps);
}

std::uint64_t link_rate(const ScenarioConfig& cfg, const DeliveryTrace& trace) {
  if (!cfg.link.trace_file) return cfg.link.rate_bps;
  return static_cast<std::uint64_t>(std::llround(trace.average_rate_bps()));
}

class Emulation {
 public:
  Emulation(const ScenarioConfig& cfg, std::uint64_t seed, const RunObserver* observer)
      : cfg_(cfg),
        end_(SimTime(cfg.duration)),
        rng_(seed),
        aqm_(cfg.aqm),
        trace_(make_trace(cfg)),
        link_(cfg.link.mode, trace_, link_rate(cfg, trace_)),
        forward_(cfg.one_way_delay),
        reverse_(cfg.one_way_delay),
        observer_(observer) {
    for (std::size_t i = 0; i < cfg.flows.size(); ++i) {
      const auto& f = cfg.flows[i];
      const SimTime start(f.start_time);
      const SimTime stop = f.duration ? std::min(end_, advance_time(start, *f.duration)) : end_;
      senders_.emplace_back(static_cast<FlowId>(i), f.kind, start, stop);
      receivers_.emplace_back();
      timeout_pending_.push_back(false);
    }
  }

  RunOutput run(std::string run_id) {
    for (std::size_t i = 0; i < senders_.size(); ++i)
      schedule(SimTime(cfg_.flows[i].start_time), EventKind::FlowStart, static_cast<FlowId>(i));
    schedule(aqm_.next_update_at(), EventKind::AqmUpdate);
    schedule_link();

    std::uint64_t processed = 0;
    // The run ends with the AQM update at end_; later classes at end_ would
    // escape the final sample.
    while (!events_.empty() && (events_.top().at < end_ || (events_.top().at == end_ &&
                                                           events_.top().cls <= EventClass::AqmUpdate))) {
      const Event ev = events_.top();
      events_.pop();
      dispatch(ev);
      ++processed;
      if (observer_ && observer_->on_event) observer_->on_event(aqm_, ev.at);
    }
    // Closing partial interval when the run length is not a whole number of
    // update periods.
    if (series_.empty() || series_.back().t != end_) series_.push_back(sampler_.sample(aqm_, end_));

    RunOutput out;
    std::vector<FlowBytes> bytes;
    for (std::size_t i = 0; i < senders_.size(); ++i) {
      const auto& s = senders_[i];
      const auto& r = receivers_[i];
      bytes.push_back({s.id(), s.kind(), r.received_bytes()});
      out.flows.push_back({s.id(), s.kind(), r.received_bytes(), r.total_count(), r.ce_count(),
                           s.congestion_events(), s.rounds()});
    }
    out.record = summarize(std::move(run_id), cfg_.fingerprint(), rng_.seed(), cfg_.duration, bytes,
                           std::move(series_));
    out.counters = aqm_.counters();
    out.residual_packets = aqm_.queued_packets();
    out.events = processed;
    return out;
  }

 private:
  void schedule(SimTime at, EventKind kind, FlowId flow = 0) {
    events_.push({at, class_of(kind), order_++, kind, flow});
  }

  void schedule_link() {
    const auto t = link_.next_service();
    if (!t || (link_pending_ && *link_pending_ == *t)) return;
    link_pending_ = t;
    schedule(*t, EventKind::LinkService);
  }

  void schedule_timeout(FlowId f) {
    auto& s = senders_[f];
    if (timeout_pending_[f]) return;
    if (auto oldest = s.oldest_send_time()) {
      timeout_pending_[f] = true;
      schedule(*oldest + s.rto(), EventKind::Timeout, f);
    }
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EventKind::LinkService: on_link(ev.at); break;
      case EventKind::AqmUpdate:
        aqm_.update(ev.at);
        series_.push_back(sampler_.sample(aqm_, ev.at));
        schedule(aqm_.next_update_at(), EventKind::AqmUpdate);
        break;
      case EventKind::FlowStart: pump(ev.flow, ev.at); break;
      case EventKind::DataArrival: on_data_arrival(ev.at); break;
      case EventKind::AckArrival: on_ack_arrival(ev.at); break;
      case EventKind::Timeout:
        timeout_pending_[ev.flow] = false;
        senders_[ev.flow].on_timeout(ev.at);
        pump(ev.flow, ev.at);
        break;
    }
  }

  void on_link(SimTime now) {
    if (!link_pending_ || *link_pending_ != now) return;  // superseded
    link_pending_.reset();
    for (const auto& pkt : link_.advance(aqm_, now, rng_)) {
      if (observer_ && observer_->on_transmit) observer_->on_transmit(pkt, now);
      in_forward_.push_back(pkt);
      schedule(forward_.forward(now), EventKind::DataArrival);
    }
    schedule_link();
  }

  void on_data_arrival(SimTime now) {
    // Constant delay keeps the in-flight FIFO aligned with event order.
    const Packet pkt = in_forward_.front();
    in_forward_.pop_front();
    in_reverse_.push_back(receivers_[pkt.flow].on_packet(pkt));
    schedule(reverse_.forward(now), EventKind::AckArrival);
  }

  void on_ack_arrival(SimTime now) {
    const Ack ack = std::move(in_reverse_.front());
    in_reverse_.pop_front();
    senders_[ack.flow].on_ack(ack, now);
    pump(ack.flow, now);
  }

  void pump(FlowId f, SimTime now) {
    for (const auto& pkt : senders_[f].pump(now, next_packet_id_)) aqm_.enqueue(pkt, now);
    link_.wake(now);
    schedule_link();
    schedule_timeout(f);
  }

  const ScenarioConfig& cfg_;
  SimTime end_;
  Rng rng_;
  DualPi2 aqm_;
  DeliveryTrace trace_;
  BottleneckLink link_;
  DelayElement forward_;
  DelayElement reverse_;
  const RunObserver* observer_;

  std::vector<Sender> senders_;
  std::vector<Receiver> receivers_;
  std::vector<bool> timeout_pending_;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t order_ = 0;
  std::optional<SimTime> link_pending_;
  std::deque<Packet> in_forward_;
  std::deque<Ack> in_reverse_;
  std::uint64_t next_packet_id_ = 0;

  Sampler sampler_;
  std::vector<TraceSample> series_;
};

}  // namespace

RunOutput run_emulation(const ScenarioConfig& cfg, std::uint64_t seed, std::string run_id,
                        const RunObserver* observer) {
  cfg.validate();
  Emulation emu(cfg, seed, observer);
  return emu.run(std::move(run_id));
}

nlohmann::ordered_json run_metadata(const ScenarioConfig& cfg, const RunOutput& out) {
  nlohmann::ordered_json meta;
  meta["rng"] = std::string(Rng::kAlgorithm);
  meta["config"] = cfg.to_json();
  const auto& c = out.counters;
  meta["counters"] = {{"enq_total", c.enq_total},
                      {"deq_total", c.deq_total},
                      {"drops_total", c.drops_total},
                      {"drops_overflow", c.drops_overflow},
                      {"ecn_marks_l", c.ecn_marks_l},
                      {"ecn_marks_c", c.ecn_marks_c},
                      {"residual_packets", out.residual_packets}};
  return meta;
}

}  // namespace l4semu

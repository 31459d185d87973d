#include <doctest.h>

#include <cmath>
#include <deque>

#include "l4semu/errors.hpp"
#include "l4semu/rng.hpp"
#include "l4semu/traffic.hpp"

using namespace l4semu;

namespace {

Ack ack_for(const Packet& p, bool ce = false) {
  Ack a;
  a.flow = p.flow;
  a.seq = p.seq;
  a.ce = ce;
  a.data_sent_at = p.created_at;
  return a;
}

}  // namespace

TEST_SUITE("traffic") {
  TEST_CASE("flow kinds and codepoints") {
    CHECK(parse_flow_kind("scalable") == FlowKind::Scalable);
    CHECK(parse_flow_kind("prague") == FlowKind::Scalable);
    CHECK(parse_flow_kind("reno") == FlowKind::Reno);
    CHECK(parse_flow_kind("cubic") == FlowKind::Cubic);
    CHECK_THROWS_AS(parse_flow_kind("bbr"), ConfigError);
    CHECK(codepoint_for(FlowKind::Scalable) == EcnCodepoint::Ect1);
    CHECK(codepoint_for(FlowKind::Cubic) == EcnCodepoint::Ect0);
  }

  TEST_CASE("scalable: clean rounds add one packet each") {
    ScalableCc cc;
    cc.slow_start = false;
    cc.cwnd = 20;
    for (int k = 1; k <= 7; ++k) {
      cc.on_ack(20, 0);
      cc.on_round_end();
      CHECK(cc.cwnd == doctest::Approx(20 + k));
    }
  }

  TEST_CASE("scalable: fully marked rounds halve the window") {
    ScalableCc cc;
    cc.slow_start = false;
    cc.cwnd = 64;
    cc.marked_frac_ewma = 1.0;
    for (double expected : {32.0, 16.0, 8.0}) {
      cc.on_ack(10, 10);
      cc.on_round_end();
      CHECK(cc.marked_frac_ewma == 1.0);
      CHECK(cc.cwnd == doctest::Approx(expected));
    }
  }

  TEST_CASE("scalable: EWMA gain 1/16 and reduction by ewma/2") {
    ScalableCc cc;
    cc.slow_start = false;
    cc.cwnd = 100;
    cc.marked_frac_ewma = 0.0;
    cc.on_ack(10, 5);
    cc.on_round_end();
    CHECK(cc.marked_frac_ewma == doctest::Approx(0.5 / 16));
    CHECK(cc.cwnd == doctest::Approx(100 * (1 - 0.5 / 32)));
  }

  TEST_CASE("scalable: slow start doubles until the first mark") {
    ScalableCc cc;
    cc.on_ack(10, 0);
    CHECK(cc.cwnd == 20);
    cc.on_ack(1, 1);
    CHECK_FALSE(cc.slow_start);
  }

  TEST_CASE("property: scalable invariants") {
    Rng rng(8);
    ScalableCc cc;
    for (int i = 0; i < 100000; ++i) {
      const auto acked = static_cast<std::uint32_t>(rng.index(50));
      const auto ce = acked ? static_cast<std::uint32_t>(rng.index(acked + 1)) : 0;
      cc.on_ack(acked, ce);
      if (rng.index(4) == 0) cc.on_round_end();
      if (rng.index(100) == 0) cc.on_loss();
      REQUIRE(cc.cwnd >= 1.0);
      REQUIRE(cc.marked_frac_ewma >= 0.0);
      REQUIRE(cc.marked_frac_ewma <= 1.0);
    }
  }

  TEST_CASE("reno halves on congestion") {
    ClassicCc cc(ClassicVariant::Reno);
    cc.cwnd = 10;
    cc.on_congestion(SimTime{});
    CHECK(cc.cwnd == 5);
    CHECK(cc.ssthresh == 5);
  }

  TEST_CASE("cubic window function") {
    ClassicCc cc(ClassicVariant::Cubic);
    cc.cwnd = 100;
    cc.on_congestion(SimTime(2s));
    CHECK(cc.cwnd == doctest::Approx(70));
    CHECK(cc.w_max == 100);
    const double K = std::cbrt(100 * 0.3 / 0.4);
    CHECK(cc.cubic_k == doctest::Approx(K));
    CHECK(cc.cubic_window(K) == doctest::Approx(100));
    CHECK(cc.cubic_window(1.0) == doctest::Approx(0.4 * std::pow(1 - K, 3) + 100));
    CHECK(cc.cubic_window(0.0) == doctest::Approx(70));  // starts from beta * w_max
  }

  TEST_CASE("cubic window grows back towards w_max") {
    ClassicCc cc(ClassicVariant::Cubic);
    cc.cwnd = 100;
    cc.on_congestion(SimTime{});
    SimTime now{};
    for (int r = 0; r < 200; ++r) {
      now = now + 40ms;
      cc.on_ack(static_cast<std::uint32_t>(cc.cwnd), now, 40ms);
    }
    CHECK(cc.cwnd > 100);
  }

  TEST_CASE("pump respects the window") {
    Sender s(0, FlowKind::Cubic, SimTime{}, std::nullopt);
    std::uint64_t id = 0;
    auto first = s.pump(SimTime{}, id);
    CHECK(first.size() == 10);
    CHECK(s.pump(SimTime{}, id).empty());
    CHECK(first[0].ecn == EcnCodepoint::Ect0);
    CHECK(first[9].seq == 9);
    CHECK(id == 10);
  }

  TEST_CASE("pump honours start and stop times") {
    Sender s(0, FlowKind::Scalable, SimTime(1s), SimTime(2s));
    std::uint64_t id = 0;
    CHECK(s.pump(SimTime(500ms), id).empty());
    CHECK(s.pump(SimTime(1s), id).size() == 10);
    Sender done(0, FlowKind::Scalable, SimTime{}, SimTime(2s));
    CHECK(done.pump(SimTime(2s), id).empty());
  }

  TEST_CASE("classic sender decreases at most once per round trip") {
    Sender s(0, FlowKind::Reno, SimTime{}, std::nullopt);
    std::uint64_t id = 0;
    const auto pkts = s.pump(SimTime{}, id);
    const double before = s.cwnd();
    for (const auto& p : pkts) s.on_ack(ack_for(p, true), SimTime(20ms));
    CHECK(s.congestion_events() == 1);
    CHECK(s.cwnd() == doctest::Approx(before / 2));

    // The next window is a new round trip.
    const auto next = s.pump(SimTime(20ms), id);
    REQUIRE_FALSE(next.empty());
    s.on_ack(ack_for(next.front(), true), SimTime(40ms));
    CHECK(s.congestion_events() == 2);
  }

  TEST_CASE("receiver reports a gap after three later arrivals") {
    Receiver r;
    auto pkt = [](std::uint64_t seq) {
      Packet p;
      p.seq = seq;
      return p;
    };
    CHECK(r.on_packet(pkt(0)).lost.empty());
    CHECK(r.on_packet(pkt(2)).lost.empty());
    CHECK(r.on_packet(pkt(3)).lost.empty());
    const auto a = r.on_packet(pkt(4));
    REQUIRE(a.lost.size() == 1);
    CHECK(a.lost[0] == 1);
    CHECK(r.lost_count() == 1);
    CHECK(r.total_count() == 4);
  }

  TEST_CASE("receiver: a late arrival fills its hole") {
    Receiver r;
    Packet p;
    p.seq = 1;
    r.on_packet(p);
    p.seq = 0;
    r.on_packet(p);
    for (std::uint64_t s = 2; s < 10; ++s) {
      p.seq = s;
      CHECK(r.on_packet(p).lost.empty());
    }
  }

  TEST_CASE("receiver counts CE") {
    Receiver r;
    Packet p;
    p.ecn = EcnCodepoint::Ce;
    CHECK(r.on_packet(p).ce);
    p.seq = 1;
    p.ecn = EcnCodepoint::Ect1;
    CHECK_FALSE(r.on_packet(p).ce);
    CHECK(r.ce_count() == 1);
    CHECK(r.ce_count() <= r.total_count());
    CHECK(r.received_bytes() == 2 * kMtu);
  }

  TEST_CASE("loss signals reduce the window") {
    Sender s(0, FlowKind::Cubic, SimTime{}, std::nullopt);
    std::uint64_t id = 0;
    const auto pkts = s.pump(SimTime{}, id);
    Ack a = ack_for(pkts[5]);
    a.lost = {1};
    s.on_ack(a, SimTime(20ms));
    CHECK(s.congestion_events() == 1);
    CHECK(s.in_flight() == 8);
  }

  TEST_CASE("timeout writes off stale packets once") {
    Sender s(0, FlowKind::Reno, SimTime{}, std::nullopt);
    std::uint64_t id = 0;
    s.pump(SimTime{}, id);
    CHECK(s.rto() == 200ms);
    CHECK(s.oldest_send_time() == SimTime{});
    s.on_timeout(SimTime(100ms));
    CHECK(s.in_flight() == 10);
    s.on_timeout(SimTime(200ms));
    CHECK(s.in_flight() == 0);
    CHECK(s.congestion_events() == 1);
  }

  TEST_CASE("property: in-flight never exceeds ceil(cwnd)") {
    for (auto kind : {FlowKind::Scalable, FlowKind::Reno, FlowKind::Cubic}) {
      Rng rng(21);
      Sender s(0, kind, SimTime{}, std::nullopt);
      Receiver r;
      std::uint64_t id = 0;
      std::deque<Packet> net;
      SimTime now{};
      for (int i = 0; i < 20000; ++i) {
        now = now + 1ms;
        const auto sent = s.pump(now, id);
        // A reduction may leave more in flight than the new window; only
        // emissions are bounded.
        if (!sent.empty()) REQUIRE(static_cast<double>(s.in_flight()) <= std::ceil(s.cwnd()));
        for (const auto& p : sent) net.push_back(p);
        if (net.empty()) continue;
        Packet p = net.front();
        net.pop_front();
        if (rng.index(50) == 0) continue;  // dropped
        if (rng.index(10) == 0) p.ecn = EcnCodepoint::Ce;
        s.on_ack(r.on_packet(p), now);
        if (rng.index(200) == 0) s.on_timeout(now + 1s);
      }
    }
  }
}

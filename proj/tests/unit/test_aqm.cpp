#include <doctest.h>

#include <cmath>

#include "l4semu/aqm.hpp"
#include "l4semu/errors.hpp"
#include "support/oracles.hpp"

using namespace l4semu;

namespace {

Packet make_packet(EcnCodepoint ecn, std::uint32_t size = kMtu, std::uint64_t id = 0) {
  Packet p;
  p.id = id;
  p.size = size;
  p.ecn = ecn;
  return p;
}

void check_conservation(const DualPi2& aqm) {
  const auto& c = aqm.counters();
  CHECK(c.enq_total == c.deq_total + c.drops_total + aqm.queued_packets());
  CHECK(aqm.queued_bytes() <= aqm.config().limit_bytes);
  CHECK(aqm.base_probability() >= 0.0);
  CHECK(aqm.base_probability() <= 1.0);
}

}  // namespace

TEST_SUITE("aqm") {
  TEST_CASE("classifier follows the ECN codepoint") {
    CHECK(classify(EcnCodepoint::Ect1) == QueueId::L4s);
    CHECK(classify(EcnCodepoint::Ce) == QueueId::L4s);
    CHECK(classify(EcnCodepoint::NotEct) == QueueId::Classic);
    CHECK(classify(EcnCodepoint::Ect0) == QueueId::Classic);
  }

  TEST_CASE("limit is rate times 250 ms") {
    CHECK(AqmConfig::limit_for_rate(12'000'000) == 375'000);
    CHECK(AqmConfig::limit_for_rate(50'000'000) == 1'562'500);
    CHECK(AqmConfig::limit_for_rate(200'000'000) == 6'250'000);
  }

  TEST_CASE("config validation") {
    AqmConfig ok;
    CHECK_NOTHROW(ok.validate());
    auto bad = [](auto mutate) {
      AqmConfig c;
      mutate(c);
      CHECK_THROWS_AS(c.validate(), ConfigError);
    };
    bad([](AqmConfig& c) { c.target = 0ns; });
    bad([](AqmConfig& c) { c.step_thresh = -1ms; });
    bad([](AqmConfig& c) { c.tupdate = 0ns; });
    bad([](AqmConfig& c) { c.alpha = 0.0; });
    bad([](AqmConfig& c) { c.beta = -1.0; });
    bad([](AqmConfig& c) { c.coupling_k = 0.5; });
    bad([](AqmConfig& c) { c.limit_bytes = 0; });
    bad([](AqmConfig& c) { c.classic_protection = 1.0; });
  }

  TEST_CASE("enqueue routes by codepoint and enforces the limit") {
    AqmConfig cfg;
    cfg.limit_bytes = 3000;
    DualPi2 aqm(cfg);
    CHECK(aqm.enqueue(make_packet(EcnCodepoint::Ect1), SimTime{}) == Verdict::EnqueuedL);
    CHECK(aqm.enqueue(make_packet(EcnCodepoint::Ect0), SimTime{}) == Verdict::EnqueuedC);
    CHECK(aqm.enqueue(make_packet(EcnCodepoint::NotEct), SimTime{}) == Verdict::DroppedOverflow);
    CHECK(aqm.counters().drops_overflow == 1);
    CHECK(aqm.queued_bytes() == 3000);
    check_conservation(aqm);
  }

  TEST_CASE("PI2 update matches the recurrence") {
    AqmConfig cfg;
    const double p = pi2_step(0.01, 25ms, 20ms, cfg);
    CHECK(p == doctest::Approx(0.01 + 0.16 * 0.016 * 0.010 + 3.2 * 0.005).epsilon(1e-12));
    CHECK(p == doctest::Approx(0.0260256).epsilon(1e-12));
  }

  TEST_CASE("PI2 clamps to [0, 1]") {
    AqmConfig cfg;
    CHECK(pi2_step(0.001, 0ms, 50ms, cfg) == 0.0);
    CHECK(pi2_step(0.99, 500ms, 0ms, cfg) == 1.0);
  }

  TEST_CASE("PI2 fixed point at target is exact") {
    AqmConfig cfg;
    for (double p0 : {0.0, 0.0123, 0.5, 1.0}) {
      double p = p0;
      for (int i = 0; i < 10000; ++i) p = pi2_step(p, cfg.target, cfg.target, cfg);
      CHECK(p == p0);
    }
  }

  TEST_CASE("property: adversarial qdelay sequences keep p' in [0, 1]") {
    AqmConfig cfg;
    Rng rng(17);
    double p = 0.0;
    Duration prev = 0ns;
    for (int i = 0; i < 100000; ++i) {
      const auto q = Duration(static_cast<std::int64_t>(rng.index(2'000'000'000)));
      p = pi2_step(p, q, prev, cfg);
      prev = q;
      REQUIRE(p >= 0.0);
      REQUIRE(p <= 1.0);
    }
  }

  TEST_CASE("probability ordering P_C <= p' <= k p'") {
    for (double p = 0.0; p <= 1.0; p += 0.01) {
      CHECK(classic_probability(p) <= p + 1e-15);
      CHECK(p <= coupled_probability(p, 2.0) + 1e-15);
    }
    CHECK(classic_probability(0.2) == doctest::Approx(0.04));
    CHECK(coupled_probability(0.2, 2.0) == doctest::Approx(0.4));
    CHECK(coupled_probability(0.7, 2.0) == 1.0);
  }

  TEST_CASE("classic action") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i)
      CHECK(classic_action(0.0, EcnCodepoint::Ect0, true, rng) == ClassicAction::Pass);
    CHECK(classic_action(1.0, EcnCodepoint::Ect0, true, rng) == ClassicAction::Mark);
    CHECK(classic_action(1.0, EcnCodepoint::Ect0, false, rng) == ClassicAction::Drop);
    CHECK(classic_action(1.0, EcnCodepoint::NotEct, true, rng) == ClassicAction::Drop);

    int hits = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) hits += classic_action(0.2, EcnCodepoint::NotEct, true, rng) != ClassicAction::Pass;
    CHECK(std::fabs(hits / double(n) - 0.04) < 4 * std::sqrt(0.04 * 0.96 / n));
  }

  TEST_CASE("L4S step threshold") {
    AqmConfig cfg;
    Rng rng(1);
    CHECK_FALSE(l4s_should_mark(500us, 0.0, cfg, rng));
    CHECK_FALSE(l4s_should_mark(1ms, 0.0, cfg, rng));  // strictly greater marks
    CHECK(l4s_should_mark(1ms + 1ns, 0.0, cfg, rng));
    CHECK(l4s_should_mark(2ms, 0.0, cfg, rng));

    int hits = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) hits += l4s_should_mark(0ns, 0.2, cfg, rng);
    CHECK(std::fabs(hits / double(n) - 0.4) < 4 * std::sqrt(0.4 * 0.6 / n));
  }

  TEST_CASE("dequeue is work conserving") {
    Rng rng(1);
    DualPi2 only_l{AqmConfig{}};
    only_l.enqueue(make_packet(EcnCodepoint::Ect1), SimTime{});
    auto p = only_l.dequeue(SimTime{}, rng);
    REQUIRE(p);
    CHECK(p->ecn == EcnCodepoint::Ect1);

    DualPi2 only_c{AqmConfig{}};
    only_c.enqueue(make_packet(EcnCodepoint::Ect0), SimTime{});
    p = only_c.dequeue(SimTime{}, rng);
    REQUIRE(p);
    CHECK(p->ecn == EcnCodepoint::Ect0);
    CHECK_FALSE(only_c.dequeue(SimTime{}, rng));
  }

  TEST_CASE("dequeue marks L packets past step_thresh") {
    Rng rng(1);
    DualPi2 aqm{AqmConfig{}};
    aqm.enqueue(make_packet(EcnCodepoint::Ect1), SimTime{});
    aqm.enqueue(make_packet(EcnCodepoint::Ect1), SimTime{});
    CHECK(aqm.dequeue(SimTime(1ms), rng)->ecn == EcnCodepoint::Ect1);
    CHECK(aqm.dequeue(SimTime(2ms), rng)->ecn == EcnCodepoint::Ce);
    CHECK(aqm.counters().ecn_marks_l == 1);
  }

  TEST_CASE("classic drops continue to the next packet") {
    Rng rng(1);
    AqmConfig cfg;
    cfg.ecn_classic_enabled = false;
    DualPi2 aqm(cfg);
    for (int i = 0; i < 5; ++i) aqm.enqueue(make_packet(EcnCodepoint::Ect0), SimTime{});
    aqm.enqueue(make_packet(EcnCodepoint::Ect1), SimTime{});
    aqm.set_controller(1.0, 0ns);
    // Every classic packet is dropped; the L packet still goes out.
    auto p = aqm.dequeue(SimTime{}, rng);
    REQUIRE(p);
    CHECK(classify(*p) == QueueId::L4s);
    CHECK_FALSE(aqm.dequeue(SimTime{}, rng));
    CHECK(aqm.counters().drops_aqm() == 5);
    check_conservation(aqm);
  }

  TEST_CASE("update samples head-of-C sojourn and schedules the next update") {
    AqmConfig cfg;
    DualPi2 aqm(cfg);
    CHECK(aqm.next_update_at() == SimTime(16ms));
    aqm.enqueue(make_packet(EcnCodepoint::Ect0), SimTime{});
    const double p = aqm.update(SimTime(25ms));
    CHECK(p == doctest::Approx(pi2_step(0.0, 25ms, 0ns, cfg)));
    CHECK(aqm.state().prev_qdelay == 25ms);
    CHECK(aqm.next_update_at() == SimTime(32ms));
  }

  TEST_CASE("WRR share with both queues backlogged") {
    AqmConfig cfg;
    cfg.limit_bytes = 1ULL << 40;
    DualPi2 aqm(cfg);
    Rng rng(1);
    std::uint64_t id = 0;
    for (int i = 0; i < 64; ++i) {
      aqm.enqueue(make_packet(EcnCodepoint::Ect1, kMtu, id++), SimTime{});
      aqm.enqueue(make_packet(EcnCodepoint::Ect0, kMtu, id++), SimTime{});
    }
    std::uint64_t c_bytes = 0, total = 0;
    const std::size_t n = 1'000'000;
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = aqm.dequeue(SimTime{}, rng);
      REQUIRE(p);
      total += p->size;
      // p' stays 0, so C packets keep ECT(0) and marked packets came from L.
      const bool classic = p->ecn == EcnCodepoint::Ect0;
      if (classic) c_bytes += p->size;
      aqm.enqueue(make_packet(classic ? EcnCodepoint::Ect0 : EcnCodepoint::Ect1, kMtu, id++), SimTime{});
    }
    const double share = static_cast<double>(c_bytes) / static_cast<double>(total);
    CHECK(share >= 0.09);
    CHECK(share <= 0.11);
    CHECK(share == doctest::Approx(oracle::wrr_classic_share(0.1, kMtu, n)).epsilon(1e-9));
  }

  TEST_CASE("property: random operation sequences conserve packets and bytes") {
    Rng rng(5);
    AqmConfig cfg;
    cfg.limit_bytes = 30'000;
    cfg.ecn_classic_enabled = false;
    DualPi2 aqm(cfg);
    SimTime now{};
    std::uint64_t marks_prev = 0, drops_prev = 0;
    for (int i = 0; i < 200000; ++i) {
      now = now + Duration(static_cast<std::int64_t>(rng.index(300'000)));
      switch (rng.index(4)) {
        case 0:
        case 1: {
          const EcnCodepoint ecn[] = {EcnCodepoint::NotEct, EcnCodepoint::Ect0, EcnCodepoint::Ect1};
          aqm.enqueue(make_packet(ecn[rng.index(3)], static_cast<std::uint32_t>(64 + rng.index(1437))), now);
          break;
        }
        case 2: aqm.dequeue(now, rng); break;
        case 3:
          if (now >= aqm.next_update_at()) aqm.update(now);
          break;
      }
      check_conservation(aqm);
      const auto& c = aqm.counters();
      REQUIRE(c.ecn_marks() >= marks_prev);
      REQUIRE(c.drops_total >= drops_prev);
      marks_prev = c.ecn_marks();
      drops_prev = c.drops_total;
    }
  }
}

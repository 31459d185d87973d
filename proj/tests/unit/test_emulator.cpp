#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "l4semu/corpus.hpp"
#include "l4semu/emulator.hpp"
#include "l4semu/errors.hpp"

using namespace l4semu;

namespace {

ScenarioConfig scenario(const std::string& preset, const std::string& traffic, ConfigMap extra = {}) {
  extra["preset"] = preset;
  extra["traffic"] = traffic;
  return resolve_config(extra);
}

}  // namespace

TEST_SUITE("emulator") {
  TEST_CASE("30 s run yields 1875 samples at tupdate spacing") {
    const auto cfg = scenario("low", "dual");
    const auto out = run_emulation(cfg, 1);
    const auto& s = out.record.series;
    CHECK(s.size() >= 1874);
    CHECK(s.size() <= 1876);
    for (std::size_t i = 0; i < s.size(); ++i) REQUIRE(s[i].t == SimTime((static_cast<std::int64_t>(i) + 1) * 16ms));
    CHECK(out.record.avg_throughput_mbps > 0.0);
    CHECK(out.record.avg_throughput_mbps <= 12.0 + 1e-9);
  }

  TEST_CASE("conservation after every event and interval sums") {
    for (const char* traffic : {"l4s", "classic", "dual"}) {
      for (const char* preset : {"low", "medium"}) {
        CAPTURE(traffic);
        CAPTURE(preset);
        auto cfg = scenario(preset, traffic, {{"duration_s", "5.01"}, {"aqm.ecn_classic", "false"}});
        std::uint64_t violations = 0;
        RunObserver obs;
        obs.on_event = [&](const DualPi2& aqm, SimTime) {
          const auto& c = aqm.counters();
          if (c.enq_total != c.deq_total + c.drops_total + aqm.queued_packets()) ++violations;
          if (aqm.queued_bytes() > aqm.config().limit_bytes) ++violations;
          if (aqm.base_probability() < 0.0 || aqm.base_probability() > 1.0) ++violations;
        };
        const auto out = run_emulation(cfg, 3, "run", &obs);
        CHECK(violations == 0);
        const auto& c = out.counters;
        CHECK(c.enq_total == c.deq_total + c.drops_total + out.residual_packets);
        REQUIRE(out.record.series.back().t == SimTime(cfg.duration));
        std::uint64_t marks = 0, drops = 0;
        for (const auto& s : out.record.series) {
          marks += s.ecn_marks;
          drops += s.drops;
        }
        CHECK(marks == c.ecn_marks());
        CHECK(drops == c.drops_total);
      }
    }
  }

  TEST_CASE("step marking soundness") {
    const auto cfg = scenario("low", "l4s", {{"duration_s", "10"}});
    std::uint64_t l_packets = 0, late = 0, violations = 0;
    RunObserver obs;
    obs.on_transmit = [&](const Packet& p, SimTime now) {
      if (classify(p) != QueueId::L4s) return;
      ++l_packets;
      if (now - p.enqueued_at > cfg.aqm.step_thresh) {
        ++late;
        if (p.ecn != EcnCodepoint::Ce) ++violations;
      }
    };
    run_emulation(cfg, 1, "run", &obs);
    CHECK(l_packets > 0);
    CHECK(late > 0);
    CHECK(violations == 0);
  }

  TEST_CASE("same seed gives identical output") {
    const auto cfg = scenario("low", "dual", {{"duration_s", "5"}});
    const auto a = run_emulation(cfg, 11);
    const auto b = run_emulation(cfg, 11);
    CHECK(a.record.series == b.record.series);
    CHECK(a.record.avg_throughput_mbps == b.record.avg_throughput_mbps);
    CHECK(a.events == b.events);
    const auto c = run_emulation(cfg, 12);
    CHECK_FALSE(a.record.series == c.record.series);
  }

  TEST_CASE("classic flow fills the low-BDP link") {
    const auto out = run_emulation(scenario("low", "classic", {{"duration_s", "10"}}), 1);
    CHECK(out.record.avg_throughput_mbps >= 10.2);
  }

  TEST_CASE("smooth and bursty links differ in queue dynamics") {
    const auto b = run_emulation(scenario("medium", "l4s", {{"duration_s", "5"}}), 1);
    const auto s = run_emulation(scenario("medium", "l4s", {{"duration_s", "5"}, {"link.mode", "smooth"}}), 1);
    CHECK(s.record.avg_throughput_mbps > b.record.avg_throughput_mbps);
  }

  TEST_CASE("scalable marks per round trip are roughly rate independent") {
    // Steady state at 12 and 50 Mbps with the step threshold above the
    // millisecond delivery granularity.
    auto per_rtt = [](const char* preset) {
      const auto out = run_emulation(scenario(preset, "l4s", {{"aqm.step_thresh_ms", "5"}}), 1);
      const auto& f = out.flows.at(0);
      return static_cast<double>(f.ce_received) / static_cast<double>(f.rounds);
    };
    const double low = per_rtt("low"), medium = per_rtt("medium");
    CAPTURE(low);
    CAPTURE(medium);
    CHECK(std::fabs(low - medium) / std::max(low, medium) < 0.5);
  }

  TEST_CASE("flows start and stop on schedule") {
    const auto cfg = resolve_config({{"preset", "low"},
                                     {"duration_s", "6"},
                                     {"flow.a.kind", "cubic"},
                                     {"flow.b.kind", "scalable"},
                                     {"flow.b.start_time", "2"},
                                     {"flow.b.duration", "2"}});
    const auto out = run_emulation(cfg, 1);
    REQUIRE(out.flows.size() == 2);
    CHECK(out.flows[1].received_bytes > 0);
    CHECK(out.flows[1].received_bytes < out.flows[0].received_bytes);
  }

  TEST_CASE("trace file drives the bursty link") {
    const auto dir = std::filesystem::temp_directory_path() / "l4semu_emu_trace";
    std::filesystem::create_directories(dir);
    constant_rate_trace(24'000'000).save(dir / "24.trace");
    auto cfg = resolve_config({{"preset", "low"},
                               {"traffic", "classic"},
                               {"duration_s", "5"},
                               {"link.trace_file", (dir / "24.trace").string()}});
    const auto out = run_emulation(cfg, 1);
    CHECK(out.record.avg_throughput_mbps > 12.5);
    CHECK(out.record.avg_throughput_mbps <= 24.0);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("metadata records the rng and seed") {
    const auto cfg = scenario("low", "l4s", {{"duration_s", "1"}});
    const auto out = run_emulation(cfg, 5);
    const auto meta = run_metadata(cfg, out);
    CHECK(meta["rng"] == "mt19937_64");
    CHECK(out.record.seed == 5);
    CHECK(meta["counters"]["enq_total"] == out.counters.enq_total);
  }
}

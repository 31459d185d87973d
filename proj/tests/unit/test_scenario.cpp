#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "l4semu/errors.hpp"
#include "l4semu/scenario.hpp"

using namespace l4semu;

namespace {

ScenarioConfig resolve(ConfigMap m) { return resolve_config(m); }

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("presets map to rate, delay and AQM limit") {
    const auto low = resolve({{"preset", "low"}, {"traffic", "dual"}});
    CHECK(low.link.rate_bps == 12'000'000);
    CHECK(low.one_way_delay == 10ms);
    CHECK(low.aqm.limit_bytes == 375'000);
    CHECK(low.aqm.step_thresh == 1ms);
    CHECK(low.aqm.target == 15ms);
    REQUIRE(low.flows.size() == 2);
    CHECK(low.flows[0].kind == FlowKind::Scalable);
    CHECK(low.flows[1].kind == FlowKind::Cubic);

    const auto high = resolve({{"preset", "high"}, {"params", "refined"}, {"traffic", "l4s"}});
    CHECK(high.link.rate_bps == 200'000'000);
    CHECK(high.one_way_delay == 50ms);
    CHECK(high.aqm.step_thresh == 10ms);
    CHECK(high.aqm.target == 45ms);

    const auto med = resolve({{"preset", "medium"}, {"params", "refined"}, {"traffic", "classic"}});
    CHECK(med.aqm.step_thresh == 5ms);
    CHECK(med.aqm.target == 30ms);
    CHECK(med.aqm.tupdate == 16ms);
    CHECK(med.aqm.alpha == 0.16);
    CHECK(med.aqm.beta == 3.2);
  }

  TEST_CASE("explicit keys override presets") {
    const auto c = resolve({{"preset", "medium"},
                            {"traffic", "l4s"},
                            {"aqm.step_thresh_ms", "5"},
                            {"link.mode", "smooth"},
                            {"duration_s", "2.5"},
                            {"seed", "9"}});
    CHECK(c.aqm.step_thresh == 5ms);
    CHECK(c.link.mode == LinkMode::Smooth);
    CHECK(c.duration == 2500ms);
    CHECK(c.seed == 9);
  }

  TEST_CASE("flow sections replace the traffic pattern") {
    const auto c = resolve({{"preset", "low"},
                            {"traffic", "dual"},
                            {"flow.a.kind", "reno"},
                            {"flow.b.kind", "prague"},
                            {"flow.b.start_time", "1.5"},
                            {"flow.b.duration", "10"}});
    REQUIRE(c.flows.size() == 2);
    CHECK(c.flows[0].kind == FlowKind::Reno);
    CHECK(c.flows[1].kind == FlowKind::Scalable);
    CHECK(c.flows[1].start_time == 1500ms);
    CHECK(c.flows[1].duration == 10s);
  }

  TEST_CASE("config errors") {
    CHECK_THROWS_AS(resolve({{"preset", "huge"}, {"traffic", "l4s"}}), ConfigError);
    CHECK_THROWS_AS(resolve({{"preset", "low"}, {"traffic", "bbr"}}), ConfigError);
    CHECK_THROWS_AS(resolve({{"preset", "low"}, {"params", "tuned"}, {"traffic", "l4s"}}), ConfigError);
    CHECK_THROWS_AS(resolve({{"preset", "low"}}), ConfigError);  // no flows
    CHECK_THROWS_AS(resolve({{"preset", "low"}, {"traffic", "l4s"}, {"duration_s", "0"}}), ConfigError);
    CHECK_THROWS_AS(resolve({{"preset", "low"}, {"traffic", "l4s"}, {"runs", "0"}}), ConfigError);
    CHECK_THROWS_AS(resolve({{"preset", "low"}, {"traffic", "l4s"}, {"aqm.alpha", "fast"}}), ConfigError);
    CHECK_THROWS_AS(resolve({{"preset", "low"}, {"traffic", "l4s"}, {"aqm.gamma", "1"}}), ConfigError);
    CHECK_THROWS_AS(resolve({{"preset", "low"}, {"flow.x.start_time", "1"}}), ConfigError);
    CHECK_THROWS_AS(resolve({{"preset", "low"}, {"traffic", "l4s"}, {"aqm.coupling_k", "0.5"}}), ConfigError);
    CHECK_THROWS_AS(parse_override("novalue"), ConfigError);
    CHECK_THROWS_AS(parse_override("=3"), ConfigError);
  }

  TEST_CASE("INI files") {
    const auto dir = std::filesystem::temp_directory_path() / "l4semu_ini_test";
    std::filesystem::create_directories(dir);
    {
      std::ofstream f(dir / "s.ini");
      f << "; medium BDP, refined\npreset = medium\nparams = refined\ntraffic = dual\n\n"
           "[aqm]\ntarget_ms = 35\n\n[link]\nmode = smooth\n";
    }
    const auto map = read_config_file(dir / "s.ini");
    CHECK(map.at("aqm.target_ms") == "35");
    const auto c = resolve_config(map);
    CHECK(c.aqm.target == 35ms);
    CHECK(c.aqm.step_thresh == 5ms);
    CHECK(c.link.mode == LinkMode::Smooth);
    {
      std::ofstream f(dir / "bad.ini");
      f << "[aqm\ntarget_ms = 3\n";
    }
    CHECK_THROWS_AS(read_config_file(dir / "bad.ini"), ConfigError);
    CHECK_THROWS_AS(read_config_file(dir / "missing.ini"), ConfigError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("fingerprint ignores seed and run count only") {
    auto a = resolve({{"preset", "low"}, {"traffic", "l4s"}});
    auto b = a;
    b.seed = 77;
    b.runs = 5;
    CHECK(a.fingerprint() == b.fingerprint());
    CHECK(a.fingerprint().size() == 16);
    b.aqm.target = 16ms;
    CHECK(a.fingerprint() != b.fingerprint());
  }

  TEST_CASE("sweep parameters") {
    auto c = resolve({{"preset", "medium"}, {"traffic", "l4s"}});
    apply_sweep_param(c, "step_thresh", 5);
    CHECK(c.aqm.step_thresh == 5ms);
    apply_sweep_param(c, "target", 30);
    CHECK(c.aqm.target == 30ms);
    apply_sweep_param(c, "coupling_k", 3);
    CHECK(c.aqm.coupling_k == 3);
    CHECK_THROWS_AS(apply_sweep_param(c, "mtu", 9000), ConfigError);
    CHECK_THROWS_AS(apply_sweep_param(c, "classic_protection", 1.5), ConfigError);
  }
}

TEST_SUITE("scenario") {
  TEST_CASE("shipped configs resolve") {
    std::size_t count = 0;
    for (const auto& e : std::filesystem::directory_iterator(L4SEMU_CONFIG_DIR)) {
      if (e.path().extension() != ".ini") continue;
      CAPTURE(e.path().string());
      CHECK_NOTHROW(resolve_config(read_config_file(e.path())));
      ++count;
    }
    CHECK(count == 10);
    const auto c = resolve_config(read_config_file(std::filesystem::path(L4SEMU_CONFIG_DIR) / "staggered_flows.ini"));
    REQUIRE(c.flows.size() == 2);
    CHECK(c.flows[0].kind == FlowKind::Cubic);
    CHECK(c.flows[1].start_time == 10s);
  }
}

#include <benchmark/benchmark.h>

#include <vector>

#include "l4semu/aqm.hpp"
#include "l4semu/emulator.hpp"
#include "l4semu/rng.hpp"
#include "l4semu/statcheck.hpp"

using namespace l4semu;

namespace {

std::vector<double> random_series(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng.index(200));
  return v;
}

void BM_Dtw(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_series(n, 1);
  const auto y = random_series(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(stat::dtw(x, y));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_Dtw)->Arg(128)->Arg(512)->Arg(1875)->Unit(benchmark::kMillisecond);

void BM_DtwBanded(benchmark::State& state) {
  const auto x = random_series(1875, 1);
  const auto y = random_series(1875, 2);
  const stat::DtwOptions opts{static_cast<std::size_t>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(stat::dtw(x, y, opts));
}
BENCHMARK(BM_DtwBanded)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_AqmEnqueueDequeue(benchmark::State& state) {
  AqmConfig cfg;
  cfg.limit_bytes = 1ULL << 40;
  DualPi2 aqm(cfg);
  Rng rng(1);
  Packet p;
  p.size = kMtu;
  SimTime now{};
  for (auto _ : state) {
    p.ecn = (p.id++ & 1) ? EcnCodepoint::Ect1 : EcnCodepoint::Ect0;
    aqm.enqueue(p, now);
    benchmark::DoNotOptimize(aqm.dequeue(now, rng));
    now = advance_time(now, 1us);
  }
}
BENCHMARK(BM_AqmEnqueueDequeue);

void BM_Emulation(benchmark::State& state) {
  static const char* const presets[] = {"low", "medium", "high"};
  const auto cfg = resolve_config({{"preset", presets[state.range(0)]}, {"traffic", "dual"}});
  std::uint64_t seed = 1;
  std::uint64_t events = 0;
  for (auto _ : state) events += run_emulation(cfg, seed++).events;
  state.SetItemsProcessed(static_cast<std::int64_t>(events));
  state.SetLabel(presets[state.range(0)]);
}
BENCHMARK(BM_Emulation)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

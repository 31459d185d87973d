#include <CLI11.hpp>
#include <fmt/format.h>

#include "l4semu/errors.hpp"
#include "l4semu_cli/commands.hpp"

namespace l4semu::cli {

namespace {

struct ScenarioFlags {
  std::optional<fs::path> config;
  std::string preset;
  std::string params;
  std::string traffic;
  std::vector<std::string> sets;

  void attach(CLI::App& app) {
    app.add_option("-c,--config", config, "Scenario config file (INI)")->check(CLI::ExistingFile);
    app.add_option("--preset", preset, "BDP preset: low, medium, high");
    app.add_option("--params", params, "Parameter set: default, refined");
    app.add_option("--traffic", traffic, "Traffic pattern: l4s, classic, dual");
    app.add_option("--set", sets, "Override a config key, e.g. --set aqm.step_thresh_ms=5");
  }

  ScenarioConfig resolve() const {
    std::vector<std::string> overrides;
    if (!preset.empty()) overrides.push_back("preset=" + preset);
    if (!params.empty()) overrides.push_back("params=" + params);
    if (!traffic.empty()) overrides.push_back("traffic=" + traffic);
    overrides.insert(overrides.end(), sets.begin(), sets.end());
    return load_scenario(config, overrides);
  }
};

std::vector<stat::Metric> parse_metrics(const std::vector<std::string>& names) {
  std::vector<stat::Metric> out;
  for (const auto& n : names) out.push_back(stat::parse_metric(n));
  return out;
}

void print_reports(const std::vector<MetricReport>& reports) {
  fmt::print("{:<16} {:>12} {:>10} {:>4}", "metric", "eps", "p", "OK");
  const bool boot = !reports.empty() && reports.front().bootstrap;
  if (boot) fmt::print("  {:>21}", "95% CI of p");
  fmt::print("\n");
  for (const auto& r : reports) {
    fmt::print("{:<16} {:>12.6g} {:>10.4g} {:>4}", r.test.metric, r.test.eps_max, r.test.p_hat_max,
               r.test.reject_h0 ? "yes" : "no");
    if (r.bootstrap) fmt::print("  [{:>8.4f}, {:>8.4f}]", r.bootstrap->ci.lo, r.bootstrap->ci.hi);
    fmt::print("\n");
    for (const auto& p : r.ci_width) fmt::print("    n={:<5} width {:.4f}\n", p.n, p.width());
  }
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"DualPI2 link emulator and statistical equivalence checks", "l4semu"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "l4semu 0.1.0");

  // emulate
  ScenarioFlags em_flags;
  std::optional<std::uint64_t> em_seed;
  fs::path em_out = "run";
  bool em_force = false;
  auto* emulate = app.add_subcommand("emulate", "Run one emulation");
  em_flags.attach(*emulate);
  emulate->add_option("--seed", em_seed, "RNG seed (default: config seed)");
  emulate->add_option("-o,--out", em_out, "Output run directory");
  emulate->add_flag("--force", em_force, "Overwrite a non-empty output directory");

  // batch
  ScenarioFlags ba_flags;
  std::optional<std::uint32_t> ba_runs;
  std::optional<std::uint64_t> ba_seed_base;
  unsigned ba_jobs = 0;
  fs::path ba_out = "corpus";
  bool ba_force = false;
  auto* batch = app.add_subcommand("batch", "Run a corpus of independent emulations");
  ba_flags.attach(*batch);
  batch->add_option("--runs", ba_runs, "Number of runs (default: config runs)");
  batch->add_option("--seed-base", ba_seed_base, "Seed of the first run (default: config seed)");
  batch->add_option("-j,--jobs", ba_jobs, "Worker threads (0: hardware concurrency)");
  batch->add_option("-o,--out", ba_out, "Output corpus directory");
  batch->add_flag("--force", ba_force, "Overwrite a non-empty output directory");

  // validate / bootstrap
  ValidateOptions va;
  std::vector<std::string> va_metrics{"throughput", "queue_occupancy", "ecn_marks", "drops"};
  std::size_t va_band = 0;
  va.out = "validation";
  auto add_validate = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("corpus_a", va.corpus_a, "First corpus")->required();
    sub->add_option("corpus_b", va.corpus_b, "Second corpus")->required();
    sub->add_option("-m,--metrics", va_metrics, "Metrics to compare")->delimiter(',');
    sub->add_option("--ci-width", va.ci_grid, "Run counts for CI-width curves, e.g. 10,20,50")->delimiter(',');
    sub->add_option("--seed", va.seed, "Bootstrap RNG seed");
    sub->add_option("-j,--jobs", va.jobs, "Threads for distance computation");
    sub->add_option("--band", va_band, "Sakoe-Chiba band half-width in samples (0: none)");
    sub->add_option("--bins", va.bins, "Histogram bins");
    sub->add_option("-o,--out", va.out, "Output report directory");
    sub->add_flag("--force", va.force, "Overwrite a non-empty output directory");
    return sub;
  };
  auto* validate = add_validate("validate", "Exceedance test between two corpora");
  validate->add_option("--bootstrap", va.bootstrap, "Bootstrap replicates (0: off)");
  auto* bootstrap = add_validate("bootstrap", "Exceedance test with percentile bootstrap CIs");
  std::size_t bs_replicates = stat::kDefaultReplicates;
  bootstrap->add_option("-B,--replicates", bs_replicates, "Bootstrap replicates");

  // sweep
  ScenarioFlags sw_flags;
  SweepOptions sw;
  sw.out = "sweep";
  auto* sweep = app.add_subcommand("sweep", "Run one corpus per value of a DualPI2 parameter");
  sw_flags.attach(*sweep);
  sweep->add_option("--param", sw.param, "step_thresh, target, tupdate (ms) or alpha, beta, coupling_k, classic_protection")
      ->required();
  sweep->add_option("--values", sw.values, "Comma-separated values")->delimiter(',')->required();
  sweep->add_option("--runs", sw.runs, "Runs per value");
  sweep->add_option("--seed-base", sw.seed_base, "Seed of the first run of each corpus");
  sweep->add_option("-j,--jobs", sw.jobs, "Worker threads");
  sweep->add_option("--bootstrap", sw.bootstrap, "Replicates for the throughput CI");
  sweep->add_option("-o,--out", sw.out, "Output directory");
  sweep->add_flag("--force", sw.force, "Overwrite a non-empty output directory");

  auto* presets = app.add_subcommand("presets", "List built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (emulate->parsed()) {
      const auto cfg = em_flags.resolve();
      const auto out = resolve_output(em_out);
      const auto r = cmd_emulate(cfg, em_seed.value_or(cfg.seed), out, em_force);
      fmt::print("{}: {} samples, {:.3f} Mbps, {} marks, {} drops\n", out.string(), r.record.series.size(),
                 r.record.avg_throughput_mbps, r.counters.ecn_marks(), r.counters.drops_total);
    } else if (batch->parsed()) {
      const auto cfg = ba_flags.resolve();
      const auto out = resolve_output(ba_out);
      const auto m = cmd_batch(cfg, ba_runs.value_or(cfg.runs), ba_seed_base.value_or(cfg.seed), ba_jobs, out,
                               ba_force);
      fmt::print("{}: {} runs, fingerprint {}\n", out.string(), m.runs.size(), m.fingerprint);
    } else if (validate->parsed() || bootstrap->parsed()) {
      va.metrics = parse_metrics(va_metrics);
      if (va_band > 0) va.band = va_band;
      if (bootstrap->parsed()) va.bootstrap = bs_replicates;
      va.out = resolve_output(va.out);
      print_reports(cmd_validate(va));
      fmt::print("report written to {}\n", va.out.string());
    } else if (sweep->parsed()) {
      const auto cfg = sw_flags.resolve();
      sw.out = resolve_output(sw.out);
      const auto rows = cmd_sweep(cfg, sw);
      fmt::print("{:<12} {:>10} {:>12} {:>21}\n", sw.param, "runs", "mean Mbps", "95% CI");
      for (const auto& row : rows)
        fmt::print("{:<12g} {:>10} {:>12.3f}  [{:>8.3f}, {:>8.3f}]\n", row.value, row.runs, row.mean_mbps,
                   row.ci.lo, row.ci.hi);
    } else if (presets->parsed()) {
      fmt::print("{}", presets_text());
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "l4semu: config error: {}\n", e.what());
    return kConfigError;
  } catch (const UndefinedTestError& e) {
    fmt::print(stderr, "l4semu: {}\n", e.what());
    return kUndefinedTest;
  } catch (const std::exception& e) {
    fmt::print(stderr, "l4semu: error: {}\n", e.what());
    return kRuntimeError;
  }
  return kOk;
}

}  // namespace l4semu::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "l4semu/corpus.hpp"
#include "l4semu/emulator.hpp"
#include "l4semu/scenario.hpp"
#include "l4semu/statcheck.hpp"

namespace l4semu::cli {

namespace fs = std::filesystem;

inline constexpr const char* kOutputRootEnv = "L4SEMU_OUT";

enum ExitCode : int { kOk = 0, kConfigError = 1, kRuntimeError = 2, kUndefinedTest = 3 };

// Config file (optional) plus "key=value" overrides, overrides last.
ScenarioConfig load_scenario(const std::optional<fs::path>& config_file,
                             const std::vector<std::string>& overrides);

// Relative paths are placed under $L4SEMU_OUT when it is set.
fs::path resolve_output(const fs::path& out);

// Creates `dir`. An existing non-empty directory is an error unless `force`,
// in which case it is cleared first.
void prepare_output(const fs::path& dir, bool force);

RunOutput cmd_emulate(const ScenarioConfig& cfg, std::uint64_t seed, const fs::path& out, bool force);

Manifest cmd_batch(const ScenarioConfig& cfg, std::uint32_t runs, std::uint64_t seed_base, unsigned jobs,
                   const fs::path& out, bool force);

struct ValidateOptions {
  fs::path corpus_a;
  fs::path corpus_b;
  std::vector<stat::Metric> metrics;
  std::size_t bootstrap = 0;       // replicates; 0 disables the bootstrap
  std::vector<std::size_t> ci_grid;  // run counts for CI-width curves
  std::uint64_t seed = 1;
  unsigned jobs = 0;
  std::optional<std::size_t> band;
  std::size_t bins = 20;
  fs::path out;
  bool force = false;
};

struct MetricReport {
  stat::TestResult test;
  std::optional<stat::BootstrapResult> bootstrap;
  std::vector<stat::CiWidthPoint> ci_width;
};

// Writes report.csv, result.json, distances.csv, histogram.csv and, when
// requested, ci_width.csv. Both manifests are verified first.
std::vector<MetricReport> cmd_validate(const ValidateOptions& opts);

struct SweepOptions {
  std::string param;
  std::vector<double> values;
  std::uint32_t runs = 10;
  std::uint64_t seed_base = 1;
  unsigned jobs = 0;
  std::size_t bootstrap = stat::kDefaultReplicates;
  fs::path out;
  bool force = false;
};

struct SweepRow {
  double value = 0.0;
  std::string corpus;
  std::size_t runs = 0;
  double mean_mbps = 0.0;
  stat::Interval ci;
};

// One corpus per value in <out>/<param>_<value>, plus summary.csv.
std::vector<SweepRow> cmd_sweep(const ScenarioConfig& base, const SweepOptions& opts);

std::string presets_text();

// Entry point shared by the executable and the tests. Maps exceptions to
// exit codes: ConfigError 1, UndefinedTestError 3, anything else 2.
int run(int argc, const char* const* argv);

}  // namespace l4semu::cli

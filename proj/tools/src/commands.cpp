#include "l4semu_cli/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "l4semu/errors.hpp"

namespace l4semu::cli {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<RunRecord> load_checked(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("corpus " + dir.string() + " does not exist");
  return load_corpus(dir);
}

void require_metric(const std::vector<RunRecord>& runs, stat::Metric m, const fs::path& dir) {
  if (stat::kind_of(m) == stat::MetricKind::Scalar) return;
  for (const auto& r : runs) {
    if (r.series.empty())
      throw std::runtime_error(fmt::format("metric {} missing from {} ({} has no samples)", stat::to_string(m),
                                           dir.string(), r.run_id));
  }
}

nlohmann::ordered_json interval_json(const stat::Interval& i) { return {{"lo", i.lo}, {"hi", i.hi}}; }

}  // namespace

ScenarioConfig load_scenario(const std::optional<fs::path>& config_file,
                             const std::vector<std::string>& overrides) {
  ConfigMap map;
  if (config_file) map = read_config_file(*config_file);
  for (const auto& o : overrides) {
    auto [k, v] = parse_override(o);
    map[k] = v;
  }
  return resolve_config(map);
}

fs::path resolve_output(const fs::path& out) {
  if (out.is_absolute()) return out;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) return fs::path(root) / out;
  return out;
}

void prepare_output(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw ConfigError(dir.string() + " is not empty (use --force to overwrite)");
      fs::remove_all(dir);
    }
  }
  fs::create_directories(dir);
}

RunOutput cmd_emulate(const ScenarioConfig& cfg, std::uint64_t seed, const fs::path& out, bool force) {
  cfg.validate();
  prepare_output(out, force);
  RunOutput result = run_emulation(cfg, seed, out.filename().string());
  write_run_dir(out, result.record, run_metadata(cfg, result));
  return result;
}

Manifest cmd_batch(const ScenarioConfig& cfg, std::uint32_t runs, std::uint64_t seed_base, unsigned jobs,
                   const fs::path& out, bool force) {
  if (runs < 1) throw ConfigError("runs must be >= 1");
  cfg.validate();
  prepare_output(out, force);
  return run_batch(cfg, runs, seed_base, jobs, out);
}

std::vector<MetricReport> cmd_validate(const ValidateOptions& opts) {
  if (opts.metrics.empty()) throw ConfigError("no metrics selected");
  const auto group_a = load_checked(opts.corpus_a);
  const auto group_b = load_checked(opts.corpus_b);
  for (auto m : opts.metrics) {
    require_metric(group_a, m, opts.corpus_a);
    require_metric(group_b, m, opts.corpus_b);
  }
  prepare_output(opts.out, opts.force);

  const stat::DtwOptions dtw{opts.band};
  Rng rng(opts.seed);
  std::vector<MetricReport> reports;
  std::string report_csv = "metric,eps,p,ok,n_a,n_b,ci_lo,ci_hi,significant\n";
  std::string dist_csv = "metric,set,value\n";
  std::string hist_csv = "metric,lo,hi,within_a,within_b,cross\n";
  std::string width_csv = "metric,n,lo,hi,width\n";
  nlohmann::ordered_json doc;
  doc["corpus_a"] = opts.corpus_a.string();
  doc["corpus_b"] = opts.corpus_b.string();
  auto& results = doc["metrics"] = nlohmann::ordered_json::array();

  for (auto m : opts.metrics) {
    const std::string name(stat::to_string(m));
    const auto oa = stat::extract(group_a, m);
    const auto ob = stat::extract(group_b, m);
    const stat::DistanceMatrices dm(oa, ob, stat::kind_of(m), dtw, opts.jobs);
    const auto sets = dm.sets();

    MetricReport rep;
    rep.test = stat::exceedance_test(sets, name);
    if (opts.bootstrap > 0) rep.bootstrap = stat::bootstrap_ci(dm, opts.bootstrap, rng);
    if (!opts.ci_grid.empty()) {
      const auto b = opts.bootstrap > 0 ? opts.bootstrap : stat::kDefaultReplicates;
      rep.ci_width = stat::ci_width_curve(dm, opts.ci_grid, b, rng);
    }

    const auto& t = rep.test;
    if (rep.bootstrap) {
      report_csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", name, t.eps_max, t.p_hat_max, t.reject_h0 ? 1 : 0,
                                t.size_m, t.size_k, rep.bootstrap->ci.lo, rep.bootstrap->ci.hi,
                                rep.bootstrap->significant ? 1 : 0);
    } else {
      report_csv += fmt::format("{},{},{},{},{},{},,,\n", name, t.eps_max, t.p_hat_max, t.reject_h0 ? 1 : 0,
                                t.size_m, t.size_k);
    }
    for (double d : sets.within_m) dist_csv += fmt::format("{},within_a,{}\n", name, d);
    for (double d : sets.within_k) dist_csv += fmt::format("{},within_b,{}\n", name, d);
    for (double d : sets.cross) dist_csv += fmt::format("{},cross,{}\n", name, d);
    for (const auto& b : stat::histogram(sets, opts.bins))
      hist_csv += fmt::format("{},{},{},{},{},{}\n", name, b.lo, b.hi, b.within_m, b.within_k, b.cross);
    for (const auto& p : rep.ci_width)
      width_csv += fmt::format("{},{},{},{},{}\n", name, p.n, p.ci.lo, p.ci.hi, p.width());

    nlohmann::ordered_json r;
    r["metric"] = name;
    r["eps_max"] = t.eps_max;
    r["p_hat_max"] = t.p_hat_max;
    r["reject_h0"] = t.reject_h0;
    r["n_a"] = t.size_m;
    r["n_b"] = t.size_k;
    if (rep.bootstrap) {
      const auto& b = *rep.bootstrap;
      r["bootstrap"] = {{"replicates", b.replicate_count()},
                        {"lo_index", b.lo_index},
                        {"hi_index", b.hi_index},
                        {"ci", interval_json(b.ci)},
                        {"significant", b.significant}};
    }
    if (!rep.ci_width.empty()) {
      auto& cw = r["ci_width"] = nlohmann::ordered_json::array();
      for (const auto& p : rep.ci_width) cw.push_back({{"n", p.n}, {"ci", interval_json(p.ci)}, {"width", p.width()}});
    }
    results.push_back(std::move(r));
    reports.push_back(std::move(rep));
  }

  write_text(opts.out / "report.csv", report_csv);
  write_text(opts.out / "distances.csv", dist_csv);
  write_text(opts.out / "histogram.csv", hist_csv);
  if (!opts.ci_grid.empty()) write_text(opts.out / "ci_width.csv", width_csv);
  write_text(opts.out / "result.json", doc.dump(2) + "\n");
  return reports;
}

std::vector<SweepRow> cmd_sweep(const ScenarioConfig& base, const SweepOptions& opts) {
  if (opts.values.empty()) throw ConfigError("sweep: empty value list");
  if (opts.runs < 1) throw ConfigError("runs must be >= 1");
  {
    ScenarioConfig probe = base;
    for (double v : opts.values) apply_sweep_param(probe, opts.param, v);  // validate before running
  }
  prepare_output(opts.out, opts.force);

  Rng rng(opts.seed_base);
  std::vector<SweepRow> rows;
  std::string csv = "param,value,corpus,runs,mean_mbps,ci_lo,ci_hi\n";
  for (double v : opts.values) {
    ScenarioConfig cfg = base;
    apply_sweep_param(cfg, opts.param, v);
    SweepRow row;
    row.value = v;
    row.corpus = fmt::format("{}_{}", opts.param, v);
    run_batch(cfg, opts.runs, opts.seed_base, opts.jobs, opts.out / row.corpus);

    std::vector<double> tput;
    for (const auto& r : load_corpus(opts.out / row.corpus)) tput.push_back(r.avg_throughput_mbps);
    row.runs = tput.size();
    row.mean_mbps = std::accumulate(tput.begin(), tput.end(), 0.0) / static_cast<double>(tput.size());
    row.ci = opts.bootstrap >= 2 ? stat::bootstrap_mean_ci(tput, opts.bootstrap, rng)
                                 : stat::Interval{row.mean_mbps, row.mean_mbps};
    csv += fmt::format("{},{},{},{},{},{},{}\n", opts.param, v, row.corpus, row.runs, row.mean_mbps, row.ci.lo,
                       row.ci.hi);
    rows.push_back(std::move(row));
  }
  write_text(opts.out / "summary.csv", csv);
  return rows;
}

std::string presets_text() {
  std::string s = "BDP regimes:\n";
  for (const auto& p : kBdpPresets)
    s += fmt::format("  {:<7} {:>4} Mbps  RTT {:>3} ms  limit {} B\n", p.name, p.rate_bps / 1'000'000,
                     std::chrono::duration_cast<std::chrono::milliseconds>(p.rtt).count(),
                     AqmConfig::limit_for_rate(p.rate_bps));
  s += "Parameter sets:\n";
  for (const auto& p : kParamPresets)
    s += fmt::format("  {:<8} {:<7} step_thresh {:>2} ms  target {:>2} ms\n", p.name, p.regime,
                     std::chrono::duration_cast<std::chrono::milliseconds>(p.step_thresh).count(),
                     std::chrono::duration_cast<std::chrono::milliseconds>(p.target).count());
  const AqmConfig d;
  s += fmt::format("Fixed: tupdate {} ms, alpha {}, beta {}, coupling_k {}, classic_protection {}\n",
                   std::chrono::duration_cast<std::chrono::milliseconds>(d.tupdate).count(), d.alpha, d.beta,
                   d.coupling_k, d.classic_protection);
  s += "Traffic patterns: l4s, classic, dual\n";
  return s;
}

}  // namespace l4semu::cli

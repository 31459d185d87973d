#include "l4semu/statcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "l4semu/errors.hpp"
#include "l4semu/parallel.hpp"

namespace l4semu::stat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Cell {
  double cost = kInf;
  std::uint32_t len = 0;
};

// Lexicographic (cost, path length): cheapest first, then shortest.
inline bool better(const Cell& a, const Cell& b) {
  return a.cost < b.cost || (a.cost == b.cost && a.len < b.len);
}

// Column window of each row under the optional band. Consecutive windows
// always overlap or touch diagonally so a path exists.
std::vector<std::pair<std::size_t, std::size_t>> band_windows(std::size_t n, std::size_t m,
                                                              std::optional<std::size_t> band) {
  std::vector<std::pair<std::size_t, std::size_t>> w(n, {0, m - 1});
  if (!band) return w;
  const double slope = n > 1 ? static_cast<double>(m - 1) / static_cast<double>(n - 1) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = slope * static_cast<double>(i);
    const auto lo = static_cast<std::int64_t>(std::floor(c)) - static_cast<std::int64_t>(*band);
    const auto hi = static_cast<std::int64_t>(std::ceil(c)) + static_cast<std::int64_t>(*band);
    w[i].first = static_cast<std::size_t>(std::max<std::int64_t>(lo, 0));
    w[i].second = static_cast<std::size_t>(std::min<std::int64_t>(hi, static_cast<std::int64_t>(m - 1)));
  }
  w.front().first = 0;
  w.back().second = m - 1;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (w[i + 1].first > w[i].second + 1) w[i].second = w[i + 1].first - 1;
  }
  return w;
}

}  // namespace

DtwResult dtw(std::span<const double> x, std::span<const double> y, const DtwOptions& opts) {
  if (x.empty() || y.empty()) throw std::invalid_argument("dtw: empty series");
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  const auto windows = band_windows(n, m, opts.band);

  std::vector<Cell> prev(m), cur(m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = windows[i];
    std::fill(cur.begin(), cur.end(), Cell{});
    for (std::size_t j = lo; j <= hi; ++j) {
      Cell best;
      if (i == 0 && j == 0) {
        best = {0.0, 0};
      } else {
        if (i > 0 && j > 0) best = prev[j - 1];
        if (i > 0 && better(prev[j], best)) best = prev[j];
        if (j > 0 && better(cur[j - 1], best)) best = cur[j - 1];
      }
      cur[j] = {best.cost + std::abs(x[i] - y[j]), best.len + 1};
    }
    std::swap(prev, cur);
  }
  const Cell& end = prev[m - 1];
  return {end.cost, end.len};
}

double quantile(std::span<const double> data, double q) {
  if (data.empty()) throw std::invalid_argument("quantile: empty data");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
  std::vector<double> v(data.begin(), data.end());
  const double pos = static_cast<double>(v.size() - 1) * q;
  const auto below = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(below);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(below), v.end());
  const double lo = v[below];
  if (frac == 0.0 || below + 1 >= v.size()) return lo;
  const double hi = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(below) + 1, v.end());
  return lo + frac * (hi - lo);
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Throughput: return "throughput";
    case Metric::QueueOccupancy: return "queue_occupancy";
    case Metric::QueueBytes: return "queue_bytes";
    case Metric::EcnMarks: return "ecn_marks";
    case Metric::Drops: return "drops";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  if (name == "throughput") return Metric::Throughput;
  if (name == "queue_occupancy" || name == "packets") return Metric::QueueOccupancy;
  if (name == "queue_bytes") return Metric::QueueBytes;
  if (name == "ecn_marks" || name == "ecn_mark") return Metric::EcnMarks;
  if (name == "drops" || name == "packet_dropped_total") return Metric::Drops;
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

MetricKind kind_of(Metric m) {
  return m == Metric::Throughput ? MetricKind::Scalar : MetricKind::TimeSeries;
}

Observation extract(const RunRecord& run, Metric m) {
  Observation o;
  if (m == Metric::Throughput) {
    o.scalar = run.avg_throughput_mbps;
    return o;
  }
  o.series.reserve(run.series.size());
  for (const auto& s : run.series) {
    std::uint64_t v = 0;
    switch (m) {
      case Metric::QueueOccupancy: v = s.queue_packets; break;
      case Metric::QueueBytes: v = s.queue_bytes; break;
      case Metric::EcnMarks: v = s.ecn_marks; break;
      case Metric::Drops: v = s.drops; break;
      case Metric::Throughput: break;
    }
    o.series.push_back(static_cast<double>(v));
  }
  return o;
}

std::vector<Observation> extract(std::span<const RunRecord> runs, Metric m) {
  std::vector<Observation> out;
  out.reserve(runs.size());
  for (const auto& r : runs) out.push_back(extract(r, m));
  return out;
}

double distance(const Observation& a, const Observation& b, MetricKind kind, const DtwOptions& opts) {
  if (kind == MetricKind::Scalar) return scalar_distance(a.scalar, b.scalar);
  return dtw_norm(a.series, b.series, opts);
}

DistanceMatrices::DistanceMatrices(std::span<const Observation> group_m,
                                   std::span<const Observation> group_k, MetricKind kind,
                                   const DtwOptions& opts, unsigned threads)
    : n_m_(group_m.size()), n_k_(group_k.size()) {
  if (group_m.empty() || group_k.empty()) throw std::invalid_argument("distances: empty group");
  wm_.assign(n_m_ * n_m_, 0.0);
  wk_.assign(n_k_ * n_k_, 0.0);
  cross_.assign(n_m_ * n_k_, 0.0);

  // Enumerate every distinct pair once; each task writes its own slots.
  struct Job {
    int which;  // 0 within M, 1 within K, 2 cross
    std::size_t i, j;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < n_m_; ++i)
    for (std::size_t j = i + 1; j < n_m_; ++j) jobs.push_back({0, i, j});
  for (std::size_t i = 0; i < n_k_; ++i)
    for (std::size_t j = i + 1; j < n_k_; ++j) jobs.push_back({1, i, j});
  for (std::size_t i = 0; i < n_m_; ++i)
    for (std::size_t j = 0; j < n_k_; ++j) jobs.push_back({2, i, j});

  parallel_for(jobs.size(), threads, [&](std::size_t t) {
    const Job& job = jobs[t];
    switch (job.which) {
      case 0: {
        const double d = distance(group_m[job.i], group_m[job.j], kind, opts);
        wm_[job.i * n_m_ + job.j] = wm_[job.j * n_m_ + job.i] = d;
        break;
      }
      case 1: {
        const double d = distance(group_k[job.i], group_k[job.j], kind, opts);
        wk_[job.i * n_k_ + job.j] = wk_[job.j * n_k_ + job.i] = d;
        break;
      }
      default:
        cross_[job.i * n_k_ + job.j] = distance(group_m[job.i], group_k[job.j], kind, opts);
    }
  });
}

DistanceSets DistanceMatrices::sets() const {
  std::vector<std::size_t> im(n_m_), ik(n_k_);
  for (std::size_t i = 0; i < n_m_; ++i) im[i] = i;
  for (std::size_t i = 0; i < n_k_; ++i) ik[i] = i;
  return resampled(im, ik);
}

DistanceSets DistanceMatrices::resampled(std::span<const std::size_t> idx_m,
                                         std::span<const std::size_t> idx_k) const {
  DistanceSets ds;
  ds.within_m.reserve(idx_m.size() * (idx_m.size() - 1) / 2);
  ds.within_k.reserve(idx_k.size() * (idx_k.size() - 1) / 2);
  ds.cross.reserve(idx_m.size() * idx_k.size());
  for (std::size_t a = 0; a < idx_m.size(); ++a)
    for (std::size_t b = a + 1; b < idx_m.size(); ++b) ds.within_m.push_back(within_m(idx_m[a], idx_m[b]));
  for (std::size_t a = 0; a < idx_k.size(); ++a)
    for (std::size_t b = a + 1; b < idx_k.size(); ++b) ds.within_k.push_back(within_k(idx_k[a], idx_k[b]));
  for (auto i : idx_m)
    for (auto j : idx_k) ds.cross.push_back(cross(i, j));
  return ds;
}

DistanceMatrices DistanceMatrices::prefix(std::size_t n_m, std::size_t n_k) const {
  if (n_m == 0 || n_k == 0 || n_m > n_m_ || n_k > n_k_)
    throw std::invalid_argument("distances: prefix exceeds available runs");
  DistanceMatrices out(n_m, n_k);
  out.wm_.resize(n_m * n_m);
  out.wk_.resize(n_k * n_k);
  out.cross_.resize(n_m * n_k);
  for (std::size_t i = 0; i < n_m; ++i)
    for (std::size_t j = 0; j < n_m; ++j) out.wm_[i * n_m + j] = within_m(i, j);
  for (std::size_t i = 0; i < n_k; ++i)
    for (std::size_t j = 0; j < n_k; ++j) out.wk_[i * n_k + j] = within_k(i, j);
  for (std::size_t i = 0; i < n_m; ++i)
    for (std::size_t j = 0; j < n_k; ++j) out.cross_[i * n_k + j] = cross(i, j);
  return out;
}

DistanceSets build_distances(std::span<const RunRecord> group_m, std::span<const RunRecord> group_k,
                             Metric metric, const DtwOptions& opts) {
  const auto om = extract(group_m, metric);
  const auto ok = extract(group_k, metric);
  return DistanceMatrices(om, ok, kind_of(metric), opts).sets();
}

TestResult exceedance_test(const DistanceSets& ds, std::string metric) {
  if (ds.within_m.empty() || ds.within_k.empty())
    throw UndefinedTestError("exceedance test undefined: a group has fewer than two runs");
  if (ds.cross.empty()) throw UndefinedTestError("exceedance test undefined: no cross distances");
  TestResult r;
  r.metric = std::move(metric);
  r.eps_max = std::max(quantile(ds.within_m, kWithinQuantile), quantile(ds.within_k, kWithinQuantile));
  const auto exceed = std::count_if(ds.cross.begin(), ds.cross.end(), [&](double d) { return d > r.eps_max; });
  r.p_hat_max = static_cast<double>(exceed) / static_cast<double>(ds.cross.size());
  r.reject_h0 = r.p_hat_max < kExceedanceTolerance;
  // Recover group sizes from the within-set sizes n(n-1)/2.
  auto n_from_pairs = [](std::size_t pairs) {
    return static_cast<std::size_t>(std::llround((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(pairs))) / 2.0));
  };
  r.size_m = n_from_pairs(ds.within_m.size());
  r.size_k = n_from_pairs(ds.within_k.size());
  return r;
}

std::pair<std::size_t, std::size_t> percentile_indices(std::size_t replicates) {
  if (replicates == 0) throw std::invalid_argument("percentile_indices: no replicates");
  const std::size_t lo = replicates * 25 / 1000;
  const std::size_t hi = std::min(replicates * 975 / 1000, replicates - 1);
  return {lo, hi};
}

BootstrapResult bootstrap_ci(const DistanceMatrices& dm, std::size_t replicates, Rng& rng) {
  if (replicates < 2) throw std::invalid_argument("bootstrap: need at least 2 replicates");
  if (dm.size_m() < 2 || dm.size_k() < 2)
    throw UndefinedTestError("bootstrap undefined: a group has fewer than two runs");

  BootstrapResult out;
  out.replicates.reserve(replicates);
  std::vector<std::size_t> im(dm.size_m()), ik(dm.size_k());
  for (std::size_t b = 0; b < replicates; ++b) {
    // Draw order per replicate: all M indices, then all K indices.
    for (auto& i : im) i = rng.index(dm.size_m());
    for (auto& i : ik) i = rng.index(dm.size_k());
    out.replicates.push_back(exceedance_test(dm.resampled(im, ik)).p_hat_max);
  }

  std::vector<double> sorted = out.replicates;
  std::sort(sorted.begin(), sorted.end());
  std::tie(out.lo_index, out.hi_index) = percentile_indices(replicates);
  out.ci = {sorted[out.lo_index], sorted[out.hi_index]};
  out.significant = out.ci.hi < kExceedanceTolerance;
  return out;
}

BootstrapResult bootstrap_ci(std::span<const RunRecord> group_m, std::span<const RunRecord> group_k,
                             Metric metric, std::size_t replicates, Rng& rng, const DtwOptions& opts) {
  const auto om = extract(group_m, metric);
  const auto ok = extract(group_k, metric);
  return bootstrap_ci(DistanceMatrices(om, ok, kind_of(metric), opts), replicates, rng);
}

Interval bootstrap_mean_ci(std::span<const double> values, std::size_t replicates, Rng& rng) {
  if (values.empty()) throw std::invalid_argument("bootstrap_mean_ci: no values");
  if (replicates < 2) throw std::invalid_argument("bootstrap: need at least 2 replicates");
  std::vector<double> means;
  means.reserve(replicates);
  for (std::size_t b = 0; b < replicates; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += values[rng.index(values.size())];
    means.push_back(sum / static_cast<double>(values.size()));
  }
  std::sort(means.begin(), means.end());
  const auto [lo, hi] = percentile_indices(replicates);
  return {means[lo], means[hi]};
}

std::vector<CiWidthPoint> ci_width_curve(const DistanceMatrices& dm, std::span<const std::size_t> n_grid,
                                         std::size_t replicates, Rng& rng) {
  std::vector<CiWidthPoint> out;
  for (auto n : n_grid) {
    if (n > dm.size_m() || n > dm.size_k())
      throw std::invalid_argument("ci_width_curve: n = " + std::to_string(n) + " exceeds available runs");
    if (n < 2) throw UndefinedTestError("ci_width_curve: n < 2 leaves the within sets empty");
    out.push_back({n, bootstrap_ci(dm.prefix(n, n), replicates, rng).ci});
  }
  return out;
}

std::vector<HistogramBin> histogram(const DistanceSets& ds, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("histogram: need at least one bin");
  double top = 0.0;
  for (const auto* set : {&ds.within_m, &ds.within_k, &ds.cross})
    for (double d : *set) top = std::max(top, d);
  if (top == 0.0) bins = 1;
  const double width = top / static_cast<double>(bins);

  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = width * static_cast<double>(b);
    out[b].hi = b + 1 == bins ? top : width * static_cast<double>(b + 1);
  }
  auto bin_of = [&](double d) {
    if (width == 0.0) return std::size_t{0};
    return std::min(static_cast<std::size_t>(d / width), bins - 1);
  };
  for (double d : ds.within_m) ++out[bin_of(d)].within_m;
  for (double d : ds.within_k) ++out[bin_of(d)].within_k;
  for (double d : ds.cross) ++out[bin_of(d)].cross;
  return out;
}

}  // namespace l4semu::stat

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "l4semu/metrics.hpp"
#include "l4semu/rng.hpp"

namespace l4semu::stat {

// Result of aligning two series: total |x_i - y_j| along the chosen warping
// path and the number of aligned pairs on it.
struct DtwResult {
  double raw = 0.0;
  std::size_t path_length = 0;

  double normalized() const { return raw / static_cast<double>(path_length); }
};

struct DtwOptions {
  // Sakoe-Chiba band half-width in samples, measured on the diagonal
  // rescaled to the two lengths. Unset means unconstrained.
  std::optional<std::size_t> band;
};

// Dynamic time warping with cost |x_i - y_j| and steps (1,0), (0,1), (1,1).
// Among all minimum-cost paths the shortest one defines path_length, which
// keeps the normalized value symmetric in its arguments.
// Throws std::invalid_argument for an empty input.
DtwResult dtw(std::span<const double> x, std::span<const double> y, const DtwOptions& opts = {});

inline double dtw_norm(std::span<const double> x, std::span<const double> y,
                       const DtwOptions& opts = {}) {
  return dtw(x, y, opts).normalized();
}

inline double scalar_distance(double x, double y) { return x < y ? y - x : x - y; }

// Linear interpolation between order statistics at position (n-1)*q.
// Throws std::invalid_argument for empty data or q outside [0, 1].
double quantile(std::span<const double> data, double q);

enum class MetricKind : std::uint8_t { Scalar, TimeSeries };

enum class Metric : std::uint8_t { Throughput, QueueOccupancy, QueueBytes, EcnMarks, Drops };

std::string_view to_string(Metric m);
// Accepts the names above plus the aliases "packets", "ecn_mark" and
// "packet_dropped_total". Throws ConfigError for anything else.
Metric parse_metric(std::string_view name);
MetricKind kind_of(Metric m);

// Observation of one metric in one run: a scalar or a time series.
struct Observation {
  double scalar = 0.0;
  std::vector<double> series;
};

Observation extract(const RunRecord& run, Metric m);
std::vector<Observation> extract(std::span<const RunRecord> runs, Metric m);

double distance(const Observation& a, const Observation& b, MetricKind kind,
                const DtwOptions& opts = {});

struct DistanceSets {
  std::vector<double> within_m;  // d(M_i, M_j), i < j
  std::vector<double> within_k;  // d(K_i, K_j), i < j
  std::vector<double> cross;     // d(M_i, K_j) for every pair, row-major over M
};

// All pairwise distances needed by the exceedance test. Distances are
// computed once, so resampling can reuse them.
class DistanceMatrices {
 public:
  // `threads` > 1 computes pairs concurrently; the result does not depend on
  // the thread count.
  DistanceMatrices(std::span<const Observation> group_m, std::span<const Observation> group_k,
                   MetricKind kind, const DtwOptions& opts = {}, unsigned threads = 1);

  std::size_t size_m() const { return n_m_; }
  std::size_t size_k() const { return n_k_; }

  double within_m(std::size_t i, std::size_t j) const { return wm_[i * n_m_ + j]; }
  double within_k(std::size_t i, std::size_t j) const { return wk_[i * n_k_ + j]; }
  double cross(std::size_t i, std::size_t j) const { return cross_[i * n_k_ + j]; }

  DistanceSets sets() const;

  // Distance sets of a resample: entries are indices into the original
  // groups, with repetition allowed.
  DistanceSets resampled(std::span<const std::size_t> idx_m, std::span<const std::size_t> idx_k) const;

  // Matrices restricted to the first n_m and n_k runs.
  DistanceMatrices prefix(std::size_t n_m, std::size_t n_k) const;

 private:
  DistanceMatrices(std::size_t n_m, std::size_t n_k) : n_m_(n_m), n_k_(n_k) {}

  std::size_t n_m_;
  std::size_t n_k_;
  std::vector<double> wm_;
  std::vector<double> wk_;
  std::vector<double> cross_;
};

DistanceSets build_distances(std::span<const RunRecord> group_m, std::span<const RunRecord> group_k,
                             Metric metric, const DtwOptions& opts = {});

inline constexpr double kExceedanceTolerance = 0.05;
inline constexpr double kWithinQuantile = 0.95;

struct TestResult {
  std::string metric;
  double eps_max = 0.0;
  double p_hat_max = 0.0;
  bool reject_h0 = false;  // true: practical similarity (p_hat_max < 0.05)
  std::size_t size_m = 0;
  std::size_t size_k = 0;
};

// eps_max = max of the two within-group 0.95 quantiles; p_hat_max is the
// fraction of cross distances strictly greater than eps_max.
// Throws UndefinedTestError when a within set is empty.
TestResult exceedance_test(const DistanceSets& ds, std::string metric = {});

inline constexpr std::size_t kDefaultReplicates = 2000;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

struct BootstrapResult {
  std::vector<double> replicates;  // in replicate order
  Interval ci;
  std::size_t lo_index = 0;  // order statistics used for the CI
  std::size_t hi_index = 0;
  bool significant = false;  // ci.hi < 0.05

  std::size_t replicate_count() const { return replicates.size(); }
};

// Zero-based order statistics for the 2.5% and 97.5% endpoints of B sorted
// replicates: floor(0.025*B) and floor(0.975*B), clamped to B-1.
// B = 2000 gives 50 and 1950.
std::pair<std::size_t, std::size_t> percentile_indices(std::size_t replicates);

// Run-level percentile bootstrap of p_hat_max. Each replicate resamples both
// groups with replacement, preserving sizes, and recomputes eps_max and
// p_hat_max from the precomputed matrices. Throws std::invalid_argument for
// B < 2 and UndefinedTestError for a group of size 1.
BootstrapResult bootstrap_ci(const DistanceMatrices& dm, std::size_t replicates, Rng& rng);

BootstrapResult bootstrap_ci(std::span<const RunRecord> group_m, std::span<const RunRecord> group_k,
                             Metric metric, std::size_t replicates, Rng& rng,
                             const DtwOptions& opts = {});

// True iff the optimized interval lies entirely and strictly below the
// default one.
constexpr bool improvement_check(const Interval& default_ci, const Interval& optimized_ci) {
  return optimized_ci.hi < default_ci.lo;
}

// Percentile bootstrap interval of the mean of `values`, same endpoints as
// bootstrap_ci. Throws std::invalid_argument for empty input or B < 2.
Interval bootstrap_mean_ci(std::span<const double> values, std::size_t replicates, Rng& rng);

struct CiWidthPoint {
  std::size_t n = 0;
  Interval ci;
  double width() const { return ci.width(); }
};

// Bootstrap on the first n runs of each group for every n in the grid. All
// grid points draw from the same rng in grid order. Throws
// std::invalid_argument when n exceeds a group, and UndefinedTestError for n < 2.
std::vector<CiWidthPoint> ci_width_curve(const DistanceMatrices& dm,
                                         std::span<const std::size_t> n_grid,
                                         std::size_t replicates, Rng& rng);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t within_m = 0;
  std::size_t within_k = 0;
  std::size_t cross = 0;
};

// Shared equal-width bins over all three sets, for plotting.
std::vector<HistogramBin> histogram(const DistanceSets& ds, std::size_t bins);

}  // namespace l4semu::stat

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l4semu/aqm.hpp"
#include "l4semu/sim_time.hpp"
#include "l4semu/traffic.hpp"

namespace l4semu {

// One observation of the AQM per tupdate. Counts are deltas over the
// interval that ends at t.
struct TraceSample {
  SimTime t{};
  std::uint64_t queue_packets = 0;
  std::uint64_t queue_bytes = 0;
  std::uint64_t ecn_marks = 0;
  std::uint64_t drops = 0;

  bool operator==(const TraceSample&) const = default;
};

// Turns cumulative AQM counters into per-interval samples.
class Sampler {
 public:
  TraceSample sample(const DualPi2& aqm, SimTime now);

 private:
  std::uint64_t marks_seen_ = 0;
  std::uint64_t drops_seen_ = 0;
};

struct FlowSummary {
  FlowId id = 0;
  FlowKind kind = FlowKind::Scalable;
  std::uint64_t bytes = 0;
  double mbps = 0.0;
};

struct RunRecord {
  std::string run_id;
  std::string fingerprint;
  std::uint64_t seed = 0;
  Duration duration = 0ns;
  double avg_throughput_mbps = 0.0;  // sum of per-flow throughputs
  std::vector<FlowSummary> flows;
  std::vector<TraceSample> series;
};

struct FlowBytes {
  FlowId id;
  FlowKind kind;
  std::uint64_t bytes;
};

// Throughput is received bytes * 8 / duration per flow; the run value is
// their sum. Throws ConfigError for a non-positive duration or no flows.
RunRecord summarize(std::string run_id, std::string fingerprint, std::uint64_t seed,
                    Duration duration, const std::vector<FlowBytes>& flows,
                    std::vector<TraceSample> series);

double mbps(std::uint64_t bytes, Duration duration);

// Run directory layout:
//   meta.json   config, seed, fingerprint, summary
//   series.csv  t_ns,qocc_pkts,qocc_bytes,ecn_marks,drops
//   flows.csv   flow_id,kind,bytes,mbps
inline constexpr const char* kMetaFile = "meta.json";
inline constexpr const char* kSeriesFile = "series.csv";
inline constexpr const char* kFlowsFile = "flows.csv";

// `meta` is merged into meta.json next to the summary block.
void write_run_dir(const std::filesystem::path& dir, const RunRecord& record,
                   const nlohmann::ordered_json& meta);

RunRecord read_run_dir(const std::filesystem::path& dir);

std::string format_series_csv(const std::vector<TraceSample>& series);
std::string format_flows_csv(const std::vector<FlowSummary>& flows);

}  // namespace l4semu

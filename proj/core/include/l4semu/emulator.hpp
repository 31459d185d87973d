#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "l4semu/aqm.hpp"
#include "l4semu/metrics.hpp"
#include "l4semu/scenario.hpp"

namespace l4semu {

// Hooks into a running emulation, mostly for tests.
struct RunObserver {
  // Called for each packet the bottleneck transmits, at transmission time.
  std::function<void(const Packet&, SimTime)> on_transmit;
  // Called after every processed event.
  std::function<void(const DualPi2&, SimTime)> on_event;
};

struct FlowStats {
  FlowId id = 0;
  FlowKind kind = FlowKind::Scalable;
  std::uint64_t received_bytes = 0;
  std::uint64_t received_packets = 0;
  std::uint64_t ce_received = 0;
  std::uint64_t congestion_events = 0;
  std::uint64_t rounds = 0;
};

struct RunOutput {
  RunRecord record;
  AqmCounters counters;
  std::uint64_t residual_packets = 0;  // still queued at the end
  std::vector<FlowStats> flows;
  std::uint64_t events = 0;
};

// Runs one scenario to completion.
//
// Topology: senders -> DualPI2 bottleneck -> forward delay -> receivers ->
// reverse delay -> senders. Events at one instant are ordered link service,
// AQM update, packet arrival, ACK processing, then by scheduling order.
// Metrics are sampled at every AQM update, so a 30 s run with a 16 ms
// tupdate yields 1875 samples. Events at the end instant after the final
// update are not processed, and a run that is not a whole number of update
// periods closes with one partial-interval sample, so per-interval counts
// always sum to the final counters.
RunOutput run_emulation(const ScenarioConfig& cfg, std::uint64_t seed, std::string run_id = "run",
                        const RunObserver* observer = nullptr);

// meta.json body for a finished run.
nlohmann::ordered_json run_metadata(const ScenarioConfig& cfg, const RunOutput& out);

}  // namespace l4semu

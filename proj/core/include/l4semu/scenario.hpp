#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "l4semu/aqm.hpp"
#include "l4semu/link.hpp"
#include "l4semu/traffic.hpp"

namespace l4semu {

struct LinkConfig {
  std::uint64_t rate_bps = 12'000'000;
  LinkMode mode = LinkMode::Bursty;
  std::optional<std::filesystem::path> trace_file;
};

struct FlowConfig {
  FlowKind kind = FlowKind::Scalable;
  Duration start_time = 0ns;
  std::optional<Duration> duration;  // unset: until the end of the run
};

struct ScenarioConfig {
  std::string preset;  // informational once resolved
  std::string params = "default";
  LinkConfig link;
  Duration one_way_delay = 10ms;  // applied in each direction
  AqmConfig aqm;
  std::vector<FlowConfig> flows;
  Duration duration = 30s;
  std::uint64_t seed = 1;
  std::uint32_t runs = 1;

  // Throws ConfigError.
  void validate() const;

  // Canonical form used for meta.json and the fingerprint. The seed and run
  // count are excluded so every run of a corpus shares one fingerprint.
  nlohmann::ordered_json to_json() const;
  std::string fingerprint() const;
};

// Bandwidth-delay regime.
struct BdpPreset {
  std::string_view name;
  std::uint64_t rate_bps;
  Duration rtt;
};

inline constexpr BdpPreset kBdpPresets[] = {
    {"low", 12'000'000, 20ms},
    {"medium", 50'000'000, 40ms},
    {"high", 200'000'000, 100ms},
};

// DualPI2 parameter set for a regime. "default" is the stock parameter set;
// "refined" raises step_thresh and target for the emulated link.
struct ParamPreset {
  std::string_view name;
  std::string_view regime;
  Duration step_thresh;
  Duration target;
};

inline constexpr ParamPreset kParamPresets[] = {
    {"default", "low", 1ms, 15ms},     {"default", "medium", 1ms, 15ms},
    {"default", "high", 1ms, 15ms},    {"refined", "low", 5ms, 30ms},
    {"refined", "medium", 5ms, 30ms},  {"refined", "high", 10ms, 45ms},
};

const BdpPreset& find_bdp_preset(std::string_view name);
const ParamPreset& find_param_preset(std::string_view params, std::string_view regime);

// Traffic patterns: "l4s" (one scalable flow), "classic" (one Cubic flow),
// "dual" (one of each).
std::vector<FlowConfig> traffic_pattern(std::string_view name);

// Flat "section.key" -> value view of a config file plus overrides.
using ConfigMap = std::map<std::string, std::string>;

// Reads an INI file: `[section]` headers, `key = value` lines, `;` comments.
// Keys before the first section are top-level. Throws ConfigError.
ConfigMap read_config_file(const std::filesystem::path& path);

// Parses "section.key=value". Throws ConfigError.
std::pair<std::string, std::string> parse_override(std::string_view text);

// Resolves a ConfigMap: preset defaults first, then explicit keys. Unknown
// keys are rejected. Throws ConfigError.
ScenarioConfig resolve_config(const ConfigMap& map);

// Sweepable parameters.
inline constexpr std::string_view kSweepParams[] = {
    "step_thresh", "target", "alpha", "beta", "coupling_k", "classic_protection", "tupdate"};

// Sets a sweep parameter. Durations are in milliseconds. Throws ConfigError.
void apply_sweep_param(ScenarioConfig& cfg, std::string_view param, double value);

}  // namespace l4semu

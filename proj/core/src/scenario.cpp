#include "l4semu/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "l4semu/corpus.hpp"
#include "l4semu/errors.hpp"

namespace l4semu {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

Duration parse_ms(const std::string& key, const std::string& value) {
  return from_millis(parse_double(key, value));
}

Duration parse_s(const std::string& key, const std::string& value) {
  return from_seconds(parse_double(key, value));
}

}  // namespace

// ---------------------------------------------------------------------------
// Presets

const BdpPreset& find_bdp_preset(std::string_view name) {
  for (const auto& p : kBdpPresets)
    if (p.name == name) return p;
  throw ConfigError("unknown preset '" + std::string(name) + "' (low|medium|high)");
}

const ParamPreset& find_param_preset(std::string_view params, std::string_view regime) {
  for (const auto& p : kParamPresets)
    if (p.name == params && p.regime == regime) return p;
  throw ConfigError("unknown parameter set '" + std::string(params) + "' for regime '" +
                    std::string(regime) + "' (default|refined)");
}

std::vector<FlowConfig> traffic_pattern(std::string_view name) {
  if (name == "l4s") return {{FlowKind::Scalable, 0ns, std::nullopt}};
  if (name == "classic") return {{FlowKind::Cubic, 0ns, std::nullopt}};
  if (name == "dual")
    return {{FlowKind::Scalable, 0ns, std::nullopt}, {FlowKind::Cubic, 0ns, std::nullopt}};
  throw ConfigError("unknown traffic pattern '" + std::string(name) + "' (l4s|classic|dual)");
}

// ---------------------------------------------------------------------------
// ScenarioConfig

void ScenarioConfig::validate() const {
  if (duration <= 0ns) throw ConfigError("duration must be positive");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (link.rate_bps == 0) throw ConfigError("link: rate must be positive");
  if (one_way_delay < 0ns) throw ConfigError("delay: one-way delay must be >= 0");
  if (flows.empty()) throw ConfigError("no flows configured (set `traffic` or add [flow.*] sections)");
  for (const auto& f : flows) {
    if (f.start_time < 0ns) throw ConfigError("flow: start_time must be >= 0");
    if (f.duration && *f.duration <= 0ns) throw ConfigError("flow: duration must be positive");
  }
  aqm.validate();
}

nlohmann::ordered_json ScenarioConfig::to_json() const {
  nlohmann::ordered_json j;
  j["preset"] = preset;
  j["params"] = params;
  j["duration_ns"] = duration.count();
  j["link"] = {{"rate_bps", link.rate_bps},
               {"mode", std::string(to_string(link.mode))},
               {"trace_file", link.trace_file ? link.trace_file->string() : std::string()}};
  j["delay"] = {{"one_way_ns", one_way_delay.count()}};
  j["aqm"] = {{"target_ns", aqm.target.count()},
              {"step_thresh_ns", aqm.step_thresh.count()},
              {"tupdate_ns", aqm.tupdate.count()},
              {"alpha", aqm.alpha},
              {"beta", aqm.beta},
              {"coupling_k", aqm.coupling_k},
              {"limit_bytes", aqm.limit_bytes},
              {"classic_protection", aqm.classic_protection},
              {"ecn_classic", aqm.ecn_classic_enabled}};
  auto& fl = j["flows"] = nlohmann::ordered_json::array();
  for (const auto& f : flows) {
    fl.push_back({{"kind", std::string(to_string(f.kind))},
                  {"start_ns", f.start_time.count()},
                  {"duration_ns", f.duration ? f.duration->count() : 0}});
  }
  return j;
}

std::string ScenarioConfig::fingerprint() const { return sha256_hex(to_json().dump()).substr(0, 16); }

// ---------------------------------------------------------------------------
// Parsing

ConfigMap read_config_file(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  ConfigMap map;
  for (const auto& [section, node] : tree) {
    if (node.empty()) {
      map[section] = trim(node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) map[section + "." + key] = trim(leaf.data());
  }
  return map;
}

std::pair<std::string, std::string> parse_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(text) + "' is not key=value");
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

ScenarioConfig resolve_config(const ConfigMap& map) {
  ScenarioConfig cfg;
  std::set<std::string> used;
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = map.find(key);
    if (it == map.end()) return nullptr;
    used.insert(key);
    return &it->second;
  };

  // Preset layer.
  if (const auto* v = get("params")) cfg.params = *v;
  if (const auto* v = get("preset")) {
    const auto& bdp = find_bdp_preset(*v);
    const auto& pp = find_param_preset(cfg.params, bdp.name);
    cfg.preset = bdp.name;
    cfg.link.rate_bps = bdp.rate_bps;
    cfg.one_way_delay = bdp.rtt / 2;
    cfg.aqm.step_thresh = pp.step_thresh;
    cfg.aqm.target = pp.target;
  } else if (cfg.params != "default") {
    find_param_preset(cfg.params, "low");  // reject unknown names early
    throw ConfigError("params = " + cfg.params + " requires a preset");
  }
  if (const auto* v = get("traffic")) cfg.flows = traffic_pattern(*v);

  // Explicit keys.
  if (const auto* v = get("duration_s")) cfg.duration = parse_s("duration_s", *v);
  if (const auto* v = get("seed")) cfg.seed = parse_uint("seed", *v);
  if (const auto* v = get("runs")) cfg.runs = static_cast<std::uint32_t>(parse_uint("runs", *v));

  if (const auto* v = get("link.rate_mbps"))
    cfg.link.rate_bps = static_cast<std::uint64_t>(std::llround(parse_double("link.rate_mbps", *v) * 1e6));
  if (const auto* v = get("link.mode")) cfg.link.mode = parse_link_mode(*v);
  if (const auto* v = get("link.trace_file"); v && !v->empty()) cfg.link.trace_file = *v;
  if (const auto* v = get("delay.one_way_ms")) cfg.one_way_delay = parse_ms("delay.one_way_ms", *v);

  auto& a = cfg.aqm;
  if (const auto* v = get("aqm.target_ms")) a.target = parse_ms("aqm.target_ms", *v);
  if (const auto* v = get("aqm.step_thresh_ms")) a.step_thresh = parse_ms("aqm.step_thresh_ms", *v);
  if (const auto* v = get("aqm.tupdate_ms")) a.tupdate = parse_ms("aqm.tupdate_ms", *v);
  if (const auto* v = get("aqm.alpha")) a.alpha = parse_double("aqm.alpha", *v);
  if (const auto* v = get("aqm.beta")) a.beta = parse_double("aqm.beta", *v);
  if (const auto* v = get("aqm.coupling_k")) a.coupling_k = parse_double("aqm.coupling_k", *v);
  if (const auto* v = get("aqm.classic_protection"))
    a.classic_protection = parse_double("aqm.classic_protection", *v);
  if (const auto* v = get("aqm.ecn_classic")) a.ecn_classic_enabled = parse_bool("aqm.ecn_classic", *v);
  if (const auto* v = get("aqm.limit_bytes")) {
    a.limit_bytes = parse_uint("aqm.limit_bytes", *v);
  } else {
    a.limit_bytes = AqmConfig::limit_for_rate(cfg.link.rate_bps);
  }

  // [flow.<name>] sections, in name order, replace any traffic pattern.
  std::vector<std::string> flow_names;
  for (const auto& [key, value] : map) {
    if (!key.starts_with("flow.")) continue;
    const auto dot = key.find('.', 5);
    if (dot == std::string::npos) throw ConfigError("flow keys must look like flow.<name>.<key>: " + key);
    const auto name = key.substr(5, dot - 5);
    if (std::find(flow_names.begin(), flow_names.end(), name) == flow_names.end()) flow_names.push_back(name);
  }
  if (!flow_names.empty()) {
    cfg.flows.clear();
    for (const auto& name : flow_names) {
      const std::string p = "flow." + name + ".";
      FlowConfig f;
      const auto* kind = get(p + "kind");
      if (!kind) throw ConfigError(p + "kind is required");
      f.kind = parse_flow_kind(*kind);
      if (const auto* v = get(p + "start_time")) f.start_time = parse_s(p + "start_time", *v);
      if (const auto* v = get(p + "duration")) f.duration = parse_s(p + "duration", *v);
      cfg.flows.push_back(f);
    }
  }

  for (const auto& [key, value] : map) {
    if (!used.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

void apply_sweep_param(ScenarioConfig& cfg, std::string_view param, double value) {
  auto& a = cfg.aqm;
  if (param == "step_thresh") {
    a.step_thresh = from_millis(value);
  } else if (param == "target") {
    a.target = from_millis(value);
  } else if (param == "tupdate") {
    a.tupdate = from_millis(value);
  } else if (param == "alpha") {
    a.alpha = value;
  } else if (param == "beta") {
    a.beta = value;
  } else if (param == "coupling_k") {
    a.coupling_k = value;
  } else if (param == "classic_protection") {
    a.classic_protection = value;
  } else {
    throw ConfigError("unknown sweep parameter '" + std::string(param) +
                      "' (step_thresh|target|alpha|beta|coupling_k|classic_protection|tupdate)");
  }
  a.validate();
}

}  // namespace l4semu

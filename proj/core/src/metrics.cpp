#include "l4semu/metrics.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "l4semu/errors.hpp"

namespace l4semu {

namespace fs = std::filesystem;

TraceSample Sampler::sample(const DualPi2& aqm, SimTime now) {
  const auto& c = aqm.counters();
  TraceSample s;
  s.t = now;
  s.queue_packets = aqm.queued_packets();
  s.queue_bytes = aqm.queued_bytes();
  s.ecn_marks = c.ecn_marks() - marks_seen_;
  s.drops = c.drops_total - drops_seen_;
  marks_seen_ = c.ecn_marks();
  drops_seen_ = c.drops_total;
  return s;
}

double mbps(std::uint64_t bytes, Duration duration) {
  return static_cast<double>(bytes) * 8.0 / to_seconds(duration) / 1e6;
}

RunRecord summarize(std::string run_id, std::string fingerprint, std::uint64_t seed,
                    Duration duration, const std::vector<FlowBytes>& flows,
                    std::vector<TraceSample> series) {
  if (duration <= 0ns) throw ConfigError("summarize: run duration must be positive");
  if (flows.empty()) throw ConfigError("summarize: run has no flows");
  RunRecord r;
  r.run_id = std::move(run_id);
  r.fingerprint = std::move(fingerprint);
  r.seed = seed;
  r.duration = duration;
  r.series = std::move(series);
  for (const auto& f : flows) {
    FlowSummary fs{f.id, f.kind, f.bytes, mbps(f.bytes, duration)};
    r.avg_throughput_mbps += fs.mbps;
    r.flows.push_back(fs);
  }
  return r;
}

std::string format_series_csv(const std::vector<TraceSample>& series) {
  std::string out = "t_ns,qocc_pkts,qocc_bytes,ecn_marks,drops\n";
  for (const auto& s : series) {
    out += fmt::format("{},{},{},{},{}\n", s.t.ns(), s.queue_packets, s.queue_bytes, s.ecn_marks,
                       s.drops);
  }
  return out;
}

std::string format_flows_csv(const std::vector<FlowSummary>& flows) {
  std::string out = "flow_id,kind,bytes,mbps\n";
  for (const auto& f : flows) {
    out += fmt::format("{},{},{},{:.6f}\n", f.id, to_string(f.kind), f.bytes, f.mbps);
  }
  return out;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) fields.push_back(cur);
  return fields;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::string_view header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw std::runtime_error(path.string() + ": unexpected header");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split(line, ','));
  }
  return rows;
}

}  // namespace

void write_run_dir(const fs::path& dir, const RunRecord& record, const nlohmann::ordered_json& meta) {
  fs::create_directories(dir);
  nlohmann::ordered_json doc = meta;
  doc["run_id"] = record.run_id;
  doc["seed"] = record.seed;
  doc["fingerprint"] = record.fingerprint;
  auto& summary = doc["summary"];
  summary["duration_ns"] = record.duration.count();
  summary["avg_throughput_mbps"] = record.avg_throughput_mbps;
  summary["samples"] = record.series.size();
  write_file(dir / kMetaFile, doc.dump(2) + "\n");
  write_file(dir / kSeriesFile, format_series_csv(record.series));
  write_file(dir / kFlowsFile, format_flows_csv(record.flows));
}

RunRecord read_run_dir(const fs::path& dir) {
  std::ifstream in(dir / kMetaFile);
  if (!in) throw std::runtime_error("cannot read " + (dir / kMetaFile).string());
  const auto meta = nlohmann::json::parse(in);

  RunRecord r;
  try {
    r.run_id = meta.at("run_id").get<std::string>();
    r.seed = meta.at("seed").get<std::uint64_t>();
    r.fingerprint = meta.at("fingerprint").get<std::string>();
    const auto& summary = meta.at("summary");
    r.duration = Duration(summary.at("duration_ns").get<std::int64_t>());
    r.avg_throughput_mbps = summary.at("avg_throughput_mbps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error((dir / kMetaFile).string() + ": " + e.what());
  }

  for (const auto& row : read_csv(dir / kFlowsFile, "flow_id,kind,bytes,mbps")) {
    if (row.size() != 4) throw std::runtime_error((dir / kFlowsFile).string() + ": bad row");
    r.flows.push_back({static_cast<FlowId>(std::stoul(row[0])), parse_flow_kind(row[1]),
                       std::stoull(row[2]), std::stod(row[3])});
  }
  for (const auto& row : read_csv(dir / kSeriesFile, "t_ns,qocc_pkts,qocc_bytes,ecn_marks,drops")) {
    if (row.size() != 5) throw std::runtime_error((dir / kSeriesFile).string() + ": bad row");
    r.series.push_back({SimTime::from_ns(std::stoll(row[0])), std::stoull(row[1]), std::stoull(row[2]),
                        std::stoull(row[3]), std::stoull(row[4])});
  }
  return r;
}

}  // namespace l4semu

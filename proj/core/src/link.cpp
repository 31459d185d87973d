#include "l4semu/link.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <string>

#include "l4semu/errors.hpp"

namespace l4semu {

void DeliveryTrace::validate() const {
  if (opportunities_ms.empty()) throw ConfigError("trace: no delivery opportunities");
  if (repeat_period_ms <= 0) throw ConfigError("trace: repeat period must be positive");
  if (opportunities_ms.front() < 0) throw ConfigError("trace: negative timestamp");
  if (!std::is_sorted(opportunities_ms.begin(), opportunities_ms.end()))
    throw ConfigError("trace: timestamps must be non-decreasing");
  if (opportunities_ms.back() > repeat_period_ms)
    throw ConfigError("trace: timestamp beyond the repeat period");
}

double DeliveryTrace::average_rate_bps(std::uint32_t mtu) const {
  return static_cast<double>(opportunities_ms.size()) * mtu * 8.0 * 1000.0 /
         static_cast<double>(repeat_period_ms);
}

DeliveryTrace DeliveryTrace::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("trace: cannot open " + path.string());
  DeliveryTrace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(line.substr(first), &used);
      if (line.find_first_not_of(" \t\r", first + used) != std::string::npos) throw std::invalid_argument("");
      trace.opportunities_ms.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("trace: " + path.string() + ":" + std::to_string(lineno) + ": not an integer");
    }
  }
  if (trace.opportunities_ms.empty()) throw ConfigError("trace: " + path.string() + " is empty");
  trace.repeat_period_ms = trace.opportunities_ms.back();
  trace.validate();
  return trace;
}

void DeliveryTrace::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trace: cannot write " + path.string());
  for (auto t : opportunities_ms) out << t << '\n';
}

DeliveryTrace constant_rate_trace(std::uint64_t rate_bps, std::uint32_t mtu) {
  if (rate_bps == 0) throw ConfigError("trace: rate must be positive");
  if (mtu == 0) throw ConfigError("trace: mtu must be positive");
  // Opportunities per ms is rate / (8 * 1000 * mtu); reduce the fraction to
  // find the shortest loop holding a whole number of opportunities.
  const std::uint64_t denom = 8ULL * 1000ULL * mtu;
  const std::uint64_t g = std::gcd(rate_bps, denom);
  std::uint64_t period = denom / g;
  std::uint64_t count = rate_bps / g;
  if (period > static_cast<std::uint64_t>(kMaxTracePeriodMs)) {
    period = kMaxTracePeriodMs;
    count = static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(rate_bps) * period) / denom);
  }
  if (count == 0)
    throw ConfigError("trace: rate " + std::to_string(rate_bps) +
                      " bit/s cannot deliver one MTU per trace period");

  DeliveryTrace trace;
  trace.repeat_period_ms = static_cast<std::int64_t>(period);
  trace.opportunities_ms.reserve(count);
  std::uint64_t credit = 0;
  for (std::uint64_t ms = 1; ms <= period; ++ms) {
    credit += count;
    while (credit >= period) {
      trace.opportunities_ms.push_back(static_cast<std::int64_t>(ms));
      credit -= period;
    }
  }
  return trace;
}

std::string_view to_string(LinkMode mode) {
  return mode == LinkMode::Bursty ? "bursty" : "smooth";
}

LinkMode parse_link_mode(std::string_view text) {
  if (text == "bursty") return LinkMode::Bursty;
  if (text == "smooth") return LinkMode::Smooth;
  throw ConfigError("link: unknown mode '" + std::string(text) + "' (bursty|smooth)");
}

DelayElement::DelayElement(Duration one_way_delay) : delay_(one_way_delay) {
  if (delay_ < 0ns) throw ConfigError("delay: one-way delay must be >= 0");
}

BottleneckLink::BottleneckLink(LinkMode mode, DeliveryTrace trace, std::uint64_t rate_bps)
    : mode_(mode), trace_(std::move(trace)), rate_bps_(rate_bps) {
  if (rate_bps_ == 0) throw ConfigError("link: rate must be positive");
  trace_.validate();
}

SimTime BottleneckLink::current_opportunity() const {
  const std::int64_t ms = loop_ * trace_.repeat_period_ms + trace_.opportunities_ms[trace_pos_];
  return SimTime(std::chrono::milliseconds(ms));
}

void BottleneckLink::step_opportunity() {
  if (++trace_pos_ == trace_.opportunities_ms.size()) {
    trace_pos_ = 0;
    ++loop_;
  }
}

std::optional<SimTime> BottleneckLink::next_service() const {
  if (mode_ == LinkMode::Bursty) return current_opportunity();
  return next_smooth_;
}

void BottleneckLink::wake(SimTime now) {
  if (mode_ != LinkMode::Smooth || next_smooth_) return;
  next_smooth_ = std::max(now, busy_until_);
}

Duration BottleneckLink::serialization_time(std::uint32_t bytes) const {
  const auto num = static_cast<unsigned __int128>(bytes) * 8U * 1'000'000'000ULL;
  return Duration(static_cast<std::int64_t>(num / rate_bps_));
}

std::vector<Packet> BottleneckLink::advance(DualPi2& aqm, SimTime now, Rng& rng) {
  std::vector<Packet> out;
  if (mode_ == LinkMode::Bursty) {
    // Opportunities before `now` that nobody serviced are skipped.
    while (current_opportunity() < now) step_opportunity();
    while (current_opportunity() == now) {
      if (auto pkt = aqm.dequeue(now, rng)) out.push_back(*pkt);
      step_opportunity();
    }
    return out;
  }

  if (!next_smooth_ || *next_smooth_ != now) return out;
  next_smooth_.reset();
  if (auto pkt = aqm.dequeue(now, rng)) {
    const auto num = static_cast<unsigned __int128>(pkt->size) * 8U * 1'000'000'000ULL + bit_remainder_;
    const auto tx = static_cast<std::int64_t>(num / rate_bps_);
    bit_remainder_ = static_cast<std::uint64_t>(num % rate_bps_);
    busy_until_ = now + Duration(tx);
    next_smooth_ = busy_until_;
    out.push_back(*pkt);
  }
  return out;
}

}  // namespace l4semu

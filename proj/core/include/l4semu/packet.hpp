#pragma once

#include <cstdint>
#include <string_view>

#include "l4semu/sim_time.hpp"

namespace l4semu {

// IP-header ECN field. Values follow the on-wire bit patterns.
enum class EcnCodepoint : std::uint8_t {
  NotEct = 0b00,
  Ect1 = 0b01,  // L4S identifier
  Ect0 = 0b10,  // Classic ECN-capable
  Ce = 0b11,    // congestion experienced
};

std::string_view to_string(EcnCodepoint ecn);

using FlowId = std::uint32_t;

inline constexpr std::uint32_t kMtu = 1500;

struct Packet {
  std::uint64_t id = 0;
  FlowId flow = 0;
  std::uint32_t size = kMtu;
  EcnCodepoint ecn = EcnCodepoint::NotEct;
  SimTime created_at{};
  SimTime enqueued_at{};  // stamped by the AQM
  std::uint64_t seq = 0;
};

}  // namespace l4semu

#include "l4semu/sim_time.hpp"

#include <limits>

#include "l4semu/errors.hpp"

namespace l4semu {

SimTime advance_time(SimTime clock, Duration delta) {
  if (delta < 0ns) throw ConfigError("advance_time: negative delta");
  if (clock.ns() > std::numeric_limits<std::int64_t>::max() - delta.count())
    throw ConfigError("advance_time: simulated clock overflow");
  return clock + delta;
}

}  // namespace l4semu

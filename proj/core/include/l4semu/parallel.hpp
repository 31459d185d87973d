#pragma once

#include <cstddef>
#include <functional>

namespace l4semu {

// Runs fn(i) for every i in [0, count) on up to `threads` workers. Work is
// handed out by index, so callers that write results by index get the same
// output for any thread count. The first exception is rethrown once all
// workers have stopped.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

// Worker count for a "0 = auto" setting.
unsigned resolve_threads(unsigned requested);

}  // namespace l4semu

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace l4semu {

// The single pseudo-random stream of a run.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard, so a (seed, algorithm) pair replays bit-exactly on every
// platform. The standard distributions are implementation-defined and are
// not used: every draw below consumes exactly one 64-bit engine output
// (index() may reject and redraw, see its comment).
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) from the top 53 bits of one draw.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // True with probability p; one draw. p must lie in [0, 1], callers clamp.
  bool bernoulli(double p);

  // Uniform integer in [0, n). Rejection sampling on the 64-bit output keeps
  // it unbiased; the expected number of draws is below 2 for any n.
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

}  // namespace l4semu

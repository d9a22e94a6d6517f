// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace raremut {

namespace detail {

// splitmix64 finalizer (Steele, Lea, Flood 2014): bijective 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based stream: output n is a hash of (key, n), so the stream for a
// given (seed, stream_index) pair is reproducible regardless of how many
// other streams exist or which thread consumes it.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t stream_index)
      : state_(detail::mix64(seed ^ detail::mix64(stream_index))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(state_);
  }

  // Uniform on [0, 1): top 53 bits of the counter output.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Exponential with the given rate; rate must be positive.
  double exponential(double rate) {
    // log1p(-u) = log(1 - u) is finite for u in [0, 1).
    return -std::log1p(-uniform01()) / rate;
  }

 private:
  std::uint64_t state_;
};

}  // namespace raremut

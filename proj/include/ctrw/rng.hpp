#pragma once

#include <cmath>
#include <cstdint>

namespace ctrw {

// Counter-based stream: output k is a SplitMix64 finalizer of key + k * golden,
// with the key derived from (seed, stream). Streams never share state.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t stream) : key_(mix(seed ^ mix(stream + 0x6A09E667F3BCC909ULL))) {}

  uint64_t next() { return mix(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL); }

  // Uniform on (0, 1].
  double uniform_pos() { return double((next() >> 11) + 1) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  uint64_t counter() const { return counter_; }

  static uint64_t mix(uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace ctrw

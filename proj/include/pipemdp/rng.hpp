#pragma once

#include <cstdint>
#include <random>

namespace pipemdp {

/// 64-bit Mersenne Twister with a platform-independent mapping to [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  void reseed(std::uint64_t seed) { engine_.seed(seed); }

  // 53 random mantissa bits: uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pipemdp

#pragma once

#include <cstdint>
#include <random>

#include "tvpose/geometry.h"

namespace tvpose {

// Independent, reproducible generator for (seed, stream, index). Streams are
// derived by hashing the tuple, so drawing from one feature's stream never
// shifts another's.
class RandomStream {
 public:
  RandomStream(uint64_t seed, uint64_t stream, uint64_t index = 0);

  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double Normal(double stddev) {
    if (stddev == 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, stddev)(engine_);
  }
  int UniformInt(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }
  Vector3 UnitVector();
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

uint64_t MixSeed(uint64_t seed, uint64_t stream, uint64_t index);

}  // namespace tvpose

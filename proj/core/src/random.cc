#include "tvpose/random.h"

namespace tvpose {
namespace {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

uint64_t MixSeed(uint64_t seed, uint64_t stream, uint64_t index) {
  return SplitMix64(SplitMix64(SplitMix64(seed) ^ stream) ^ index);
}

RandomStream::RandomStream(uint64_t seed, uint64_t stream, uint64_t index)
    : engine_(MixSeed(seed, stream, index)) {}

Vector3 RandomStream::UnitVector() {
  while (true) {
    const Vector3 v(Normal(1.0), Normal(1.0), Normal(1.0));
    const double n = v.norm();
    if (n > 1e-9) return v / n;
  }
}

}  // namespace tvpose

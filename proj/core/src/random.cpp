#include "glider_assim/random.hpp"

namespace glider_assim {
namespace {

// SplitMix64 finalizer (Stafford variant 13); a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed + kGolden) ^ (stream * 0xd1b54a32d192ed03ULL))) {}

CounterRng::result_type CounterRng::operator()() {
  const std::uint64_t n = counter_++;
  return mix64(key_ + (n + 1) * kGolden);
}

CounterRng CounterRng::substream(std::uint64_t stream) const {
  return CounterRng(mix64(key_ ^ mix64(stream + kGolden)), 0, 0);
}

}  // namespace glider_assim

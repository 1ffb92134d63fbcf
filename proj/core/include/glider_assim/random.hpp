#pragma once

#include <cstdint>
#include <limits>

namespace glider_assim {

/// Counter-based 64-bit generator: output n is a fixed bijective hash of
/// (key, n). Streams with different ids never share state, so experiments
/// can hand independent substreams to noise, strategy and placement draws.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Independent generator derived from this one's key; does not advance
  /// this generator.
  CounterRng substream(std::uint64_t stream) const;

  std::uint64_t counter() const { return counter_; }

 private:
  CounterRng(std::uint64_t key, std::uint64_t counter, int /*tag*/)
      : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fixed stream offsets used by the experiment driver.
enum class RngStream : std::uint64_t {
  observation_noise = 1,
  strategy = 2,
  placement = 3,
};

inline CounterRng make_stream(std::uint64_t seed, RngStream stream) {
  return CounterRng(seed, static_cast<std::uint64_t>(stream));
}

}  // namespace glider_assim

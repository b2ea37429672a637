#pragma once

// Counter-based random streams.
//
// A stream is identified by (seed, stream_id). Draw number c of a stream is
// splitmix64_mix(key + (c + 1) * golden), with key = splitmix64_mix(seed ^
// splitmix64_mix(stream_id + golden)). Any draw can be computed directly from
// its counter, so substreams never interact and results do not depend on the
// order in which draws are consumed.

#include <cstdint>

#include "gppl/normal.hpp"

namespace gppl {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream_id)
      : key_(splitmix64_mix(seed ^ splitmix64_mix(stream_id + kGolden))) {}

  constexpr std::uint64_t at(std::uint64_t counter) const {
    return splitmix64_mix(key_ + (counter + 1) * kGolden);
  }

  // Uniform on the open interval (0, 1), 53-bit resolution.
  constexpr double uniform_at(std::uint64_t counter) const {
    return (static_cast<double>(at(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal by inverse-CDF transform.
  double normal_at(std::uint64_t counter) const { return normal_quantile(uniform_at(counter)); }

  // Sequential interface over the same counters.
  std::uint64_t next() { return at(counter_++); }
  double uniform() { return uniform_at(counter_++); }
  double normal() { return normal_at(counter_++); }
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stream ids used by the scenario generator.
enum class Stream : std::uint64_t {
  kDesign = 1,
  kNoise = 2,
  kFolds = 3,
  kGraph = 4,
};

inline CounterRng make_stream(std::uint64_t seed, Stream s) {
  return CounterRng(seed, static_cast<std::uint64_t>(s));
}

}  // namespace gppl

// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_RNG_HPP
#define HICSIM_RNG_HPP

#include <cmath>
#include <cstdint>

namespace hicsim {

// Counter-based deterministic random streams. Every draw is a pure function
// of (master seed, key words); there is no generator state, so results do
// not depend on evaluation order across devices, tiles, or threads.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Salt words keep unrelated draw sites on disjoint streams.
enum RngSalt : std::uint64_t {
  kSaltWriteNoise = 0x01,
  kSaltReadNoise = 0x02,
  kSaltDriftNu = 0x03,
  kSaltInitWeights = 0x04,
  kSaltShuffle = 0x05,
  kSaltDataset = 0x06,
  kSaltStochasticRound = 0x07,
  kSaltEval = 0x08,
};

class NoiseSource {
 public:
  NoiseSource() : seed_(0) {}
  explicit NoiseSource(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Derive a child source on an independent stream.
  NoiseSource fork(std::uint64_t word) const {
    return NoiseSource(detail::splitmix64(seed_ ^ detail::splitmix64(word)));
  }

  template <typename... Words>
  std::uint64_t bits(Words... words) const {
    std::uint64_t h = seed_;
    std::uint64_t idx = 1;
    ((h = detail::splitmix64(h ^ detail::splitmix64(
              static_cast<std::uint64_t>(words) + 0x9E3779B97F4A7C15ULL * idx++))),
     ...);
    return detail::splitmix64(h);
  }

  // Uniform in [0, 1).
  template <typename... Words>
  double uniform(Words... words) const {
    return static_cast<double>(bits(words...) >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; one value per key.
  template <typename... Words>
  double gaussian(Words... words) const {
    const std::uint64_t b = bits(words...);
    const std::uint64_t b2 = detail::splitmix64(b ^ 0xD1B54A32D192ED03ULL);
    // u1 in (0, 1] so the log is finite.
    const double u1 = static_cast<double>((b >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(b2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace hicsim

#endif  // HICSIM_RNG_HPP

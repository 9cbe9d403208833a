#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hst {

/// splitmix64 step; good enough as both a mixer and a tiny generator.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a substream seed from a master seed and a key path, e.g.
/// substream_seed(master, {run, n, trial}). Order-sensitive, collision
/// resistant enough for Monte Carlo bookkeeping.
inline std::uint64_t substream_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = master;
  (void)splitmix64_next(s);
  for (std::uint64_t k : path) {
    s ^= k + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    (void)splitmix64_next(s);
  }
  return splitmix64_next(s);
}

/// Minimal UniformRandomBitGenerator around splitmix64. Cheap to construct,
/// which matters when each (run, n, trial) gets its own stream.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ULL; }
  result_type operator()() { return splitmix64_next(state_); }

  /// Uniform index in [0, bound) via the multiply-shift trick.
  std::size_t index(std::size_t bound) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>((*this)()) * bound) >> 64);
  }

 private:
  std::uint64_t state_;
};

/// Standard 64-bit Mersenne engine seeded from a substream.
inline std::mt19937_64 make_engine(std::uint64_t master,
                                   std::initializer_list<std::uint64_t> path) {
  return std::mt19937_64(substream_seed(master, path));
}

}  // namespace hst

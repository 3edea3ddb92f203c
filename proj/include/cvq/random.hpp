#ifndef CVQ_RANDOM_HPP
#define CVQ_RANDOM_HPP

#include <algorithm>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace cvq {

/// Engine used by every stochastic routine (64-bit Mersenne Twister).
using Rng = std::mt19937_64;

/// Master seed used when the caller does not supply one.
inline constexpr std::uint64_t kDefaultSeed = 20210101;

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// master seed so results never depend on evaluation order.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t index) {
  return Rng(derive_seed(master, index));
}

/// Uniform double in [0,1) built from the top 53 bits; identical on every
/// standard library.
inline double uniform01(Rng &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Runs body(i) for i in [0,n) on a few worker threads. Each index must own
/// its output slot and its own RNG stream.
template <typename Body>
void parallel_for(std::size_t n, Body &&body) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  }
}

} // namespace cvq

#endif // CVQ_RANDOM_HPP

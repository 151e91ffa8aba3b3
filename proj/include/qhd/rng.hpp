#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace qhd {

// SplitMix64 finalizer; used to derive well-separated child seeds.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t key) {
  return splitmix64(splitmix64(parent) ^ splitmix64(key + 0x632BE59BD9B4E019ULL));
}

// Purpose tags for per-subject substreams.
enum class StreamPurpose : std::uint64_t { mechanism = 1, noise = 2, assignment = 3, tasks = 4,
                                           restart = 5, bootstrap = 6 };

// Seedable, splittable stream. Children are keyed, so the stream for
// (master seed, subject, purpose) is the same regardless of evaluation order.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  RandomStream split(std::uint64_t key) const { return RandomStream(derive_seed(seed_, key)); }
  RandomStream split(StreamPurpose p) const { return split(static_cast<std::uint64_t>(p)); }

  std::mt19937_64& engine() { return engine_; }

  std::uint64_t next() { return engine_(); }
  bool coin() { return (engine_() >> 63) != 0; }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return normal_(engine_); }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace qhd

#pragma once

// Counter-based random streams. A stream is a 64-bit key derived from the
// master seed and a path of identifiers (trial, vertex, particle, role);
// draws are splitmix64 outputs at key + counter. Identical (seed, path)
// reproduce identical draws on every platform, and distinct paths give
// streams that are independent for test purposes.

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace froglab {

namespace rng_detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace rng_detail

// Role tags keep streams for different purposes disjoint even when the
// numeric identifiers collide.
enum class StreamRole : std::uint64_t {
  TreeGen = 1,
  SleeperCounts = 2,
  Walk = 3,
  TieBreakMark = 4,
  Offspring = 5,
  Generic = 6,
};

class RngStream {
 public:
  RngStream() : key_(0), counter_(0) {}
  explicit RngStream(std::uint64_t key) : key_(key), counter_(0) {}

  static RngStream derive(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t key = rng_detail::mix64(master_seed);
    for (std::uint64_t c : path) key = rng_detail::mix64(key ^ rng_detail::mix64(c));
    return RngStream(key);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() { return rng_detail::mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Random access draw; does not advance the stream.
  std::uint64_t u64_at(std::uint64_t counter_value) const {
    return rng_detail::mix64(key_ + 0x9e3779b97f4a7c15ULL * (counter_value + 1));
  }

  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform01_at(std::uint64_t counter_value) const {
    return static_cast<double>(u64_at(counter_value) >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n); n >= 1.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Knuth product method; large means are split to avoid exp() underflow.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::uint64_t total = 0;
    while (mean > 60.0) {
      total += poisson_small(60.0);
      mean -= 60.0;
    }
    return total + poisson_small(mean);
  }

 private:
  std::uint64_t poisson_small(double mean) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = 1.0;
    do {
      ++k;
      prod *= uniform01();
    } while (prod > limit);
    return k - 1;
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace froglab

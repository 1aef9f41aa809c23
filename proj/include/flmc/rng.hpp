#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace flmc {

/// SplitMix64 finalizer; used to spread seeds and derive independent sub-streams.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of sub-stream `stream_id` of `base`. Distinct ids give unrelated streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream_id);

/// Explicitly seeded 64-bit random stream. One stream per chain; not thread-safe.
///
/// Uniform and exponential conversions are done here instead of through the
/// <random> distributions so draw sequences do not depend on the standard
/// library implementation.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed);

  /// Independent child stream; does not advance this stream.
  RandomStream split(std::uint64_t stream_id) const;

  result_type operator()() { return engine_(); }
  static constexpr result_type min() { return std::numeric_limits<result_type>::min(); }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();
  /// Unit-rate exponential.
  double exponential();
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t index(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace flmc

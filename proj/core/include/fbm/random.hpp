#pragma once

#include <cstdint>
#include <limits>
#include <span>

namespace fbm {

/// Position of a random stream in the (seed, replica, tick, type) lattice.
/// Every coordinate maps to an independent stream, so draws never depend on
/// the order in which replicas or types are processed.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  std::uint64_t tick = 0;
  std::uint64_t type = 0;
};

/// Counter-based generator: output i of a stream is mix(key + i * gamma),
/// the SplitMix64 construction. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(const StreamKey& key);
  explicit CounterRng(std::uint64_t raw_key) : key_(raw_key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1); never returns 0.
  double uniform_open();

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Exact Binomial(n, p) variate. Inversion for small means, Hormann's BTRS
/// transformed rejection otherwise.
std::int64_t sample_binomial(CounterRng& rng, std::int64_t n, double p);

/// Multinomial(n, prob) by sequential conditional binomials. `prob` must be
/// nonnegative with positive sum; it is renormalised on the fly. Writes
/// prob.size() counts into `out`.
void sample_multinomial(CounterRng& rng, std::int64_t n, std::span<const double> prob,
                        std::span<std::int64_t> out);

}  // namespace fbm

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace din {

/// SplitMix64 step. Used for seeding and for deriving independent sub-seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes a base seed with a stream index into a new well-distributed seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// xoshiro256** generator with self-contained distributions, so that a given
/// seed yields the same stream on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be > 0.
  std::size_t below(std::size_t n);
  /// Standard normal (Marsaglia polar method).
  double normal();
  double normal(double mean, double sd);
  /// Exponential with the given rate (> 0).
  double exponential(double rate);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace din

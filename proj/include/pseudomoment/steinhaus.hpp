#pragma once

// Steinhaus random multiplicative functions with counter-based angles.
//
// The angle of the prime of rank r in realization i under master seed s is a
// pure function of (s, i, r), so a realization never depends on how samples
// are spread over workers, nor on how many primes another caller asked for.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "primes.hpp"

namespace pseudomoment {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr std::uint64_t kDefaultSeed = 0x5EED'2024'0001ULL;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Avalanche key for (master_seed, sample_index, prime_rank).
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index,
                                   std::uint64_t rank) noexcept {
  std::uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ULL);
  h = mix64(h ^ (index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
  h = mix64(h ^ (rank * 0xAEF17502108EF2D9ULL + 0x2545F4914F6CDD1DULL));
  return h;
}

/// Uniform angle in [0, 2pi) from the top 53 bits of the key.
inline double steinhaus_angle(std::uint64_t seed, std::uint64_t index, std::uint64_t rank) {
  const double u = static_cast<double>(stream_key(seed, index, rank) >> 11) * 0x1.0p-53;
  const double angle = u * kTwoPi;
  return angle < kTwoPi ? angle : 0.0;
}

/// One realization of (theta_p) over the primes of rank < angles.size().
class SteinhausSample {
 public:
  SteinhausSample(std::uint64_t master_seed, std::uint64_t sample_index, std::size_t prime_count)
      : seed_(master_seed), index_(sample_index), angles_(prime_count) {
    for (std::size_t r = 0; r < prime_count; ++r) angles_[r] = steinhaus_angle(seed_, index_, r);
  }

  std::uint64_t master_seed() const noexcept { return seed_; }
  std::uint64_t sample_index() const noexcept { return index_; }
  std::size_t prime_count() const noexcept { return angles_.size(); }
  const std::vector<double>& angles() const noexcept { return angles_; }
  double angle(std::size_t rank) const { return angles_.at(rank); }

  /// X(p) for the prime of the given rank.
  std::complex<double> at_prime(std::size_t rank) const { return std::polar(1.0, angle(rank)); }

 private:
  std::uint64_t seed_;
  std::uint64_t index_;
  std::vector<double> angles_;
};

/// Realization covering every prime in the table.
inline SteinhausSample sample(const PrimeTable& primes, std::uint64_t master_seed,
                              std::uint64_t sample_index) {
  return SteinhausSample(master_seed, sample_index, primes.size());
}

/// Realization covering the primes <= x.
inline SteinhausSample sample_up_to(const PrimeTable& primes, double x, std::uint64_t master_seed,
                                    std::uint64_t sample_index) {
  return SteinhausSample(master_seed, sample_index, x < 2.0 ? 0 : primes.count_up_to(x));
}

/// Fills units[r] = X(p_r) for r < units.size() without materializing angles.
inline void steinhaus_units(std::uint64_t master_seed, std::uint64_t sample_index,
                            std::span<std::complex<double>> units) {
  for (std::size_t r = 0; r < units.size(); ++r) {
    units[r] = std::polar(1.0, steinhaus_angle(master_seed, sample_index, r));
  }
}

/// Total phase sum e * theta_p of X(n).
inline double phase_of(const SteinhausSample& s, const FactoredInteger& n) {
  double phase = 0.0;
  for (const auto& f : n.factors()) {
    if (f.rank >= s.prime_count()) {
      throw CoverageError("eval_X: prime " + std::to_string(f.prime) +
                          " lies outside the sampled prime set");
    }
    phase += double(f.exponent) * s.angles()[f.rank];
  }
  return phase;
}

/// X(n) = exp(i sum e theta_p): completely multiplicative, |X(n)| = 1.
inline std::complex<double> eval_X(const SteinhausSample& s, const FactoredInteger& n) {
  return std::polar(1.0, phase_of(s, n));
}

}  // namespace pseudomoment

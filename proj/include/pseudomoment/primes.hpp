#pragma once

// Prime tables and streaming enumeration of y-smooth integers in factored
// form.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"

namespace pseudomoment {

inline constexpr std::uint64_t kDefaultSieveMaximum = 1'000'000'000ULL;
inline constexpr std::uint64_t kPlainSieveThreshold = 1ULL << 22;

/// Deterministic trial-division primality test, for test-scale checks.
inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  if (n % 3 == 0) return n == 3;
  for (std::uint64_t d = 5; d <= n / d; d += 6) {
    if (n % d == 0 || n % (d + 2) == 0) return false;
  }
  return true;
}

/// Converts a real cutoff to the largest integer n with n <= cutoff.
inline std::uint64_t integer_floor(double cutoff) {
  if (!(cutoff >= 0.0)) return 0;
  if (cutoff >= 0x1p63) return std::uint64_t{1} << 63;
  return static_cast<std::uint64_t>(std::floor(cutoff));
}

/// Ascending table of every prime up to `limit`. Immutable once built.
///
/// The rank of a prime is its zero-based position among all primes, so
/// ranks agree between any two tables.
class PrimeTable {
 public:
  PrimeTable() = default;
  PrimeTable(std::uint64_t limit, std::vector<std::uint32_t> primes)
      : limit_(limit), primes_(std::move(primes)) {}

  std::uint64_t limit() const noexcept { return limit_; }
  std::span<const std::uint32_t> primes() const noexcept { return primes_; }
  std::size_t size() const noexcept { return primes_.size(); }
  bool empty() const noexcept { return primes_.empty(); }
  std::uint32_t operator[](std::size_t rank) const { return primes_[rank]; }

  bool covers(double x) const noexcept { return integer_floor(x) <= limit_; }

  /// Number of primes <= x; the table must cover x.
  std::size_t count_up_to(double x) const {
    require_coverage(x, "count_up_to");
    const auto bound = integer_floor(x);
    return static_cast<std::size_t>(
        std::upper_bound(primes_.begin(), primes_.end(), bound,
                         [](std::uint64_t v, std::uint32_t p) { return v < p; }) -
        primes_.begin());
  }

  /// Primes p with lo <= p <= hi, as a rank range [first, last).
  std::pair<std::size_t, std::size_t> rank_range(double lo, double hi) const {
    require_coverage(hi, "rank_range");
    const std::size_t last = count_up_to(hi);
    std::size_t first = 0;
    if (lo > 0.0) {
      const double lo_ceil = std::ceil(lo);
      first = lo_ceil <= 1.0 ? 0 : count_up_to(lo_ceil - 1.0);
    }
    return {std::min(first, last), last};
  }

  std::size_t rank_of(std::uint64_t p) const {
    auto it = std::lower_bound(primes_.begin(), primes_.end(), p,
                               [](std::uint32_t a, std::uint64_t v) { return a < v; });
    if (it == primes_.end() || *it != p) {
      throw CoverageError(std::to_string(p) + " is not a prime listed in the table");
    }
    return static_cast<std::size_t>(it - primes_.begin());
  }

  void require_coverage(double x, const char* who) const {
    if (!covers(x)) {
      throw CoverageError(std::string(who) + ": prime table limit " +
                          std::to_string(limit_) + " does not cover " + std::to_string(x));
    }
  }

 private:
  std::uint64_t limit_ = 0;
  std::vector<std::uint32_t> primes_;
};

namespace detail {

// Odd-only sieve of Eratosthenes over [0, limit].
inline std::vector<std::uint32_t> plain_sieve(std::uint64_t limit) {
  std::vector<std::uint32_t> out;
  if (limit < 2) return out;
  out.push_back(2);
  const std::uint64_t half = (limit - 1) / 2;  // index i <-> 2i + 1
  std::vector<bool> composite(half + 1, false);
  for (std::uint64_t i = 1; i <= half; ++i) {
    if (composite[i]) continue;
    const std::uint64_t p = 2 * i + 1;
    out.push_back(static_cast<std::uint32_t>(p));
    for (std::uint64_t m = p * p; m <= limit; m += 2 * p) composite[(m - 1) / 2] = true;
  }
  return out;
}

inline std::vector<std::uint32_t> segmented_sieve(std::uint64_t limit) {
  const auto root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(limit))) + 1;
  std::vector<std::uint32_t> base = plain_sieve(root);
  std::vector<std::uint32_t> out;
  out.reserve(static_cast<std::size_t>(1.1 * limit / std::log(static_cast<double>(limit))));
  constexpr std::uint64_t kSegment = 1ULL << 19;  // odd numbers per segment
  std::vector<std::uint8_t> composite(kSegment);
  out.push_back(2);
  // Segment covers odd numbers low, low + 2, ..., low + 2(kSegment - 1).
  for (std::uint64_t low = 3; low <= limit; low += 2 * kSegment) {
    const std::uint64_t high = std::min(limit, low + 2 * (kSegment - 1));
    const std::uint64_t count = (high - low) / 2 + 1;
    std::fill(composite.begin(), composite.begin() + static_cast<std::ptrdiff_t>(count), 0);
    for (std::size_t b = 1; b < base.size(); ++b) {
      const std::uint64_t p = base[b];
      if (p * p > high) break;
      std::uint64_t start = std::max(p * p, (low + p - 1) / p * p);
      if (start % 2 == 0) start += p;
      for (std::uint64_t m = start; m <= high; m += 2 * p) composite[(m - low) / 2] = 1;
    }
    for (std::uint64_t i = 0; i < count; ++i) {
      if (!composite[i]) out.push_back(static_cast<std::uint32_t>(low + 2 * i));
    }
  }
  return out;
}

}  // namespace detail

/// All primes <= limit. Plain sieve below 2^22, segmented above.
inline PrimeTable sieve_primes(std::uint64_t limit,
                               std::uint64_t maximum = kDefaultSieveMaximum) {
  if (limit < 2) throw EmptyTableError("sieve_primes: limit < 2 yields an empty table");
  if (limit > maximum || limit > std::numeric_limits<std::uint32_t>::max()) {
    throw ResourceError("sieve_primes: limit " + std::to_string(limit) +
                        " exceeds the configured maximum " + std::to_string(maximum));
  }
  auto primes =
      limit <= kPlainSieveThreshold ? detail::plain_sieve(limit) : detail::segmented_sieve(limit);
  return PrimeTable(limit, std::move(primes));
}

struct PrimePower {
  std::uint64_t prime;
  std::uint32_t exponent;
  std::uint32_t rank;  // position of `prime` among all primes

  friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

/// A positive integer together with its factorization, primes ascending.
class FactoredInteger {
 public:
  FactoredInteger() = default;
  FactoredInteger(std::uint64_t value, std::vector<PrimePower> factors)
      : value_(value), factors_(std::move(factors)) {}

  std::uint64_t value() const noexcept { return value_; }
  std::span<const PrimePower> factors() const noexcept { return factors_; }
  bool is_one() const noexcept { return factors_.empty(); }

  /// Number of prime factors with multiplicity.
  std::uint32_t omega() const noexcept {
    std::uint32_t total = 0;
    for (const auto& f : factors_) total += f.exponent;
    return total;
  }

  /// Largest prime factor; P(1) = 1.
  std::uint64_t largest_prime() const noexcept {
    return factors_.empty() ? 1 : factors_.back().prime;
  }

  // Mutators used by the enumerator; keep the ascending-prime invariant.
  void push(PrimePower f, std::uint64_t multiplier) {
    factors_.push_back(f);
    value_ *= multiplier;
  }
  void pop(std::uint64_t divisor) {
    factors_.pop_back();
    value_ /= divisor;
  }
  void raise_last(std::uint64_t prime) {
    ++factors_.back().exponent;
    value_ *= prime;
  }

 private:
  std::uint64_t value_ = 1;
  std::vector<PrimePower> factors_;
};

/// Factors n by trial division over the table; the table must reach sqrt(n)
/// and list every prime factor of n.
inline FactoredInteger factorize(std::uint64_t n, const PrimeTable& table) {
  if (n == 0) throw DomainError("factorize: n must be positive");
  std::vector<PrimePower> factors;
  std::uint64_t rest = n;
  for (std::size_t r = 0; r < table.size(); ++r) {
    const std::uint64_t p = table[r];
    if (p * p > rest) break;
    if (rest % p != 0) continue;
    std::uint32_t e = 0;
    while (rest % p == 0) {
      rest /= p;
      ++e;
    }
    factors.push_back({p, e, static_cast<std::uint32_t>(r)});
  }
  if (rest > 1) {
    factors.push_back({rest, 1, static_cast<std::uint32_t>(table.rank_of(rest))});
  }
  return FactoredInteger(n, std::move(factors));
}

namespace detail {

template <class Visitor>
void smooth_dfs(std::span<const std::uint32_t> primes, std::size_t start, std::uint64_t bound,
                std::uint64_t lower, FactoredInteger& n, Visitor& visit) {
  for (std::size_t r = start; r < primes.size(); ++r) {
    const std::uint64_t p = primes[r];
    if (n.value() > bound / p) break;
    n.push({p, 1, static_cast<std::uint32_t>(r)}, p);
    std::uint64_t power = p;
    while (true) {
      if (n.value() > lower) visit(static_cast<const FactoredInteger&>(n));
      smooth_dfs(primes, r + 1, bound, lower, n, visit);
      if (n.value() > bound / p) break;
      n.raise_last(p);
      power *= p;
    }
    n.pop(power);
  }
}

struct SmoothBounds {
  std::uint64_t bound;
  std::uint64_t lower;
  std::size_t prime_count;
};

inline SmoothBounds smooth_bounds(const PrimeTable& table, double x, double y, double lower) {
  detail::require(x >= 1.0, "enumerate_smooth: x >= 1");
  detail::require(y >= 2.0, "enumerate_smooth: y >= 2");
  detail::require(lower >= 0.0, "enumerate_smooth: lower >= 0");
  const std::uint64_t bound = integer_floor(x);
  const double effective_y = std::min(y, static_cast<double>(bound));
  table.require_coverage(effective_y, "enumerate_smooth");
  return {bound, integer_floor(lower), table.count_up_to(effective_y)};
}

}  // namespace detail

/// Streams every n with lower < n <= x and P(n) <= y, each exactly once, to
/// `visit(const FactoredInteger&)`. Order is unspecified.
///
/// Depth-first over ascending primes; memory is proportional to the number
/// of distinct prime factors. x and y are real cutoffs compared against
/// exact integers.
template <class Visitor>
void for_each_smooth(const PrimeTable& table, double x, double y, double lower, Visitor&& visit) {
  const auto b = detail::smooth_bounds(table, x, y, lower);
  FactoredInteger n;
  if (b.lower < 1 && b.bound >= 1) visit(static_cast<const FactoredInteger&>(n));
  detail::smooth_dfs(table.primes().first(b.prime_count), 0, b.bound, b.lower, n, visit);
}

template <class Visitor>
void for_each_smooth(const PrimeTable& table, double x, double y, Visitor&& visit) {
  for_each_smooth(table, x, y, 0.0, std::forward<Visitor>(visit));
}

/// Materialized, ascending version of for_each_smooth (test scale).
inline std::vector<FactoredInteger> collect_smooth_sorted(const PrimeTable& table, double x,
                                                          double y, double lower = 0.0) {
  std::vector<FactoredInteger> out;
  for_each_smooth(table, x, y, lower, [&](const FactoredInteger& n) { out.push_back(n); });
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.value() < b.value(); });
  return out;
}

/// One unit of parallel smooth enumeration: all n whose largest prime factor
/// has the given rank and exponent. rank == npos denotes the single value 1.
struct SmoothPartition {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t rank = npos;
  std::uint32_t exponent = 0;
};

/// Splits the y-smooth integers up to x by (largest prime, its exponent).
/// The partitions are disjoint and their union is the full smooth set.
inline std::vector<SmoothPartition> partition_smooth(const PrimeTable& table, double x, double y) {
  const auto b = detail::smooth_bounds(table, x, y, 0.0);
  std::vector<SmoothPartition> parts{{SmoothPartition::npos, 0}};
  for (std::size_t r = 0; r < b.prime_count; ++r) {
    const std::uint64_t p = table[r];
    std::uint64_t power = p;
    for (std::uint32_t e = 1;; ++e) {
      parts.push_back({r, e});
      if (power > b.bound / p) break;
      power *= p;
    }
  }
  return parts;
}

/// Enumerates the members of one partition with lower < n <= x.
template <class Visitor>
void for_each_smooth_in(const PrimeTable& table, double x, double lower,
                        const SmoothPartition& part, Visitor&& visit) {
  const std::uint64_t bound = integer_floor(x);
  const std::uint64_t low = integer_floor(lower);
  if (part.rank == SmoothPartition::npos) {
    if (low < 1 && bound >= 1) visit(FactoredInteger{});
    return;
  }
  const std::uint64_t p = table[part.rank];
  std::uint64_t top = 1;
  for (std::uint32_t e = 0; e < part.exponent; ++e) top *= p;
  if (top > bound) return;
  // n = m * p^e with m smooth over primes below p; append p^e last to keep
  // the ascending order of factors.
  const std::uint64_t m_bound = bound / top;
  auto with_top = [&](const FactoredInteger& m) {
    std::vector<PrimePower> factors(m.factors().begin(), m.factors().end());
    factors.push_back({p, part.exponent, static_cast<std::uint32_t>(part.rank)});
    FactoredInteger n(m.value() * top, std::move(factors));
    if (n.value() > low) visit(static_cast<const FactoredInteger&>(n));
  };
  FactoredInteger m;
  with_top(m);
  detail::smooth_dfs(table.primes().first(part.rank), 0, m_bound, 0, m, with_top);
}

/// Parallel enumeration: partitions are dealt round-robin to workers and
/// `visit(worker, n)` is called from worker threads. The visited set does not
/// depend on `threads`; visiting order does.
template <class Visitor>
void for_each_smooth_parallel(const PrimeTable& table, double x, double y, double lower,
                              unsigned threads, Visitor&& visit) {
  const auto parts = partition_smooth(table, x, y);
  const unsigned workers = std::max(1u, threads);
  parallel_for(workers, workers, [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t w = begin; w < end; ++w) {
      for (std::size_t i = w; i < parts.size(); i += workers) {
        for_each_smooth_in(table, x, lower, parts[i], [&](const FactoredInteger& n) {
          visit(static_cast<unsigned>(w), n);
        });
      }
    }
  });
}

}  // namespace pseudomoment

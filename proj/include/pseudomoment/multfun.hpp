#pragma once

// Multiplicative coefficient functions g, the generalized divisor functions
// d_alpha, and the growth / density hypotheses they are checked against.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "primes.hpp"

namespace pseudomoment {

using complex = std::complex<double>;

enum class GKind { divisor, unit, zero_on_primes, table, rule };

inline const char* to_string(GKind kind) {
  switch (kind) {
    case GKind::divisor: return "divisor";
    case GKind::unit: return "unit";
    case GKind::zero_on_primes: return "zero";
    case GKind::table: return "table";
    case GKind::rule: return "rule";
  }
  return "?";
}

/// Declared growth constants: |g(n)| <= min(A n^theta, B^Omega(n)), and the
/// density alpha_density of sum_{p<=x} |g(p)|^2/p ~ alpha_density loglog x.
///
/// A = +inf means the A n^theta route is not claimed.
struct GrowthMetadata {
  double A = 1.0;
  double B = 1.0;
  double theta = 0.02;
  double alpha_density = 1.0;
};

enum class ThetaRange {
  strict,   // 0 < theta < 1/48
  relaxed,  // 0 < theta < 1/4, enough for the mixed-moment expectations
};

/// Immutable description of a multiplicative g through its prime-power
/// values. g(1) = 1 always.
class MultiplicativeSpec {
 public:
  using Rule = std::function<complex(std::uint64_t prime, std::uint32_t exponent)>;

  /// d_alpha: coefficients of zeta(s)^alpha. alpha_density defaults to |alpha|^2.
  static MultiplicativeSpec divisor(complex alpha) {
    MultiplicativeSpec s(GKind::divisor);
    s.alpha_ = alpha;
    const double mod = std::abs(alpha);
    s.meta_.B = std::max(1.0, mod);
    s.meta_.A = mod <= 1.0 ? 1.0 : std::numeric_limits<double>::infinity();
    s.meta_.alpha_density = std::norm(alpha);
    return s;
  }

  /// g == 1, the coefficients of zeta itself.
  static MultiplicativeSpec unit() {
    MultiplicativeSpec s(GKind::unit);
    s.alpha_ = 1.0;
    return s;
  }

  /// g(1) = 1 and g(n) = 0 for n > 1; the identity for Dirichlet convolution.
  static MultiplicativeSpec zero_on_primes() {
    MultiplicativeSpec s(GKind::zero_on_primes);
    s.alpha_ = 0.0;
    s.meta_.alpha_density = 0.0;
    return s;
  }

  /// Values keyed by the prime power p^j itself. Absent keys are errors.
  static MultiplicativeSpec table(std::map<std::uint64_t, complex> values, GrowthMetadata meta) {
    MultiplicativeSpec s(GKind::table);
    s.table_ = std::make_shared<const std::map<std::uint64_t, complex>>(std::move(values));
    s.meta_ = meta;
    return s;
  }

  static MultiplicativeSpec rule(Rule rule, GrowthMetadata meta) {
    MultiplicativeSpec s(GKind::rule);
    s.rule_ = std::make_shared<const Rule>(std::move(rule));
    s.meta_ = meta;
    return s;
  }

  GKind kind() const noexcept { return kind_; }
  complex alpha() const noexcept { return alpha_; }
  const GrowthMetadata& metadata() const noexcept { return meta_; }
  const std::map<std::uint64_t, complex>* table_values() const noexcept { return table_.get(); }

  MultiplicativeSpec with_metadata(GrowthMetadata meta) const {
    MultiplicativeSpec copy = *this;
    copy.meta_ = meta;
    return copy;
  }

  /// True when the local factor at every prime is 1/(1 - g(p) u).
  bool completely_multiplicative() const noexcept { return kind_ == GKind::unit; }

  /// g(p^j) for j >= 0.
  complex at_prime_power(std::uint64_t p, std::uint32_t j) const {
    if (j == 0) return 1.0;
    switch (kind_) {
      case GKind::unit: return 1.0;
      case GKind::zero_on_primes: return 0.0;
      case GKind::divisor: {
        // prod_{i<j} (alpha + i)/(i + 1), ascending; no gamma functions.
        complex value = 1.0;
        for (std::uint32_t i = 0; i < j; ++i) value *= (alpha_ + double(i)) / double(i + 1);
        return value;
      }
      case GKind::table: {
        std::uint64_t key = 1;
        for (std::uint32_t i = 0; i < j; ++i) {
          if (key > std::numeric_limits<std::uint64_t>::max() / p) {
            throw MissingValueError("g table: prime power " + std::to_string(p) + "^" +
                                    std::to_string(j) + " overflows");
          }
          key *= p;
        }
        auto it = table_->find(key);
        if (it == table_->end()) {
          throw MissingValueError("g table has no value for " + std::to_string(p) + "^" +
                                  std::to_string(j) + " = " + std::to_string(key));
        }
        return it->second;
      }
      case GKind::rule: return (*rule_)(p, j);
    }
    return 0.0;
  }

  /// Checks declared metadata ranges; throws DomainError naming the violation.
  void validate_metadata(ThetaRange range = ThetaRange::strict) const {
    detail::require(meta_.A > 0.0, "metadata A > 0");
    detail::require(meta_.B > 0.0, "metadata B > 0");
    const double cap = range == ThetaRange::strict ? 1.0 / 48.0 : 0.25;
    detail::require(meta_.theta > 0.0 && meta_.theta < cap,
                    range == ThetaRange::strict ? "metadata 0 < theta < 1/48"
                                                : "metadata 0 < theta < 1/4");
    detail::require(meta_.alpha_density >= 0.0, "metadata alpha_density >= 0");
  }

 private:
  explicit MultiplicativeSpec(GKind kind) : kind_(kind) {}

  GKind kind_;
  complex alpha_ = 1.0;
  GrowthMetadata meta_{};
  std::shared_ptr<const std::map<std::uint64_t, complex>> table_;
  std::shared_ptr<const Rule> rule_;
};

/// g(n) = prod over (p, e) of g(p^e).
inline complex eval_g(const MultiplicativeSpec& spec, const FactoredInteger& n) {
  complex value = 1.0;
  for (const auto& f : n.factors()) value *= spec.at_prime_power(f.prime, f.exponent);
  return value;
}

struct GrowthReport {
  std::uint64_t N = 0;
  double max_ratio_A = 0.0;  // max |g(n)| / (A n^theta)
  std::uint64_t argmax_A = 1;
  double max_ratio_B = 0.0;  // max |g(n)| / B^Omega(n)
  std::uint64_t argmax_B = 1;
  std::optional<std::uint64_t> first_violation;  // smallest n breaking either bound
  double minimal_B = 0.0;  // max_{1<n<=N} |g(n)|^{1/Omega(n)}: smallest feasible B
  double minimal_A = 0.0;  // max_{n<=N} |g(n)| / n^theta at the declared theta
  bool pass = false;
};

/// Exhaustive check of |g(n)| <= min(A n^theta, B^Omega(n)) over n <= N.
inline GrowthReport check_growth_condition(const MultiplicativeSpec& spec, std::uint64_t N,
                                           const PrimeTable& primes) {
  detail::require(N >= 1 && N <= 10'000'000, "check_growth_condition: 1 <= N <= 10^7");
  const auto& meta = spec.metadata();
  GrowthReport report;
  report.N = N;
  const double slack = 1.0 + 1e-12;
  for_each_smooth(primes, double(N), double(N), [&](const FactoredInteger& n) {
    const double mag = std::abs(eval_g(spec, n));
    const double nd = static_cast<double>(n.value());
    const double ratio_A = mag / (meta.A * std::pow(nd, meta.theta));
    const double ratio_B = mag / std::pow(meta.B, double(n.omega()));
    if (ratio_A > report.max_ratio_A) {
      report.max_ratio_A = ratio_A;
      report.argmax_A = n.value();
    }
    if (ratio_B > report.max_ratio_B) {
      report.max_ratio_B = ratio_B;
      report.argmax_B = n.value();
    }
    report.minimal_A = std::max(report.minimal_A, mag / std::pow(nd, meta.theta));
    if (!n.is_one()) {
      report.minimal_B = std::max(report.minimal_B, std::pow(mag, 1.0 / double(n.omega())));
    }
    if ((ratio_A > slack || ratio_B > slack) &&
        (!report.first_violation || n.value() < *report.first_violation)) {
      report.first_violation = n.value();
    }
  });
  report.pass = !report.first_violation.has_value();
  return report;
}

/// lambda_g(x) = sum_{p <= x} |g(p)|^2 / p, summed pairwise.
inline double lambda_g(const MultiplicativeSpec& spec, double x, const PrimeTable& primes) {
  primes.require_coverage(x, "lambda_g");
  if (x < 2.0) return 0.0;
  const std::size_t count = primes.count_up_to(x);
  std::vector<double> terms(count);
  for (std::size_t r = 0; r < count; ++r) {
    const double p = primes[r];
    terms[r] = std::norm(spec.at_prime_power(primes[r], 1)) / p;
  }
  return pairwise_sum(terms);
}

struct LambdaReport {
  double x = 0.0;
  double lambda = 0.0;
  double fitted_alpha = 0.0;
  double residual = 0.0;  // lambda - fitted_alpha * loglog x
};

struct LambdaFit {
  std::vector<LambdaReport> points;
  double fitted_alpha = 0.0;
  double intercept = 0.0;
};

/// Least-squares slope of lambda_g(x) against loglog x.
inline LambdaFit fit_lambda(const MultiplicativeSpec& spec, const std::vector<double>& x_grid,
                            const PrimeTable& primes) {
  detail::require(x_grid.size() >= 3, "fit_lambda: at least 3 grid points");
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    detail::require(x_grid[i] >= 16.0, "fit_lambda: grid points >= 16");
    if (i > 0) detail::require(x_grid[i] > x_grid[i - 1], "fit_lambda: grid ascending");
  }
  std::vector<double> u, lam;
  for (double x : x_grid) {
    u.push_back(std::log(std::log(x)));
    lam.push_back(lambda_g(spec, x, primes));
  }
  if (u.back() - u.front() < 1e-9) {
    throw IllConditionedError("fit_lambda: loglog x values coincide within 1e-9");
  }
  const double n = double(u.size());
  const double mean_u = std::accumulate(u.begin(), u.end(), 0.0) / n;
  const double mean_l = std::accumulate(lam.begin(), lam.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    sxy += (u[i] - mean_u) * (lam[i] - mean_l);
    sxx += (u[i] - mean_u) * (u[i] - mean_u);
  }
  LambdaFit fit;
  fit.fitted_alpha = sxy / sxx;
  fit.intercept = mean_l - fit.fitted_alpha * mean_u;
  for (std::size_t i = 0; i < u.size(); ++i) {
    fit.points.push_back(
        {x_grid[i], lam[i], fit.fitted_alpha, lam[i] - fit.fitted_alpha * u[i]});
  }
  return fit;
}

/// sum_{de = n} g_a(d) g_b(e), by walking every divisor of n.
inline complex dirichlet_convolve(const MultiplicativeSpec& a, const MultiplicativeSpec& b,
                                  const FactoredInteger& n) {
  const auto factors = n.factors();
  std::vector<std::uint32_t> exps(factors.size(), 0);
  complex total = 0.0;
  while (true) {
    std::vector<PrimePower> d_factors, e_factors;
    std::uint64_t d_value = 1;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const auto& f = factors[i];
      for (std::uint32_t k = 0; k < exps[i]; ++k) d_value *= f.prime;
      if (exps[i] > 0) d_factors.push_back({f.prime, exps[i], f.rank});
      if (exps[i] < f.exponent) e_factors.push_back({f.prime, f.exponent - exps[i], f.rank});
    }
    total += eval_g(a, FactoredInteger(d_value, std::move(d_factors))) *
             eval_g(b, FactoredInteger(n.value() / d_value, std::move(e_factors)));
    std::size_t i = 0;
    while (i < factors.size() && exps[i] == factors[i].exponent) exps[i++] = 0;
    if (i == factors.size()) break;
    ++exps[i];
  }
  return total;
}

}  // namespace pseudomoment

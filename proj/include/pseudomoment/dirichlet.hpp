#pragma once

// Dirichlet polynomials and truncated Euler products attached to g X for a
// fixed Steinhaus realization X.
//
// Sign convention: sigma is a signed shift off the half-line; every function
// here evaluates at s = 1/2 + sigma + i t. A negative sigma moves left.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "errors.hpp"
#include "multfun.hpp"
#include "primes.hpp"
#include "quadrature.hpp"
#include "steinhaus.hpp"

namespace pseudomoment {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct EulerProductParams {
  double y = 2.0;      // lower prime cutoff, inclusive
  double z = 2.0;      // upper prime cutoff, inclusive
  double sigma = 0.0;  // s = 1/2 + sigma + i t
  double t = 0.0;
  double series_tolerance = 1e-12;

  void validate(const MultiplicativeSpec& spec) const {
    detail::require(y >= 2.0, "EulerProductParams: y >= 2");
    detail::require(y <= z, "EulerProductParams: y <= z");
    detail::require(series_tolerance > 0.0 && series_tolerance <= 1e-6,
                    "EulerProductParams: series_tolerance in (0, 1e-6]");
    detail::require(0.5 + sigma > 2.0 * spec.metadata().theta,
                    "EulerProductParams: 1/2 + sigma > 2 theta");
  }
};

// --- local factors ---------------------------------------------------------

namespace detail {

// Upper bound on sum_{j > J} |g(p^j)|^k r^j, given the J-th term
// m_J = |g(p^J)|^k r^J. Returns +inf when no contracting majorant exists.
inline double local_tail(const MultiplicativeSpec& spec, double p, double r, int k,
                         std::uint32_t J, double m_J) {
  const auto& meta = spec.metadata();
  switch (spec.kind()) {
    case GKind::zero_on_primes: return 0.0;
    case GKind::unit: return r < 1.0 ? std::pow(r, double(J + 1)) / (1.0 - r) : kInfinity;
    case GKind::divisor: {
      if (m_J == 0.0 && J > 0) return 0.0;  // alpha a non-positive integer
      // |g(p^{j+1})| / |g(p^j)| = |alpha + j| / (j + 1) <= (|alpha| + j) / (j + 1),
      // which is nonincreasing in j once |alpha| >= 1 and at most 1 otherwise.
      const double rho = std::max(1.0, (std::abs(spec.alpha()) + double(J)) / double(J + 1));
      const double ratio = std::pow(rho, k) * r;
      return ratio < 1.0 ? m_J * ratio / (1.0 - ratio) : kInfinity;
    }
    case GKind::table:
    case GKind::rule: {
      double best = kInfinity;
      if (std::isfinite(meta.A)) {
        const double ratio = std::pow(p, k * meta.theta) * r;
        if (ratio < 1.0) {
          best = std::min(best, std::pow(meta.A, k) * std::pow(ratio, double(J + 1)) / (1.0 - ratio));
        }
      }
      const double ratio_b = std::pow(meta.B, k) * r;
      if (ratio_b < 1.0) best = std::min(best, std::pow(ratio_b, double(J + 1)) / (1.0 - ratio_b));
      return best;
    }
  }
  return kInfinity;
}

// Whether the terms |g(p^j)| r^j eventually contract geometrically.
inline bool local_contracts(const MultiplicativeSpec& spec, double p, double r) {
  return std::isfinite(local_tail(spec, p, r, 1, 1u << 20, 1.0)) ||
         spec.kind() == GKind::zero_on_primes;
}

}  // namespace detail

/// Coefficients c_j = g(p^j) p^{-j re_s}, j = 1..J, of one local factor,
/// truncated once the certified tail drops below the tolerance.
struct LocalSeries {
  std::uint64_t prime = 0;
  std::vector<complex> coeffs;  // c_1 .. c_J
  double truncation = 0.0;      // bound on |sum_{j > J} c_j w^j| for |w| = 1

  /// 1 + sum_j c_j w^j by Horner.
  complex evaluate(complex w) const {
    complex acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = (acc + *it) * w;
    return 1.0 + acc;
  }
};

inline LocalSeries local_series(const MultiplicativeSpec& spec, std::uint64_t p, double re_s,
                                double tolerance, std::uint32_t max_terms = 20000) {
  LocalSeries out;
  out.prime = p;
  const double pd = double(p);
  const double r = std::pow(pd, -re_s);
  if (spec.kind() == GKind::zero_on_primes) return out;
  if (!detail::local_contracts(spec, pd, r)) {
    throw DivergenceError("local factor at p = " + std::to_string(p) +
                          " has no contracting majorant at Re(s) = " + std::to_string(re_s));
  }
  for (std::uint32_t j = 1; j <= max_terms; ++j) {
    const complex g = spec.at_prime_power(p, j);
    const double rj = std::pow(pd, -re_s * double(j));
    out.coeffs.push_back(g * rj);
    const double tail = detail::local_tail(spec, pd, r, 1, j, std::abs(g) * rj);
    if (tail < tolerance) {
      out.truncation = tail;
      return out;
    }
  }
  throw DivergenceError("local factor at p = " + std::to_string(p) + " needs more than " +
                        std::to_string(max_terms) + " terms");
}

/// Two-sided bracket for sum_{j >= 0} |g(p^j)|^k p^{-j e}. upper is +inf when
/// the series has no contracting majorant.
struct AbsLocalSum {
  double lower = 1.0;
  double upper = 1.0;
};

inline AbsLocalSum abs_local_sum(const MultiplicativeSpec& spec, std::uint64_t p, double e, int k,
                                 double tolerance = 1e-14, std::uint32_t max_terms = 20000) {
  AbsLocalSum out;
  if (spec.kind() == GKind::zero_on_primes) return out;
  const double pd = double(p);
  const double r = std::pow(pd, -e);
  if (!std::isfinite(detail::local_tail(spec, pd, r, k, 1u << 20, 1.0))) {
    out.upper = kInfinity;
    // Partial sums still give a valid lower bound.
    for (std::uint32_t j = 1; j <= 64; ++j) {
      out.lower += std::pow(std::abs(spec.at_prime_power(p, j)), k) * std::pow(r, double(j));
    }
    return out;
  }
  for (std::uint32_t j = 1; j <= max_terms; ++j) {
    const double term = std::pow(std::abs(spec.at_prime_power(p, j)), k) * std::pow(r, double(j));
    out.lower += term;
    const double tail = detail::local_tail(spec, pd, r, k, j, term);
    if (tail < tolerance * out.lower) {
      out.upper = out.lower + tail;
      return out;
    }
  }
  out.upper = kInfinity;
  return out;
}

/// Upper bound for sum over P(n) <= y of |g(n)|^k n^{-e}: the product of the
/// local upper brackets.
inline double smooth_abs_sum_upper(const MultiplicativeSpec& spec, const PrimeTable& primes,
                                   double y, double e, int k) {
  if (y < 2.0) return 1.0;
  const std::size_t count = primes.count_up_to(y);
  double log_total = 0.0;
  for (std::size_t r = 0; r < count; ++r) {
    const double upper = abs_local_sum(spec, primes[r], e, k).upper;
    if (!std::isfinite(upper)) return kInfinity;
    log_total += std::log(upper);
  }
  return std::exp(log_total);
}

/// Same product, lower brackets; equals the full smooth sum when it converges.
inline double smooth_abs_sum_lower(const MultiplicativeSpec& spec, const PrimeTable& primes,
                                   double y, double e, int k) {
  if (y < 2.0) return 1.0;
  const std::size_t count = primes.count_up_to(y);
  double log_total = 0.0;
  for (std::size_t r = 0; r < count; ++r) {
    log_total += std::log(abs_local_sum(spec, primes[r], e, k).lower);
  }
  return std::exp(log_total);
}

// --- Euler products ---------------------------------------------------------

struct EulerProductValue {
  complex value = 1.0;
  /// Bound on |log(exact) - log(value)| from truncating the local series;
  /// the relative error of `value` is at most expm1 of this.
  double truncation_bound = 0.0;
};

/// Precomputed local series for the primes in [prime_lo, prime_hi] at a fixed
/// shift; evaluates prod_p F_p(1/2 + sigma + i t) for any realization and t.
class EulerProductEvaluator {
 public:
  EulerProductEvaluator(const MultiplicativeSpec& spec, const PrimeTable& primes, double prime_lo,
                        double prime_hi, double sigma, double series_tolerance = 1e-12)
      : sigma_(sigma) {
    detail::require(0.5 + sigma > 2.0 * spec.metadata().theta,
                    "euler product: 1/2 + sigma > 2 theta");
    detail::require(series_tolerance > 0.0, "euler product: series_tolerance > 0");
    if (prime_hi < 2.0 || prime_lo > prime_hi) return;
    auto [first, last] = primes.rank_range(prime_lo, prime_hi);
    first_rank_ = first;
    for (std::size_t r = first; r < last; ++r) {
      factors_.push_back(local_series(spec, primes[r], 0.5 + sigma, series_tolerance));
      log_p_.push_back(std::log(double(primes[r])));
    }
  }

  std::size_t first_rank() const noexcept { return first_rank_; }
  std::size_t prime_count() const noexcept { return factors_.size(); }
  double sigma() const noexcept { return sigma_; }
  const std::vector<LocalSeries>& factors() const noexcept { return factors_; }

  /// Product at s = 1/2 + sigma + i t using the angles of `sample`.
  EulerProductValue evaluate(const SteinhausSample& sample, double t) const {
    if (first_rank_ + factors_.size() > sample.prime_count()) {
      throw CoverageError("euler product: sample does not cover the prime window");
    }
    return evaluate_angles(std::span(sample.angles()).subspan(first_rank_, factors_.size()), t);
  }

  /// Same, from the angles of the window's primes in rank order.
  EulerProductValue evaluate_angles(std::span<const double> angles, double t) const {
    EulerProductValue out;
    double log_error = 0.0;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const complex w = std::polar(1.0, angles[i] - t * log_p_[i]);
      const complex f = factors_[i].evaluate(w);
      out.value *= f;
      const double eps = factors_[i].truncation;
      if (eps > 0.0) {
        const double room = std::abs(f) - eps;
        log_error += room > 0.0 ? eps / room : kInfinity;
      }
    }
    out.truncation_bound = log_error;
    return out;
  }

 private:
  double sigma_;
  std::size_t first_rank_ = 0;
  std::vector<LocalSeries> factors_;
  std::vector<double> log_p_;
};

/// prod_{prime_lo <= p <= prime_hi} (1 + sum_j g(p^j) X(p)^j p^{-j s}),
/// s = 1/2 + sigma + i t.
inline EulerProductValue euler_product_G(const MultiplicativeSpec& spec,
                                         const SteinhausSample& sample, const PrimeTable& primes,
                                         double prime_lo, double prime_hi, double sigma, double t,
                                         double series_tolerance = 1e-12) {
  EulerProductEvaluator evaluator(spec, primes, prime_lo, prime_hi, sigma, series_tolerance);
  return evaluator.evaluate(sample, t);
}

// --- Dirichlet polynomials ---------------------------------------------------

namespace detail {

inline complex n_power_minus_s(std::uint64_t n, double sigma, double t) {
  const double log_n = std::log(double(n));
  return std::polar(std::exp(-(0.5 + sigma) * log_n), -t * log_n);
}

inline void require_sample_covers(const SteinhausSample& sample, const PrimeTable& primes,
                                  double y, const char* who) {
  if (y >= 2.0 && sample.prime_count() < primes.count_up_to(y)) {
    throw CoverageError(std::string(who) + ": sample does not cover primes <= " +
                        std::to_string(y));
  }
}

}  // namespace detail

/// sum_{n <= x} g(n) X(n) n^{-(1/2 + sigma + i t)}.
inline complex partial_sum(const MultiplicativeSpec& spec, const SteinhausSample& sample,
                           const PrimeTable& primes, double x, double sigma, double t) {
  detail::require(x >= 1.0, "partial_sum: x >= 1");
  if (x < 2.0) return 1.0;
  detail::require_sample_covers(sample, primes, x, "partial_sum");
  complex total = 0.0;
  for_each_smooth(primes, x, x, [&](const FactoredInteger& n) {
    total += eval_g(spec, n) * eval_X(sample, n) * detail::n_power_minus_s(n.value(), sigma, t);
  });
  return total;
}

/// Precomputed sum_{n <= N} c_n X(n) with c_n = g(n) n^{-1/2 - sigma} for
/// fast Monte Carlo. X(n) is built as X(n / P(n)) X(P(n)) in increasing n, so
/// one realization costs one complex multiply-add per n.
class PartialSumPlan {
 public:
  PartialSumPlan(const MultiplicativeSpec& spec, const PrimeTable& primes, double x_max,
                 double sigma = 0.0)
      : limit_(integer_floor(x_max)) {
    detail::require(x_max >= 1.0, "PartialSumPlan: x >= 1");
    if (limit_ > 100'000'000) throw ResourceError("PartialSumPlan: x above 1e8");
    coeff_.resize(limit_);
    parent_.resize(limit_);
    rank_.resize(limit_);
    coeff_[0] = 1.0;
    if (limit_ >= 2) {
      prime_count_ = primes.count_up_to(double(limit_));
      for_each_smooth(primes, double(limit_), double(limit_), [&](const FactoredInteger& n) {
        const std::size_t i = n.value() - 1;
        coeff_[i] = eval_g(spec, n) * std::exp(-(0.5 + sigma) * std::log(double(n.value())));
        if (i > 0) {
          const auto& top = n.factors().back();
          parent_[i] = static_cast<std::uint32_t>(n.value() / top.prime - 1);
          rank_[i] = top.rank;
        }
      });
    }
  }

  std::uint64_t limit() const noexcept { return limit_; }
  std::size_t prime_count() const noexcept { return prime_count_; }

  /// Evaluates the partial sums at each cutoff (ascending, <= limit) for the
  /// realization units[r] = X(p_r). `scratch` is resized as needed.
  void evaluate(std::span<const complex> units, std::span<const std::uint64_t> cutoffs,
                std::span<complex> out, std::vector<complex>& scratch) const {
    scratch.resize(limit_);
    complex* X = scratch.data();
    X[0] = 1.0;
    complex sum = coeff_[0];
    std::size_t next = 0;
    auto flush = [&](std::uint64_t n) {
      while (next < cutoffs.size() && cutoffs[next] == n) out[next++] = sum;
    };
    while (next < cutoffs.size() && cutoffs[next] < 1) out[next++] = 0.0;
    flush(1);
    for (std::uint64_t i = 1; i < limit_; ++i) {
      X[i] = X[parent_[i]] * units[rank_[i]];
      sum += coeff_[i] * X[i];
      flush(i + 1);
    }
  }

 private:
  std::uint64_t limit_;
  std::size_t prime_count_ = 0;
  std::vector<complex> coeff_;
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> rank_;
};

struct TailSum {
  complex value = 0.0;
  /// Bound on the discarded sum over n > cap (Rankin with delta = 1/log y);
  /// +inf when the Rankin series diverges.
  double tail_bound = 0.0;
};

/// sum over z < n <= cap with P(n) <= y of g(n) X(n) n^{-s}, plus a bound on
/// what the cap discards: cap^{-delta/2} sum_{P(n)<=y} |g(n)| n^{-1/2-sigma+delta/2}.
inline TailSum restricted_tail_sum(const MultiplicativeSpec& spec, const SteinhausSample& sample,
                                   const PrimeTable& primes, double z, double y, double cap,
                                   double sigma, double t) {
  detail::require(y >= 2.0, "restricted_tail_sum: y >= 2");
  detail::require(cap >= 1.0, "restricted_tail_sum: cap >= 1");
  TailSum out;
  const double delta = 1.0 / std::log(y);
  const double e = 0.5 + sigma - 0.5 * delta;
  out.tail_bound = std::pow(cap, -0.5 * delta) * smooth_abs_sum_upper(spec, primes, y, e, 1);
  if (z >= cap) return out;
  detail::require_sample_covers(sample, primes, std::min(y, cap), "restricted_tail_sum");
  for_each_smooth(primes, cap, y, std::max(z, 0.0), [&](const FactoredInteger& n) {
    out.value += eval_g(spec, n) * eval_X(sample, n) * detail::n_power_minus_s(n.value(), sigma, t);
  });
  return out;
}

// --- window integrals ---------------------------------------------------------

struct WindowIntegral {
  double value = 0.0;
  std::size_t nodes = 0;
  bool converged = false;  // false: the 2^14-node cap was hit (accuracy warning)
  double relative_change = 0.0;
};

/// integral_T^{2T} |prod_{p <= prime_hi} F_p(1/2 + sigma + i t)|^2 dt for one
/// realization, by composite Gauss-Legendre with node doubling.
class WindowIntegrator {
 public:
  WindowIntegrator(const MultiplicativeSpec& spec, const PrimeTable& primes, double prime_hi,
                   double sigma, double rel_tol = 1e-6, std::size_t max_nodes = 1u << 14)
      : product_(spec, primes, 2.0, prime_hi, sigma),
        rel_tol_(rel_tol),
        max_nodes_(max_nodes),
        log_hi_(std::log(std::max(prime_hi, 2.0))) {}

  const EulerProductEvaluator& product() const noexcept { return product_; }

  WindowIntegral integrate(const SteinhausSample& sample, double T) const {
    detail::require(T > 0.0, "window_integral_H: T > 0");
    const bool trivial = std::all_of(product_.factors().begin(), product_.factors().end(),
                                     [](const LocalSeries& f) { return f.coeffs.empty(); });
    if (trivial) return {T, 0, true, 0.0};  // integrand is identically 1
    auto integrand = [&](double t) { return std::norm(product_.evaluate(sample, t).value); };
    // Roughly one panel per two cycles of the fastest frequency log(prime_hi).
    const double cycles = T * log_hi_ / (2.0 * std::numbers::pi);
    std::size_t panels = 1;
    while (double(panels) < cycles / 2.0) panels *= 2;
    auto r = quadrature::integrate_doubling(integrand, T, 2.0 * T, rel_tol_, max_nodes_, 16, panels);
    return {r.value, r.nodes, r.converged, r.relative_change};
  }

 private:
  EulerProductEvaluator product_;
  double rel_tol_;
  std::size_t max_nodes_;
  double log_hi_;
};

inline WindowIntegral window_integral_H(const MultiplicativeSpec& spec,
                                        const SteinhausSample& sample, const PrimeTable& primes,
                                        double prime_hi, double sigma, double T,
                                        std::size_t max_nodes = 1u << 14) {
  return WindowIntegrator(spec, primes, prime_hi, sigma, 1e-6, max_nodes).integrate(sample, T);
}

// --- Plancherel ----------------------------------------------------------------

struct Coefficient {
  std::uint64_t n;
  complex a;
};
using CoefficientVector = std::vector<Coefficient>;

struct PlancherelReport {
  double lhs = 0.0;         // closed form of int_0^inf |sum_{n<=u} a_n|^2 u^{-1-2 sigma} du
  double rhs = 0.0;         // (1/2pi) int_{|t|<=t_max} |A(sigma+it)/(sigma+it)|^2 dt
  double tail_bound = 0.0;  // (sum |a_n| n^{-sigma})^2 / (pi t_max)
  double quadrature_error = 0.0;
  bool pass = false;
};

/// Closed-form left side: piecewise-constant partial sums integrated exactly.
inline double plancherel_lhs(CoefficientVector coeffs, double sigma) {
  detail::require(sigma > 0.0, "plancherel: sigma > 0");
  std::sort(coeffs.begin(), coeffs.end(), [](const auto& l, const auto& r) { return l.n < r.n; });
  double lhs = 0.0;
  complex partial = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    partial += coeffs[i].a;
    const double here = std::pow(double(coeffs[i].n), -2.0 * sigma);
    const double next = i + 1 < coeffs.size() ? std::pow(double(coeffs[i + 1].n), -2.0 * sigma) : 0.0;
    lhs += std::norm(partial) * (here - next) / (2.0 * sigma);
  }
  return lhs;
}

inline PlancherelReport plancherel_check(const CoefficientVector& coeffs, double sigma,
                                         double t_max, double tol) {
  detail::require(sigma > 0.0, "plancherel: sigma > 0");
  detail::require(t_max > 0.0, "plancherel: t_max > 0");
  detail::require(tol > 0.0, "plancherel: tol > 0");
  std::vector<std::uint64_t> support;
  for (const auto& c : coeffs) {
    detail::require(c.n >= 1, "plancherel: coefficient indices n >= 1");
    support.push_back(c.n);
  }
  std::sort(support.begin(), support.end());
  detail::require(std::adjacent_find(support.begin(), support.end()) == support.end(),
                  "plancherel: coefficient indices distinct");

  PlancherelReport out;
  out.lhs = plancherel_lhs(coeffs, sigma);
  if (coeffs.empty()) {
    out.pass = true;
    return out;
  }
  std::vector<complex> scaled;
  std::vector<double> log_n;
  double mass = 0.0;
  for (const auto& c : coeffs) {
    const double ln = std::log(double(c.n));
    scaled.push_back(c.a * std::exp(-sigma * ln));
    log_n.push_back(ln);
    mass += std::abs(c.a) * std::exp(-sigma * ln);
  }
  auto integrand = [&](double t) {
    complex A = 0.0;
    for (std::size_t i = 0; i < scaled.size(); ++i) A += scaled[i] * std::polar(1.0, -t * log_n[i]);
    return std::norm(A) / (sigma * sigma + t * t);
  };
  // Panels grow geometrically from the peak at t = 0 up to about one cycle of
  // the fastest frequency, then stay at that width.
  const double top_frequency = *std::max_element(log_n.begin(), log_n.end());
  const double cycle = top_frequency > 0.0 ? 2.0 * std::numbers::pi / top_frequency : kInfinity;
  std::vector<double> half{0.0};
  while (half.back() < t_max) {
    const double step = std::min(std::max(half.back(), sigma), cycle);
    half.push_back(std::min(t_max, half.back() + step));
  }
  std::vector<double> breaks;
  for (auto it = half.rbegin(); it != half.rend(); ++it) breaks.push_back(-*it);
  breaks.insert(breaks.end(), half.begin() + 1, half.end());
  auto quad = quadrature::integrate_adaptive(integrand, breaks, 1e-3 * tol, 1e-12);
  out.rhs = quad.value / (2.0 * std::numbers::pi);
  out.quadrature_error = quad.error / (2.0 * std::numbers::pi);
  out.tail_bound = mass * mass / (std::numbers::pi * t_max);
  out.pass = std::abs(out.lhs - out.rhs) <= tol + out.tail_bound;
  return out;
}

}  // namespace pseudomoment

#pragma once

// Expectations of random Euler products: the closed-form mixed-moment
// prediction and the quadrature oracles it is judged against.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "dirichlet.hpp"
#include "errors.hpp"
#include "multfun.hpp"
#include "parallel.hpp"
#include "primes.hpp"

namespace pseudomoment {

inline constexpr double kDefaultBudgetCalibration = 10.0;

/// E[|F(1/2 + sigma)|^{2a} |F(1/2 + sigma + i t)|^{2b}] for F the Euler
/// product over primes in [params.y, params.z].
struct MixedMomentRequest {
  EulerProductParams params;
  double a = 0.0;
  double b = 0.0;

  void validate(const MultiplicativeSpec& spec) const {
    params.validate(spec);
    detail::require(std::abs(a) <= 10.0 && std::abs(b) <= 10.0, "mixed moment: |a|, |b| <= 10");
    if (params.z > 1.0) {
      detail::require(params.sigma >= -10.0 / std::log(params.z),
                      "mixed moment: sigma >= -10 / log z");
    }
  }
};

struct MixedMomentResult {
  /// sum_{y<=p<=z} (a^2 + b^2 + 2ab cos(t log p)) |g(p)|^2 / p^{1 + 2 sigma}
  double log_main = 0.0;
  /// c y^{-(1 - 4 theta)} / log y
  double error_budget = 0.0;

  double prediction() const { return std::exp(log_main); }
};

inline MixedMomentResult mixed_moment_formula(const MultiplicativeSpec& spec,
                                              const PrimeTable& primes,
                                              const MixedMomentRequest& request,
                                              double calibration = kDefaultBudgetCalibration) {
  request.validate(spec);
  const auto& P = request.params;
  primes.require_coverage(P.z, "mixed_moment_formula");
  const double a = request.a, b = request.b;
  auto [first, last] = primes.rank_range(P.y, P.z);
  std::vector<double> terms;
  terms.reserve(last - first);
  for (std::size_t r = first; r < last; ++r) {
    const double p = primes[r];
    const double lp = std::log(p);
    const double weight = a * a + b * b + 2.0 * a * b * std::cos(P.t * lp);
    terms.push_back(weight * std::norm(spec.at_prime_power(primes[r], 1)) *
                    std::exp(-(1.0 + 2.0 * P.sigma) * lp));
  }
  MixedMomentResult out;
  out.log_main = pairwise_sum(terms);
  out.error_budget = calibration * std::pow(P.y, -(1.0 - 4.0 * spec.metadata().theta)) / std::log(P.y);
  return out;
}

struct SinglePrimeExpectation {
  double value = 1.0;
  std::size_t nodes = 0;
  double relative_change = 0.0;
  bool converged = true;
};

namespace detail {

struct LocalPair {
  LocalSeries series;
  double shift;  // t log p
};

inline void require_power_of_two(std::size_t n, std::size_t minimum, const char* what) {
  require(n >= minimum && std::has_single_bit(n), what);
}

}  // namespace detail

/// (1/2pi) int_0^{2pi} |F_p(theta)|^{2a} |F_p(theta - t log p)|^{2b} dtheta with
/// F_p(theta) = 1 + sum_j g(p^j) e^{i j theta} p^{-j(1/2 + sigma)}, by the
/// periodic trapezoid rule with node doubling to `rel_tol`.
///
/// With a < 0 or b < 0 the quadrature refuses (SingularIntegrandError) when
/// |F_p| drops below 1e-6 anywhere on the grid.
inline SinglePrimeExpectation single_prime_expectation(const MultiplicativeSpec& spec,
                                                       std::uint64_t p, double sigma, double t,
                                                       double a, double b,
                                                       std::size_t nodes = 64,
                                                       double rel_tol = 1e-9,
                                                       std::size_t max_nodes = 1u << 16,
                                                       double series_tolerance = 1e-14) {
  detail::require_power_of_two(nodes, 64, "single_prime_expectation: nodes a power of two >= 64");
  detail::require(0.5 + sigma > 2.0 * spec.metadata().theta,
                  "single_prime_expectation: 1/2 + sigma > 2 theta");
  SinglePrimeExpectation out;
  if (a == 0.0 && b == 0.0) {
    out.nodes = nodes;
    return out;
  }
  const LocalSeries series = local_series(spec, p, 0.5 + sigma, series_tolerance);
  const double shift = t * std::log(double(p));
  const bool guard = a < 0.0 || b < 0.0;
  constexpr double kVanishing = 1e-6;

  auto integrand = [&](double theta) {
    const double n1 = a != 0.0 ? std::norm(series.evaluate(std::polar(1.0, theta))) : 1.0;
    const double n2 = b != 0.0 ? std::norm(series.evaluate(std::polar(1.0, theta - shift))) : 1.0;
    if (guard && ((a < 0.0 && n1 < kVanishing * kVanishing) ||
                  (b < 0.0 && n2 < kVanishing * kVanishing))) {
      throw SingularIntegrandError("single_prime_expectation: |F_p| < 1e-6 on the grid at p = " +
                                   std::to_string(p) + " with a negative exponent");
    }
    double log_value = 0.0;
    if (a != 0.0) log_value += a * std::log(n1);
    if (b != 0.0) log_value += b * std::log(n2);
    return std::exp(log_value);
  };

  // Level N sum; the 2N grid adds the odd nodes of the finer grid.
  double sum = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) sum += integrand(kTwoPi * double(k) / double(nodes));
  double estimate = sum / double(nodes);
  std::size_t n = nodes;
  out.converged = false;
  while (2 * n <= max_nodes) {
    double odd = 0.0;
    for (std::size_t k = 0; k < n; ++k) odd += integrand(kTwoPi * (double(k) + 0.5) / double(n));
    sum += odd;
    n *= 2;
    const double refined = sum / double(n);
    out.relative_change = std::abs(refined - estimate) / std::max(std::abs(refined), 1e-300);
    estimate = refined;
    if (out.relative_change <= rel_tol) {
      out.converged = true;
      break;
    }
  }
  out.value = estimate;
  out.nodes = n;
  return out;
}

struct ProductExpectation {
  double value = 1.0;
  double log_value = 0.0;
  std::size_t prime_count = 0;
  double max_relative_change = 0.0;  // worst per-prime quadrature change
  bool converged = true;
};

/// prod over primes in [y, z] of single_prime_expectation: exact expectation
/// by independence of the X(p), up to the reported quadrature change.
inline ProductExpectation product_expectation_oracle(const MultiplicativeSpec& spec,
                                                     const PrimeTable& primes,
                                                     const MixedMomentRequest& request,
                                                     std::size_t nodes = 64) {
  request.validate(spec);
  const auto& P = request.params;
  primes.require_coverage(P.z, "product_expectation_oracle");
  auto [first, last] = primes.rank_range(P.y, P.z);
  ProductExpectation out;
  std::vector<double> logs;
  for (std::size_t r = first; r < last; ++r) {
    auto e = single_prime_expectation(spec, primes[r], P.sigma, P.t, request.a, request.b, nodes);
    logs.push_back(std::log(e.value));
    out.max_relative_change = std::max(out.max_relative_change, e.relative_change);
    out.converged = out.converged && e.converged;
  }
  out.prime_count = logs.size();
  out.log_value = pairwise_sum(logs);
  out.value = std::exp(out.log_value);
  return out;
}

struct BruteForceResult {
  double x = 0.0;
  std::size_t grid_m = 0;
  std::vector<double> q;
  std::vector<double> value;        // tensor trapezoid on grid_m points per angle
  std::vector<double> coarse_value; // same on grid_m / 2 (the even sub-grid)
  std::vector<double> grid_error;   // |value - coarse_value|
};

/// Exhaustive E|sum_{n<=x} g(n) X(n) / sqrt(n)|^{2q} for x <= 12: tensor
/// product trapezoid over the angles of the (at most five) primes <= x.
///
/// The outermost angle is split across workers; per-slice sums are reduced
/// pairwise in index order, so the result does not depend on `threads`.
inline BruteForceResult brute_force_pseudomoment(const MultiplicativeSpec& spec,
                                                 const PrimeTable& primes, double x,
                                                 std::vector<double> qs, std::size_t grid_m,
                                                 unsigned threads = 1) {
  detail::require(x >= 1.0, "brute_force_pseudomoment: x >= 1");
  detail::require_power_of_two(grid_m, 16, "brute_force_pseudomoment: grid_m a power of two >= 16");
  for (double q : qs) detail::require(q > 0.0, "brute_force_pseudomoment: q > 0");
  const std::size_t dims = x < 2.0 ? 0 : primes.count_up_to(x);
  if (dims > 5) {
    throw DimensionalityError("brute_force_pseudomoment: " + std::to_string(dims) +
                              " primes <= x exceed the cap of 5");
  }
  BruteForceResult out;
  out.x = x;
  out.grid_m = grid_m;
  out.q = qs;
  const std::size_t nq = qs.size();
  if (dims == 0) {
    out.value.assign(nq, 1.0);
    out.coarse_value.assign(nq, 1.0);
    out.grid_error.assign(nq, 0.0);
    return out;
  }

  struct Term {
    complex c;
    std::uint32_t e[5];
  };
  std::vector<Term> rest, last;  // split by whether the last prime divides n
  for_each_smooth(primes, x, x, [&](const FactoredInteger& n) {
    Term term{eval_g(spec, n) / std::sqrt(double(n.value())), {0, 0, 0, 0, 0}};
    for (const auto& f : n.factors()) term.e[f.rank] = f.exponent;
    (term.e[dims - 1] > 0 ? last : rest).push_back(term);
  });

  const std::size_t m = grid_m, mask = m - 1;
  std::vector<complex> roots(m);
  for (std::size_t j = 0; j < m; ++j) roots[j] = std::polar(1.0, kTwoPi * double(j) / double(m));

  // slices[k0 * 2nq + ...]: fine sums then coarse sums for outer index k0.
  std::vector<double> slices(m * 2 * nq, 0.0);
  parallel_for(m, threads, [&](std::size_t begin, std::size_t end, unsigned) {
    std::vector<std::size_t> idx(dims, 0);
    std::vector<std::size_t> base_rest(rest.size()), base_last(last.size());
    std::vector<double> fine(nq), fine_c(nq), coarse(nq), coarse_c(nq);
    auto neumaier = [](double& s, double& c, double v) {
      const double t = s + v;
      c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
      s = t;
    };
    for (std::size_t k0 = begin; k0 < end; ++k0) {
      std::fill(fine.begin(), fine.end(), 0.0);
      std::fill(fine_c.begin(), fine_c.end(), 0.0);
      std::fill(coarse.begin(), coarse.end(), 0.0);
      std::fill(coarse_c.begin(), coarse_c.end(), 0.0);
      // Odometer over the middle dimensions 1 .. dims-2; dims-1 is innermost.
      std::fill(idx.begin(), idx.end(), 0);
      idx[0] = k0;
      const std::size_t outer_dims = dims - 1;
      while (true) {
        bool outer_even = true;
        for (std::size_t d = 0; d < outer_dims; ++d) outer_even = outer_even && idx[d] % 2 == 0;
        complex s_rest = 0.0;
        for (std::size_t i = 0; i < rest.size(); ++i) {
          std::size_t phase = 0;
          for (std::size_t d = 0; d < outer_dims; ++d) phase += rest[i].e[d] * idx[d];
          s_rest += rest[i].c * roots[phase & mask];
        }
        for (std::size_t i = 0; i < last.size(); ++i) {
          std::size_t phase = 0;
          for (std::size_t d = 0; d < outer_dims; ++d) phase += last[i].e[d] * idx[d];
          base_last[i] = phase;
        }
        // With one prime the outer index is the innermost one.
        const std::size_t kl_begin = dims == 1 ? k0 : 0, kl_end = dims == 1 ? k0 + 1 : m;
        for (std::size_t kl = kl_begin; kl < kl_end; ++kl) {
          complex s = s_rest;
          for (std::size_t i = 0; i < last.size(); ++i) {
            s += last[i].c * roots[(base_last[i] + last[i].e[dims - 1] * kl) & mask];
          }
          const double log_norm = std::log(std::norm(s));
          const bool even = outer_even && kl % 2 == 0;
          for (std::size_t j = 0; j < nq; ++j) {
            const double v = std::exp(qs[j] * log_norm);
            neumaier(fine[j], fine_c[j], v);
            if (even) neumaier(coarse[j], coarse_c[j], v);
          }
        }
        // Advance dimensions 1 .. outer_dims-1.
        std::size_t d = 1;
        while (d < outer_dims && ++idx[d] == m) idx[d++] = 0;
        if (d >= outer_dims) break;
      }
      for (std::size_t j = 0; j < nq; ++j) {
        slices[k0 * 2 * nq + j] = fine[j] + fine_c[j];
        slices[k0 * 2 * nq + nq + j] = coarse[j] + coarse_c[j];
      }
    }
  });

  const double fine_points = std::pow(double(m), double(dims));
  const double coarse_points = std::pow(double(m / 2), double(dims));
  std::vector<double> column(m);
  for (std::size_t j = 0; j < nq; ++j) {
    for (std::size_t k0 = 0; k0 < m; ++k0) column[k0] = slices[k0 * 2 * nq + j];
    const double fine_total = pairwise_sum(column) / fine_points;
    for (std::size_t k0 = 0; k0 < m; ++k0) column[k0] = slices[k0 * 2 * nq + nq + j];
    const double coarse_total = pairwise_sum(column) / coarse_points;
    out.value.push_back(fine_total);
    out.coarse_value.push_back(coarse_total);
    out.grid_error.push_back(std::abs(fine_total - coarse_total));
  }
  return out;
}

inline BruteForceResult brute_force_pseudomoment(const MultiplicativeSpec& spec,
                                                 const PrimeTable& primes, double x, double q,
                                                 std::size_t grid_m, unsigned threads = 1) {
  return brute_force_pseudomoment(spec, primes, x, std::vector<double>{q}, grid_m, threads);
}

}  // namespace pseudomoment

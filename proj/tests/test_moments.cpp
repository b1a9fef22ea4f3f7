#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "pseudomoment/expectations.hpp"
#include "pseudomoment/moments.hpp"

using namespace pseudomoment;

namespace {

const PrimeTable& table() {
  static const PrimeTable t = sieve_primes(1'000'000);
  return t;
}

double orthogonality_sum(const MultiplicativeSpec& g, std::uint64_t x) {
  double total = 0.0;
  for (std::uint64_t n = 1; n <= x; ++n) total += std::norm(eval_g(g, factorize(n, table()))) / double(n);
  return total;
}

double harmonic(std::uint64_t x) {
  double h = 0.0;
  for (std::uint64_t n = 1; n <= x; ++n) h += 1.0 / double(n);
  return h;
}

}  // namespace

TEST(Estimate, ZeroOnPrimesIsExact) {
  const auto e = estimate_pseudomoment(MultiplicativeSpec::zero_on_primes(), table(), 1000, 0.37, 500, 1);
  EXPECT_EQ(e.mean, 1.0);
  EXPECT_EQ(e.std_error, 0.0);
  EXPECT_EQ(e.samples, 500u);
  EXPECT_EQ(e.master_seed, 1u);
}

TEST(Estimate, HarmonicSumAtTwenty) {
  EXPECT_NEAR(harmonic(20), 3.597739657143682, 1e-14);
  const auto e = estimate_pseudomoment(MultiplicativeSpec::unit(), table(), 20, 1.0, 100000, kDefaultSeed);
  EXPECT_LE(std::abs(e.mean - harmonic(20)), 3 * e.std_error);
}

TEST(Estimate, OrthogonalityIdentity) {
  for (const auto& g : {MultiplicativeSpec::unit(), MultiplicativeSpec::divisor(0.5), MultiplicativeSpec::divisor(2.0)}) {
    for (std::uint64_t x : {12u, 20u, 50u}) {
      const auto e = estimate_pseudomoment(g, table(), double(x), 1.0, 100000, 99);
      EXPECT_LE(std::abs(e.mean - orthogonality_sum(g, x)), 3.5 * e.std_error) << "x = " << x;
    }
  }
}

TEST(Estimate, AgreesWithBruteForce) {
  const auto g = MultiplicativeSpec::divisor(0.5);
  const auto r = brute_force_pseudomoment(g, table(), 11, {0.2, 0.3, 0.5}, 32);
  const auto norms = sample_partial_sum_norms(g, table(), {11}, 100000, kDefaultSeed);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto e = moment_from_norms(norms, 0, r.q[i]);
    EXPECT_LE(std::abs(e.mean - r.value[i]), 3.5 * e.std_error + r.grid_error[i]) << "q = " << r.q[i];
  }
}

TEST(Estimate, DeterministicAcrossThreadCounts) {
  const auto g = MultiplicativeSpec::divisor(complex(0.6, 0.1));
  const auto a = estimate_pseudomoment(g, table(), 3000, 0.4, 3000, 5, 1);
  const auto b = estimate_pseudomoment(g, table(), 3000, 0.4, 3000, 5, 4);
  const auto c = estimate_pseudomoment(g, table(), 3000, 0.4, 3000, 5, 7);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.mean, c.mean);
  EXPECT_EQ(a.std_error, c.std_error);
  EXPECT_NE(a.mean, estimate_pseudomoment(g, table(), 3000, 0.4, 3000, 6, 1).mean);
}

TEST(Estimate, PowerMeansIncreaseOnOneSampleSet) {
  const auto norms = sample_partial_sum_norms(MultiplicativeSpec::divisor(0.8), table(), {500}, 5000, 3);
  double previous = 0.0;
  for (double q : {0.1, 0.2, 0.35, 0.5, 0.75, 1.0}) {
    const double power_mean = std::pow(moment_from_norms(norms, 0, q).mean, 1.0 / q);
    EXPECT_GE(power_mean, previous) << "q = " << q;
    previous = power_mean;
  }
}

TEST(Estimate, Preconditions) {
  const auto u = MultiplicativeSpec::unit();
  EXPECT_THROW(estimate_pseudomoment(u, table(), 20, 1.5, 1000, 1), DomainError);
  EXPECT_THROW(estimate_pseudomoment(u, table(), 20, 0.0, 1000, 1), DomainError);
  EXPECT_THROW(estimate_pseudomoment(u, table(), 20, 0.5, 99, 1), DomainError);
  EXPECT_THROW(estimate_pseudomoment(u, sieve_primes(100), 200, 0.5, 100, 1), CoverageError);
}

TEST(Depth, FloorOfTripleLog) {
  EXPECT_EQ(truncation_depth(2), 0);
  EXPECT_EQ(truncation_depth(1e6), 0);  // log log 1e6 = 2.63 < e
  EXPECT_EQ(truncation_depth(std::exp(std::exp(std::exp(1.0))) * 1.01), 1);
  EXPECT_EQ(truncation_depth(1e100), 1);
  EXPECT_EQ(truncation_depth(1.7e308), 1);  // K = 2 needs x > e^1618
  EXPECT_THROW(truncation_depth(std::numeric_limits<double>::infinity()), DomainError);
}

TEST(Window, ZeroOnPrimesAndLinearity) {
  WindowMomentRequest r{0, 1e4, 0.0, 2.5, 0.5};
  const auto z = estimate_window_moment(r, MultiplicativeSpec::zero_on_primes(), table(), 50, 1);
  EXPECT_EQ(z.estimate.mean, std::pow(2.5, 0.5));
  EXPECT_EQ(z.estimate.std_error, 0.0);

  // At q = 1/2 the estimate is the mean of square roots of the per-sample integrals.
  WindowMomentRequest small{0, 50, 0.0, 3.0, 0.5};
  const auto g = MultiplicativeSpec::divisor(0.5);
  const auto e = estimate_window_moment(small, g, table(), 20, 4, 1);
  const WindowIntegrator integrator(g, table(), 50, 0.0);
  double direct = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    direct += std::sqrt(integrator.integrate(sample_up_to(table(), 50, 4, i), 3.0).value);
  }
  EXPECT_NEAR(e.estimate.mean, direct / 20, 1e-14 * direct);
  EXPECT_EQ(e.unconverged, 0u);
}

TEST(Window, SinglePrimeAgainstNestedQuadrature) {
  // H = 1/(1 - X(2) 2^{-1/2 - it}) for x = 2, k = 0, unit g.
  const WindowMomentRequest r{0, 2.0, 0.0, 1.0, 0.5};
  const auto e = estimate_window_moment(r, MultiplicativeSpec::unit(), table(), 10000, kDefaultSeed);
  auto inner = [](double theta) {
    const std::size_t M = 2000;
    const double h = 1.0 / M;
    auto f = [&](double t) {
      return 1.0 / std::norm(1.0 - std::polar(std::pow(2.0, -0.5), theta - t * std::log(2.0)));
    };
    double s = 0.5 * (f(1.0) + f(2.0));
    for (std::size_t k = 1; k < M; ++k) s += f(1.0 + h * double(k));
    return s * h;
  };
  double oracle = 0.0;
  const std::size_t N = 512;
  for (std::size_t k = 0; k < N; ++k) oracle += std::sqrt(inner(kTwoPi * double(k) / N));
  oracle /= N;
  EXPECT_LE(std::abs(e.estimate.mean - oracle), 3 * e.estimate.std_error);
}

TEST(Window, RequestInvariants) {
  const auto u = MultiplicativeSpec::unit();
  EXPECT_THROW(estimate_window_moment({0, 1e4, 0, 1, 0.6}, u, table(), 10, 1), DomainError);
  EXPECT_THROW(estimate_window_moment({0, 1e4, -0.3, 1, 0.5}, u, table(), 10, 1), DomainError);
  EXPECT_THROW(estimate_window_moment({2, 1e4, 0, 1, 0.5}, u, table(), 10, 1), DomainError);
  EXPECT_THROW(estimate_window_moment({0, 1e4, 0, 0, 0.5}, u, table(), 10, 1), DomainError);
  EXPECT_NO_THROW(estimate_window_moment({1, 1e4, -2 * 2 / std::log(1e4), 1, 0.5}, u, table(), 2, 1));
}

TEST(Window, RegimeClassificationTiesGoUp) {
  const double x = 1e4, edge = std::exp(1.0) / std::log(x);
  EXPECT_EQ(classify_window(1, x, edge * 0.999), WindowRegime::small);
  EXPECT_EQ(classify_window(1, x, edge), WindowRegime::medium);
  EXPECT_EQ(classify_window(1, x, 0.999), WindowRegime::medium);
  EXPECT_EQ(classify_window(1, x, 1.0), WindowRegime::large);
}

TEST(Window, BoundRatioDiagnostics) {
  const auto zero = MultiplicativeSpec::zero_on_primes().with_metadata({1, 1, 0.02, 0.25});
  const WindowMomentRequest r{1, 1e4, 0.0, 4.0, 0.5};
  const auto b = window_bound_ratio(r, zero, table(), 10, 1);
  EXPECT_EQ(b.regime, WindowRegime::large);
  const double expected_main = std::exp(-0.5 * 0.25) * 2.0 * std::pow(std::log(1e4), 0.125);
  EXPECT_NEAR(b.main_term, expected_main, 1e-14);
  EXPECT_NEAR(b.ratio, 2.0 / expected_main, 1e-14);

  // Sweep over T: ratios stay within a generous constant (smoke test only).
  const auto g = MultiplicativeSpec::divisor(0.6);
  double lo = 1e300, hi = 0;
  for (int j = 0; j <= 6; j += 2) {
    const auto w = window_bound_ratio({0, 1e3, 0.0, std::ldexp(1.0, j), 0.4}, g, table(), 20, 2);
    EXPECT_TRUE(std::isfinite(w.ratio));
    lo = std::min(lo, w.ratio);
    hi = std::max(hi, w.ratio);
  }
  EXPECT_LE(hi / lo, 1e4);
}

TEST(Rankin, SpecConfigurations) {
  struct Case { double x, y, C; };
  for (const auto& g : {MultiplicativeSpec::unit(), MultiplicativeSpec::divisor(1.0), MultiplicativeSpec::divisor(0.5)}) {
    for (const auto& c : {Case{100, 7, 1}, Case{1000, 11, 1}, Case{100, 7, 2}}) {
      const auto r = rankin_tail_check(g, table(), c.x, c.y, c.C, 1e6);
      EXPECT_TRUE(r.pass) << c.x << " " << c.y << " " << c.C;
      EXPECT_LE(r.lhs_lower, r.rhs_lower);
      EXPECT_GE(r.lhs_remainder, 0.0);
    }
  }
  const auto diverging = rankin_tail_check(MultiplicativeSpec::unit(), table(), 100, 7, 2, 1e6);
  EXPECT_FALSE(diverging.series_converges);
  EXPECT_TRUE(std::isinf(diverging.rhs));
}

TEST(Rankin, RemainderBoundsCapDifference) {
  const auto g = MultiplicativeSpec::divisor(0.5);
  const auto fine = rankin_tail_check(g, table(), 100, 7, 1, 1e6);
  const auto coarse = rankin_tail_check(g, table(), 100, 7, 1, 1e5);
  EXPECT_GE(fine.lhs_lower, coarse.lhs_lower);
  EXPECT_LE(fine.lhs_lower - coarse.lhs_lower, coarse.lhs_remainder);
}

TEST(Rankin, LhsIsTailOfFullSmoothSum) {
  // Sum over 7-smooth n > 100 of 1/n = prod_{p <= 7} (1 - 1/p)^{-1} - sum_{n <= 100}.
  const auto r = rankin_tail_check(MultiplicativeSpec::unit(), table(), 100, 7, 1, 1e6);
  double head = 0.0;
  for (std::uint64_t n = 1; n <= 100; ++n) {
    std::uint64_t m = n;
    for (std::uint64_t p : {2, 3, 5, 7}) {
      while (m % p == 0) m /= p;
    }
    if (m == 1) head += 1.0 / double(n);
  }
  const double full = 2.0 * 1.5 * 1.25 * (7.0 / 6.0);
  EXPECT_LE(r.lhs_lower, full - head);
  EXPECT_GE(r.lhs_lower + r.lhs_remainder, full - head);
  EXPECT_THROW(rankin_tail_check(MultiplicativeSpec::unit(), table(), 100, 7, 0, 1e6), DomainError);
}

TEST(SmoothSum, Examples) {
  const auto unit = smooth_sum_trivial_bound(MultiplicativeSpec::unit(), table(), 100);
  // prod_{p <= 100} (1 - 1/p)^{-1}, multiplied out directly.
  EXPECT_NEAR(unit.sum, 8.311357378915726, 1e-12);
  EXPECT_LE(unit.truncated, unit.sum);
  EXPECT_GE(unit.truncated + unit.remainder_bound, unit.sum);
  EXPECT_NEAR(unit.bound_shape, std::log(100.0), 1e-15);

  const auto zero = smooth_sum_trivial_bound(MultiplicativeSpec::divisor(0.0), table(), 100);
  EXPECT_EQ(zero.sum, 1.0);
  EXPECT_EQ(zero.truncated, 1.0);

  EXPECT_THROW(smooth_sum_trivial_bound(MultiplicativeSpec::divisor(2.0), table(), 10), DomainError);
}

TEST(SmoothSum, RatioSweepStaysBounded) {
  double first = 0.0;
  for (double z : {1e2, 1e3, 1e4}) {
    const auto s = smooth_sum_trivial_bound(MultiplicativeSpec::unit(), table(), z);
    if (first == 0.0) first = s.ratio;
    EXPECT_LE(s.ratio, 1.1 * first) << z;
  }
}

TEST(Regimes, TableValues) {
  const auto linear = regime_exponent_divisor(1.5, 0.1);
  EXPECT_EQ(linear.log_x_exponent, 0.1);
  EXPECT_TRUE(linear.has_loglog_factor);
  const auto square = regime_exponent_divisor(0.5, 0.3);
  EXPECT_EQ(square.log_x_exponent, 0.0225);
  EXPECT_FALSE(square.has_loglog_factor);
  const auto large = regime_exponent_divisor(3.0, 0.4);
  EXPECT_EQ(large.log_x_exponent, 1.8);
  EXPECT_TRUE(large.has_loglog_factor);
  EXPECT_FALSE(regime_exponent_divisor(1.5, 0.45).has_loglog_factor);
}

TEST(Regimes, BoundaryContinuity) {
  for (double alpha : {1.1, 1.5, 1.9}) {
    const double q = 2 * (alpha - 1) / (alpha * alpha);
    const auto at = regime_exponent_divisor(alpha, q);
    EXPECT_TRUE(at.has_loglog_factor);
    EXPECT_NEAR(2 * (alpha - 1) * q, (q * alpha) * (q * alpha), 1e-12);
    const auto above = regime_exponent_divisor(alpha, std::nextafter(q, 1.0));
    EXPECT_FALSE(above.has_loglog_factor);
    EXPECT_NEAR(at.log_x_exponent, above.log_x_exponent, 1e-12);
  }
}

TEST(Regimes, DensityView) {
  EXPECT_DOUBLE_EQ(regime_exponent_density(0.25, 0.3).log_x_exponent, 0.0225);
  EXPECT_DOUBLE_EQ(regime_exponent_density(0.36, 0.4).log_x_exponent, 0.16 * 0.36);
  EXPECT_DOUBLE_EQ(regime_exponent_density(9.0, 0.4).log_x_exponent, 1.8);
  EXPECT_DOUBLE_EQ(regime_exponent_density(2.25, 0.1).log_x_exponent, 0.1);
  EXPECT_THROW(regime_exponent_divisor(0.0, 0.3), DomainError);
  EXPECT_THROW(regime_exponent_divisor(1.0, 0.6), DomainError);
}

TEST(Scaling, ZeroOnPrimesIsFlat) {
  const auto fit = scaling_fit(MultiplicativeSpec::zero_on_primes(), table(), 0.4, {256, 1024, 4096, 16384}, 200, 1);
  EXPECT_EQ(fit.fitted_exponent, 0.0);
}

TEST(Scaling, HarmonicSumsAtQOne) {
  const std::vector<double> grid{256, 1024, 4096, 16384};
  const auto fit = scaling_fit(MultiplicativeSpec::unit(), table(), 1.0, grid, 20000, 8);
  ASSERT_EQ(fit.estimates.size(), 4u);
  for (const auto& e : fit.estimates) {
    EXPECT_LE(std::abs(e.mean - harmonic(std::uint64_t(e.x))), 3 * e.std_error) << e.x;
  }
}

TEST(Scaling, Preconditions) {
  const auto u = MultiplicativeSpec::unit();
  EXPECT_THROW(scaling_fit(u, table(), 0.4, {256, 512, 1024}, 200, 1), DomainError);
  EXPECT_THROW(scaling_fit(u, table(), 0.4, {100, 512, 1024, 2048}, 200, 1), DomainError);
  EXPECT_THROW(scaling_fit(u, table(), 0.4, {256, 512, 1024, 2048}, 100, 1), UnderSampledError);
}

#pragma once

// Monte Carlo pseudomoments and the diagnostics around them: window moments,
// the Rankin tail inequality, the regime table and the log log x scaling fit.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "dirichlet.hpp"
#include "errors.hpp"
#include "multfun.hpp"
#include "parallel.hpp"
#include "primes.hpp"
#include "steinhaus.hpp"

namespace pseudomoment {

struct MomentEstimate {
  double q = 1.0;
  double x = 1.0;
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(samples)
  std::size_t samples = 0;
  std::uint64_t master_seed = kDefaultSeed;
};

/// |S_i(x_j)|^2 for every realization i and cutoff x_j, where
/// S_i(x) = sum_{n <= x} g(n) X_i(n) / sqrt(n). Row-major: norms[i * xs + j].
struct SampleNorms {
  std::vector<double> x;
  std::size_t samples = 0;
  std::uint64_t master_seed = kDefaultSeed;
  std::vector<double> norms;

  double at(std::size_t sample, std::size_t cutoff) const { return norms[sample * x.size() + cutoff]; }
};

inline SampleNorms sample_partial_sum_norms(const MultiplicativeSpec& spec,
                                            const PrimeTable& primes, std::vector<double> x_grid,
                                            std::size_t samples, std::uint64_t master_seed,
                                            unsigned threads = resolve_threads()) {
  detail::require(!x_grid.empty(), "sample_partial_sum_norms: non-empty x grid");
  for (std::size_t j = 0; j < x_grid.size(); ++j) {
    detail::require(x_grid[j] >= 1.0, "sample_partial_sum_norms: x >= 1");
    if (j > 0) detail::require(x_grid[j] > x_grid[j - 1], "sample_partial_sum_norms: x grid ascending");
  }
  primes.require_coverage(x_grid.back(), "sample_partial_sum_norms");
  const PartialSumPlan plan(spec, primes, x_grid.back());
  std::vector<std::uint64_t> cutoffs;
  for (double x : x_grid) cutoffs.push_back(integer_floor(x));

  SampleNorms out;
  out.x = std::move(x_grid);
  out.samples = samples;
  out.master_seed = master_seed;
  out.norms.assign(samples * cutoffs.size(), 0.0);
  const std::size_t nx = cutoffs.size();
  parallel_for(samples, threads, [&](std::size_t begin, std::size_t end, unsigned) {
    std::vector<complex> units(plan.prime_count()), sums(nx), scratch;
    for (std::size_t i = begin; i < end; ++i) {
      steinhaus_units(master_seed, i, units);
      plan.evaluate(units, cutoffs, sums, scratch);
      for (std::size_t j = 0; j < nx; ++j) out.norms[i * nx + j] = std::norm(sums[j]);
    }
  });
  return out;
}

namespace detail {

inline void mean_and_error(const std::vector<double>& values, double& mean, double& std_error) {
  // Shifted by the first value: identical inputs give that value exactly.
  const double n = double(values.size());
  const double shift = values.front();
  std::vector<double> centered(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) centered[i] = values[i] - shift;
  mean = shift + pairwise_sum(centered) / n;
  std::vector<double> squares(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) squares[i] = (values[i] - mean) * (values[i] - mean);
  const double variance = values.size() > 1 ? pairwise_sum(squares) / (n - 1.0) : 0.0;
  std_error = std::sqrt(variance / n);
}

}  // namespace detail

/// Mean of |S|^{2q} at cutoff index j over the stored realizations.
inline MomentEstimate moment_from_norms(const SampleNorms& norms, std::size_t j, double q) {
  detail::require(q > 0.0, "moment_from_norms: q > 0");
  std::vector<double> values(norms.samples);
  for (std::size_t i = 0; i < norms.samples; ++i) {
    const double v = norms.at(i, j);
    values[i] = q == 1.0 ? v : std::pow(v, q);
  }
  MomentEstimate e;
  e.q = q;
  e.x = norms.x[j];
  e.samples = norms.samples;
  e.master_seed = norms.master_seed;
  detail::mean_and_error(values, e.mean, e.std_error);
  return e;
}

/// Monte Carlo estimate of E|sum_{n <= x} g(n) X(n) / sqrt(n)|^{2q}.
inline MomentEstimate estimate_pseudomoment(const MultiplicativeSpec& spec,
                                            const PrimeTable& primes, double x, double q,
                                            std::size_t samples, std::uint64_t master_seed,
                                            unsigned threads = resolve_threads()) {
  detail::require(q > 0.0 && q <= 1.0, "estimate_pseudomoment: q in (0, 1]");
  detail::require(samples >= 100, "estimate_pseudomoment: samples >= 100");
  const auto norms = sample_partial_sum_norms(spec, primes, {x}, samples, master_seed, threads);
  return moment_from_norms(norms, 0, q);
}

/// K = floor(log log log x), natural logarithms, 0 when log log x <= 1.
inline int truncation_depth(double x) {
  detail::require(std::isfinite(x), "truncation_depth: finite x");
  if (x <= std::exp(1.0)) return 0;
  const double ll = std::log(std::log(x));
  if (ll <= 1.0) return 0;
  return static_cast<int>(std::floor(std::log(ll)));
}

// --- window moments ------------------------------------------------------------

struct WindowMomentRequest {
  int k = 0;
  double x = 2.0;
  double sigma = 0.0;
  double T = 1.0;
  double q = 0.5;

  /// x^{e^{-k}}: the largest prime in H_{k, sigma}.
  double prime_cutoff() const { return std::pow(x, std::exp(-double(k))); }

  void validate() const {
    detail::require(k >= 0, "window moment: k >= 0");
    detail::require(x > 1.0, "window moment: x > 1");
    detail::require(T > 0.0, "window moment: T > 0");
    detail::require(q > 0.0 && q <= 0.5, "window moment: q in (0, 1/2]");
    detail::require(sigma >= -2.0 * double(k + 1) / std::log(x),
                    "window moment: sigma >= -2(k+1)/log x");
    detail::require(k <= truncation_depth(x) + 1, "window moment: k <= K + 1");
  }
};

struct WindowMomentEstimate {
  MomentEstimate estimate;
  std::size_t unconverged = 0;  // realizations whose integral hit the node cap
};

/// Monte Carlo mean of (integral_T^{2T} |H_{k,sigma}(t)|^2 dt)^q.
inline WindowMomentEstimate estimate_window_moment(const WindowMomentRequest& request,
                                                   const MultiplicativeSpec& spec,
                                                   const PrimeTable& primes, std::size_t samples,
                                                   std::uint64_t master_seed,
                                                   unsigned threads = resolve_threads()) {
  request.validate();
  detail::require(samples >= 1, "window moment: samples >= 1");
  const double prime_hi = request.prime_cutoff();
  primes.require_coverage(prime_hi, "estimate_window_moment");
  const WindowIntegrator integrator(spec, primes, prime_hi, request.sigma);
  const std::size_t prime_count = prime_hi < 2.0 ? 0 : primes.count_up_to(prime_hi);

  std::vector<double> values(samples);
  std::vector<unsigned char> converged(samples, 1);
  parallel_for(samples, threads, [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t i = begin; i < end; ++i) {
      const SteinhausSample s(master_seed, i, prime_count);
      const auto w = integrator.integrate(s, request.T);
      values[i] = std::pow(w.value, request.q);
      converged[i] = w.converged;
    }
  });
  WindowMomentEstimate out;
  auto& e = out.estimate;
  e.q = request.q;
  e.x = request.x;
  e.samples = samples;
  e.master_seed = master_seed;
  detail::mean_and_error(values, e.mean, e.std_error);
  out.unconverged = std::count(converged.begin(), converged.end(), 0);
  return out;
}

enum class WindowRegime { small, medium, large };

inline const char* to_string(WindowRegime r) {
  switch (r) {
    case WindowRegime::small: return "small";
    case WindowRegime::medium: return "medium";
    case WindowRegime::large: return "large";
  }
  return "?";
}

/// Ties go to the larger-T regime.
inline WindowRegime classify_window(int k, double x, double T) {
  if (T >= 1.0) return WindowRegime::large;
  if (T >= std::exp(double(k)) / std::log(x)) return WindowRegime::medium;
  return WindowRegime::small;
}

/// Main term of the window-moment bound in the regime of T, alpha = density.
inline double window_main_term(const WindowMomentRequest& r, double alpha) {
  const double q = r.q, k = double(r.k), log_x = std::log(r.x);
  switch (classify_window(r.k, r.x, r.T)) {
    case WindowRegime::small:
      return std::exp(-k * q * q * alpha) * std::pow(r.T, q) * std::pow(log_x, q * q * alpha);
    case WindowRegime::medium:
      return std::exp(-k * q * alpha) * std::pow(log_x, q * alpha) *
             std::pow(r.T, -q * q * alpha + q + alpha * q);
    case WindowRegime::large:
      return std::exp(-k * q * alpha) * std::pow(r.T, q) * std::pow(log_x, q * alpha);
  }
  return 0.0;
}

struct WindowBoundRatio {
  WindowMomentEstimate estimate;
  WindowRegime regime = WindowRegime::large;
  double main_term = 0.0;
  double ratio = 0.0;  // estimate / main_term; diagnostic only
};

inline WindowBoundRatio window_bound_ratio(const WindowMomentRequest& request,
                                           const MultiplicativeSpec& spec,
                                           const PrimeTable& primes, std::size_t samples,
                                           std::uint64_t master_seed,
                                           unsigned threads = resolve_threads()) {
  WindowBoundRatio out;
  out.estimate = estimate_window_moment(request, spec, primes, samples, master_seed, threads);
  out.regime = classify_window(request.k, request.x, request.T);
  out.main_term = window_main_term(request, spec.metadata().alpha_density);
  out.ratio = out.estimate.estimate.mean / out.main_term;
  return out;
}

// --- Rankin's trick ----------------------------------------------------------------

struct RankinReport {
  double x = 0.0, y = 0.0, C = 0.0, cap = 0.0;
  double delta = 0.0;          // C / log y
  double lhs_lower = 0.0;      // sum over x < n <= cap, P(n) <= y of |g(n)|^2 / n
  double lhs_remainder = 0.0;  // bound on the same sum over n > cap
  double rhs_lower = 0.0;      // x^{-delta} sum over n <= cap of |g(n)|^2 n^{delta - 1}
  double rhs_remainder = 0.0;  // bound on the rest of the right side; +inf if it diverges
  double rhs = 0.0;            // rhs_lower + rhs_remainder
  bool series_converges = true;
  bool pass = false;           // lhs_lower + lhs_remainder <= rhs_lower
};

namespace detail {

// min over eta in (0, e/2] of cap^{-eta} sum_{P(n) <= y} |g(n)|^2 n^{-(e - eta)}, for e - eta > 0.
inline double rankin_remainder(const MultiplicativeSpec& spec, const PrimeTable& primes,
                               double y, double e, double cap) {
  double best = kInfinity;
  for (int i = 1; i <= 20; ++i) {
    const double eta = e * double(i) / 40.0;
    const double bound = std::pow(cap, -eta) * smooth_abs_sum_upper(spec, primes, y, e - eta, 2);
    best = std::min(best, bound);
  }
  return best;
}

}  // namespace detail

/// Checks sum_{n > x, P(n) <= y} |g(n)|^2/n <= x^{-delta} sum_{P(n) <= y}
/// |g(n)|^2 n^{delta - 1}, delta = C / log y, with both sides enumerated to
/// `cap`. The certificate compares an upper bound for the left side with a
/// lower bound for the right, so it stays meaningful when the right side
/// diverges.
inline RankinReport rankin_tail_check(const MultiplicativeSpec& spec, const PrimeTable& primes,
                                      double x, double y, double C, double cap) {
  detail::require(C > 0.0, "rankin_tail_check: C > 0");
  detail::require(y >= 2.0, "rankin_tail_check: y >= 2");
  detail::require(x >= 1.0, "rankin_tail_check: x >= 1");
  detail::require(cap >= x, "rankin_tail_check: cap >= x");
  primes.require_coverage(y, "rankin_tail_check");
  RankinReport out{x, y, C, cap};
  out.delta = C / std::log(y);
  std::vector<double> lhs_terms, rhs_terms;
  for_each_smooth(primes, cap, y, [&](const FactoredInteger& n) {
    const double mag2 = std::norm(eval_g(spec, n));
    const double nd = double(n.value());
    if (nd > x) lhs_terms.push_back(mag2 / nd);
    rhs_terms.push_back(mag2 * std::pow(nd, out.delta - 1.0));
  });
  out.lhs_lower = pairwise_sum(lhs_terms);
  out.rhs_lower = std::pow(x, -out.delta) * pairwise_sum(rhs_terms);
  out.lhs_remainder = detail::rankin_remainder(spec, primes, y, 1.0, cap);
  const double e = 1.0 - out.delta;
  out.series_converges = e > 0.0 && std::isfinite(smooth_abs_sum_upper(spec, primes, y, e, 2));
  out.rhs_remainder = out.series_converges
                          ? std::pow(x, -out.delta) * detail::rankin_remainder(spec, primes, y, e, cap)
                          : kInfinity;
  out.rhs = out.rhs_lower + out.rhs_remainder;
  out.pass = out.lhs_lower + out.lhs_remainder <= out.rhs_lower;
  return out;
}

// --- smooth sums -------------------------------------------------------------------

inline constexpr double kSmoothSumEnumerationCap = 1e6;

struct SmoothSumBound {
  double z = 0.0;
  double truncated = 0.0;        // sum over n <= 1e6, P(n) <= z of |g(n)|^2 / n
  double remainder_bound = 0.0;  // Rankin bound for n > 1e6
  double sum = 0.0;              // full sum as the Euler product of local sums
  double sum_upper = 0.0;        // certified upper bracket of `sum`
  double bound_shape = 0.0;      // (log z)^{B^2}
  double ratio = 0.0;            // sum / bound_shape
};

inline SmoothSumBound smooth_sum_trivial_bound(const MultiplicativeSpec& spec,
                                               const PrimeTable& primes, double z) {
  const double B = spec.metadata().B;
  detail::require(z >= 4.0 * B * B, "smooth_sum_trivial_bound: z >= 4 B^2");
  primes.require_coverage(z, "smooth_sum_trivial_bound");
  SmoothSumBound out;
  out.z = z;
  const double cap = kSmoothSumEnumerationCap;
  std::vector<double> terms;
  for_each_smooth(primes, cap, z, [&](const FactoredInteger& n) {
    terms.push_back(std::norm(eval_g(spec, n)) / double(n.value()));
  });
  out.truncated = pairwise_sum(terms);
  out.remainder_bound = detail::rankin_remainder(spec, primes, z, 1.0, cap);
  out.sum = smooth_abs_sum_lower(spec, primes, z, 1.0, 2);
  out.sum_upper = smooth_abs_sum_upper(spec, primes, z, 1.0, 2);
  out.bound_shape = std::pow(std::log(z), B * B);
  out.ratio = out.sum / out.bound_shape;
  return out;
}

// --- regime table --------------------------------------------------------------------

struct RegimePrediction {
  double alpha = 0.0;  // the parameter of the view that was asked for
  double q = 0.0;
  double log_x_exponent = 0.0;
  bool has_loglog_factor = false;
  std::string source;
};

/// Exponent of log x in the order of the 2q-th pseudomoment of d_alpha.
inline RegimePrediction regime_exponent_divisor(double alpha, double q) {
  detail::require(alpha > 0.0, "regime_exponent: alpha > 0");
  detail::require(q > 0.0 && q <= 0.5, "regime_exponent: q in (0, 1/2]");
  RegimePrediction r;
  r.alpha = alpha;
  r.q = q;
  if (alpha < 1.0) {
    r.log_x_exponent = (q * alpha) * (q * alpha);
    r.source = "alpha < 1: (q alpha)^2";
  } else if (alpha < 2.0 && q <= 2.0 * (alpha - 1.0) / (alpha * alpha)) {
    r.log_x_exponent = 2.0 * (alpha - 1.0) * q;
    r.has_loglog_factor = true;
    r.source = "1 <= alpha < 2, q <= 2(alpha-1)/alpha^2: 2(alpha-1)q";
  } else if (alpha < 2.0) {
    r.log_x_exponent = (q * alpha) * (q * alpha);
    r.source = "1 <= alpha < 2, q > 2(alpha-1)/alpha^2: (q alpha)^2";
  } else {
    r.log_x_exponent = q * (alpha * alpha) / 2.0;
    r.has_loglog_factor = true;
    r.source = "alpha >= 2: q alpha^2 / 2";
  }
  return r;
}

/// Same table indexed by the density of |g(p)|^2, which is alpha^2 for d_alpha.
inline RegimePrediction regime_exponent_density(double alpha_density, double q) {
  detail::require(alpha_density > 0.0, "regime_exponent: alpha_density > 0");
  if (alpha_density < 1.0) {
    detail::require(q > 0.0 && q <= 0.5, "regime_exponent: q in (0, 1/2]");
    return {alpha_density, q, q * q * alpha_density, false, "density < 1: q^2 alpha"};
  }
  RegimePrediction r = regime_exponent_divisor(std::sqrt(alpha_density), q);
  r.alpha = alpha_density;
  r.source = "density view of " + r.source;
  return r;
}

// --- scaling ---------------------------------------------------------------------------

struct ScalingFit {
  double q = 0.0;
  double alpha_density = 0.0;
  std::vector<MomentEstimate> estimates;
  double fitted_exponent = 0.0;  // slope of log(mean) against log log x
  double intercept = 0.0;
  double band_lower = 0.0;  // q^2 alpha - margin
  double band_upper = 0.0;  // q alpha + margin
  bool in_band = false;
};

inline constexpr double kScalingBandMargin = 0.05;

/// Least-squares slope of log Psi against log log x. All cutoffs share the
/// same realizations, so one pass of the partial sums serves the whole grid.
inline ScalingFit scaling_fit(const MultiplicativeSpec& spec, const PrimeTable& primes, double q,
                              const std::vector<double>& x_grid, std::size_t samples_per_x,
                              std::uint64_t master_seed, unsigned threads = resolve_threads()) {
  detail::require(q > 0.0 && q <= 1.0, "scaling_fit: q in (0, 1]");
  detail::require(x_grid.size() >= 4, "scaling_fit: at least 4 grid points");
  detail::require(x_grid.front() >= 256.0, "scaling_fit: x >= 256");
  detail::require(samples_per_x >= 100, "scaling_fit: samples >= 100");
  const auto norms = sample_partial_sum_norms(spec, primes, x_grid, samples_per_x, master_seed, threads);
  ScalingFit fit;
  fit.q = q;
  fit.alpha_density = spec.metadata().alpha_density;
  std::vector<double> u, v;
  for (std::size_t j = 0; j < x_grid.size(); ++j) {
    auto e = moment_from_norms(norms, j, q);
    if (e.std_error > kScalingBandMargin * e.mean) {
      throw UnderSampledError("scaling_fit: stderr/mean above 0.05 at x = " +
                              std::to_string(x_grid[j]) + "; increase samples");
    }
    u.push_back(std::log(std::log(x_grid[j])));
    v.push_back(std::log(e.mean));
    fit.estimates.push_back(e);
  }
  const double n = double(u.size());
  const double mu = std::accumulate(u.begin(), u.end(), 0.0) / n;
  const double mv = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    sxy += (u[i] - mu) * (v[i] - mv);
    sxx += (u[i] - mu) * (u[i] - mu);
  }
  fit.fitted_exponent = sxy / sxx;
  fit.intercept = mv - fit.fitted_exponent * mu;
  fit.band_lower = q * q * fit.alpha_density - kScalingBandMargin;
  fit.band_upper = q * fit.alpha_density + kScalingBandMargin;
  fit.in_band = fit.fitted_exponent >= fit.band_lower && fit.fitted_exponent <= fit.band_upper;
  return fit;
}

}  // namespace pseudomoment

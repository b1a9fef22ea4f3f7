// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Every criterion is evaluated twice with different thread counts; the last
// line compares the two runs bit for bit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pseudomoment.hpp"

using namespace pseudomoment;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<double> numbers;  // everything the criterion computed, for the rerun
  double seconds = 0.0;
};

struct Criterion {
  const char* id;
  const char* name;
  double time_limit;  // seconds
  std::function<Outcome(unsigned)> run;
};

const PrimeTable& table() {
  static const PrimeTable t = sieve_primes(1'000'000);
  return t;
}

std::string format(const char* fmt, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

double orthogonality_sum(const MultiplicativeSpec& g, std::uint64_t x) {
  double total = 0.0;
  for (std::uint64_t n = 1; n <= x; ++n) total += std::norm(eval_g(g, factorize(n, table()))) / double(n);
  return total;
}

Outcome orthogonality(unsigned threads) {
  Outcome o;
  double worst = 0.0;
  for (const auto& g : {MultiplicativeSpec::unit(), MultiplicativeSpec::divisor(0.5), MultiplicativeSpec::divisor(2.0)}) {
    for (std::uint64_t x : {12u, 20u, 50u}) {
      const auto e = estimate_pseudomoment(g, table(), double(x), 1.0, 100000, kDefaultSeed, threads);
      const double z = std::abs(e.mean - orthogonality_sum(g, x)) / e.std_error;
      worst = std::max(worst, z);
      o.pass = o.pass && z <= 3.5;
      o.numbers.insert(o.numbers.end(), {e.mean, e.std_error});
    }
  }
  o.detail = format("max |mean - sum|/stderr = %.3f (limit 3.5)", worst);
  return o;
}

Outcome brute_force(unsigned threads) {
  Outcome o;
  const auto g = MultiplicativeSpec::divisor(0.5);
  const std::vector<double> qs{0.2, 0.3, 0.5};
  // Grid 64 pass; its even sub-grid is the grid-32 value.
  const auto r = brute_force_pseudomoment(g, table(), 11, qs, 64, threads);
  const auto norms = sample_partial_sum_norms(g, table(), {11}, 100000, kDefaultSeed, threads);
  double worst = 0.0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const auto e = moment_from_norms(norms, 0, qs[i]);
    const double allowed = 3.5 * e.std_error + r.grid_error[i];
    const double dev = std::abs(e.mean - r.coarse_value[i]);
    worst = std::max(worst, dev / allowed);
    o.pass = o.pass && dev <= allowed;
    o.numbers.insert(o.numbers.end(), {r.coarse_value[i], r.value[i], r.grid_error[i], e.mean, e.std_error});
  }
  o.detail = format("max deviation / (3.5 stderr + grid error) = %.3f", worst);
  return o;
}

Outcome plancherel(unsigned) {
  Outcome o;
  std::mt19937_64 rng(20240001);
  std::uniform_int_distribution<int> size(1, 20), index(1, 200);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  double worst = 0.0;
  for (int v = 0; v < 100; ++v) {
    CoefficientVector c;
    const int k = size(rng);
    std::vector<std::uint64_t> used;
    while (int(c.size()) < k) {
      const std::uint64_t n = index(rng);
      if (std::find(used.begin(), used.end(), n) != used.end()) continue;
      used.push_back(n);
      c.push_back({n, complex(coord(rng), coord(rng))});
    }
    for (double sigma : {0.1, 0.25, 0.5}) {
      const auto r = plancherel_check(c, sigma, 1e4, 1e-4);
      const double ratio = std::abs(r.lhs - r.rhs) / (1e-4 + r.tail_bound);
      worst = std::max(worst, ratio);
      o.pass = o.pass && r.pass && ratio <= 1.0;
      o.numbers.insert(o.numbers.end(), {r.lhs, r.rhs});
    }
  }
  double single_worst = 0.0;
  for (double sigma : {0.1, 0.25, 0.5}) {
    const auto r = plancherel_check({{1, 1.0}}, sigma, 1e7, 1e-6);
    const double exact = 1.0 / (2 * sigma);
    const double dev = std::max(std::abs(r.lhs - exact), std::abs(r.rhs - exact));
    single_worst = std::max(single_worst, dev);
    o.pass = o.pass && dev <= 1e-6;
    o.numbers.insert(o.numbers.end(), {r.lhs, r.rhs});
  }
  o.detail = format("300 checks, max |lhs - rhs|/(1e-4 + tail) = %.3g; single term max error %.3g", worst,
                    single_worst);
  return o;
}

Outcome mixed_moments(unsigned) {
  Outcome o;
  struct Case { MultiplicativeSpec g; const char* name; double sigma, t, a, b; };
  std::vector<Case> cases;
  const std::pair<MultiplicativeSpec, const char*> families[] = {
      {MultiplicativeSpec::unit(), "unit"},
      {MultiplicativeSpec::divisor(0.7), "d0.7"},
      {MultiplicativeSpec::divisor(complex(0.5, 0.3)), "d(0.5+0.3i)"}};
  for (const auto& [g, name] : families) {
    for (double sigma : {0.0, 0.05}) {
      for (double t : {0.0, 1.0, 10.0}) {
        for (auto [a, b] : {std::pair{0.25, 0.25}, std::pair{1.0, 0.0}, std::pair{0.5, -0.25}, std::pair{1.0, 1.0}}) {
          cases.push_back({g, name, sigma, t, a, b});
        }
      }
    }
  }
  double worst = 0.0;
  int within = 0, decays = 0;
  std::ostringstream misses;
  for (const auto& c : cases) {
    double first = 0.0, last = 0.0;
    for (double y : {101.0, 211.0, 401.0}) {
      MixedMomentRequest req;
      req.params = {y, 2 * y, c.sigma, c.t};
      req.a = c.a;
      req.b = c.b;
      const auto f = mixed_moment_formula(c.g, table(), req);
      const auto p = product_expectation_oracle(c.g, table(), req);
      const double diff = std::abs(p.log_value - f.log_main);
      worst = std::max(worst, diff / f.error_budget);
      const bool ok = p.converged && diff <= f.error_budget;
      within += ok;
      o.pass = o.pass && ok;
      if (y == 101.0) first = diff;
      if (y == 401.0) last = diff;
      o.numbers.insert(o.numbers.end(), {f.log_main, p.log_value});
    }
    decays += last <= first;
    o.pass = o.pass && last <= first;
    if (last > first) misses << " (" << c.name << ",t=" << c.t << ",a=" << c.a << ",b=" << c.b << ",sigma=" << c.sigma << ")";
  }
  std::ostringstream d;
  d << within << "/" << 3 * cases.size() << " within budget (max ratio " << worst << "), " << decays << "/"
    << cases.size() << " decay from y=101 to y=401";
  if (decays < int(cases.size())) d << "; not decaying:" << misses.str();
  o.detail = d.str();
  return o;
}

Outcome rankin(unsigned) {
  Outcome o;
  struct Case { double x, y, C; };
  int passed = 0, total = 0;
  for (const auto& g : {MultiplicativeSpec::unit(), MultiplicativeSpec::divisor(0.5), MultiplicativeSpec::divisor(1.0)}) {
    for (const auto& c : {Case{100, 7, 1}, Case{1000, 11, 1}, Case{100, 7, 2}}) {
      const auto r = rankin_tail_check(g, table(), c.x, c.y, c.C, 1e6);
      ++total;
      passed += r.pass;
      o.pass = o.pass && r.pass && r.lhs_lower + r.lhs_remainder <= r.rhs;
      o.numbers.insert(o.numbers.end(), {r.lhs_lower, r.lhs_remainder, r.rhs_lower});
    }
  }
  o.detail = std::to_string(passed) + "/" + std::to_string(total) + " certificates hold";
  return o;
}

Outcome regimes(unsigned) {
  Outcome o;
  const double a = regime_exponent_divisor(1.5, 0.1).log_x_exponent;
  const double b = regime_exponent_divisor(0.5, 0.3).log_x_exponent;
  const double c = regime_exponent_divisor(3.0, 0.4).log_x_exponent;
  o.pass = a == 0.1 && b == 0.0225 && c == 1.8;
  double worst = 0.0;
  for (double alpha : {1.1, 1.5, 1.9}) {
    const double q = 2 * (alpha - 1) / (alpha * alpha);
    const double linear = regime_exponent_divisor(alpha, q).log_x_exponent;
    const double square = regime_exponent_divisor(alpha, std::nextafter(q, 1.0)).log_x_exponent;
    worst = std::max({worst, std::abs(2 * (alpha - 1) * q - (q * alpha) * (q * alpha)), std::abs(linear - square)});
    o.numbers.insert(o.numbers.end(), {linear, square});
  }
  o.pass = o.pass && worst <= 1e-12;
  o.numbers.insert(o.numbers.end(), {a, b, c});
  o.detail = format("examples %.17g, %.17g, %.17g", a, b, c) + format("; boundary gap %.3g", worst);
  return o;
}

Outcome lambda_scaling(unsigned) {
  Outcome o;
  const std::vector<double> grid{1e2, 1e3, 1e4, 1e5, 1e6};
  const double unit = fit_lambda(MultiplicativeSpec::unit(), grid, table()).fitted_alpha;
  double worst = 0.0;
  for (complex alpha : {complex(0.5), complex(0.7, 0.2), complex(2.0)}) {
    const double fit = fit_lambda(MultiplicativeSpec::divisor(alpha), grid, table()).fitted_alpha;
    const double expected = std::norm(alpha) * unit;
    const double rel = std::abs(fit - expected) / expected;
    worst = std::max(worst, rel);
    o.numbers.push_back(fit);
  }
  o.pass = worst <= 8 * std::numeric_limits<double>::epsilon();
  o.numbers.push_back(unit);
  o.detail = format("unit slope %.12f, max relative deviation %.3g", unit, worst);
  return o;
}

Outcome scaling(unsigned threads) {
  Outcome o;
  std::vector<double> grid;
  for (int e = 8; e <= 18; e += 2) grid.push_back(std::ldexp(1.0, e));
  const auto fit = scaling_fit(MultiplicativeSpec::divisor(0.6), table(), 0.4, grid, 20000, kDefaultSeed, threads);
  o.pass = fit.fitted_exponent >= 0.0076 && fit.fitted_exponent <= 0.194;
  for (const auto& e : fit.estimates) o.numbers.insert(o.numbers.end(), {e.mean, e.std_error});
  o.numbers.push_back(fit.fitted_exponent);
  o.detail = format("fitted exponent %.4f in [0.0076, 0.194]", fit.fitted_exponent);
  return o;
}

Outcome timed(const Criterion& c, unsigned threads) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.run(threads);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("threw: ") + e.what();
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"AC1", "orthogonality identity", 60, orthogonality},
      {"AC2", "brute-force oracle equivalence", 600, brute_force},
      {"AC3", "Plancherel identity", 120, plancherel},
      {"AC4", "mixed moments vs quadrature", 300, mixed_moments},
      {"AC5", "Rankin inequality", 60, rankin},
      {"AC6", "regime table", 1, regimes},
      {"AC7", "lambda fit scaling", 30, lambda_scaling},
      {"AC8", "scaling band", 1800, scaling},
  };
  const unsigned first_threads = 1, second_threads = 3;
  table();

  bool all = true;
  std::vector<Outcome> first;
  for (const auto& c : criteria) {
    auto o = timed(c, first_threads);
    const bool in_time = o.seconds <= c.time_limit;
    const bool pass = o.pass && in_time;
    all = all && pass;
    std::printf("%s %s %s: %s; %.1f s (limit %.0f s)%s\n", c.id, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                o.seconds, c.time_limit, in_time ? "" : " over time");
    std::fflush(stdout);
    first.push_back(std::move(o));
  }

  std::size_t compared = 0;
  std::string mismatched;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto again = timed(criteria[i], second_threads);
    const auto& a = first[i].numbers;
    const auto& b = again.numbers;
    const bool same = a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
    compared += a.size();
    if (!same) mismatched += std::string(mismatched.empty() ? "" : ",") + criteria[i].id;
  }
  const bool deterministic = mismatched.empty();
  all = all && deterministic;
  std::printf("AC9 %s determinism: %zu values compared between %u and %u threads%s\n",
              deterministic ? "PASS" : "FAIL", compared, first_threads, second_threads,
              deterministic ? ", all identical" : (", differ in " + mismatched).c_str());
  return all ? 0 : 1;
}

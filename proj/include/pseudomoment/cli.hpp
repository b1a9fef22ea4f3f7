#pragma once

// Command-line front end. Every run prints a JSON manifest:
//   {"command", "parameters", "master_seed", "artifact_version",
//    "wall_time_seconds", "results"}
// where "parameters" holds every effective option as a string, so feeding
// them back as flags repeats the computation.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dirichlet.hpp"
#include "errors.hpp"
#include "expectations.hpp"
#include "io.hpp"
#include "moments.hpp"
#include "multfun.hpp"
#include "primes.hpp"

namespace pseudomoment::cli {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum ExitCode { ok = 0, usage = 1, failed = 2 };

using json = nlohmann::json;

namespace detail {

inline MultiplicativeSpec load_spec(const std::string& text) {
  if (text.empty() || text == "unit") return MultiplicativeSpec::unit();
  const auto first = text.find_first_not_of(" \t\n");
  if (first != std::string::npos && text[first] == '{') return io::spec_from_json(json::parse(text));
  return io::spec_from_json(io::read_json_file(text));
}

inline CoefficientVector load_coeffs(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\n");
  if (first != std::string::npos && text[first] == '[') return io::coefficients_from_json(json::parse(text));
  return io::coefficients_from_json(io::read_json_file(text));
}

inline PrimeTable primes_for(double x) { return sieve_primes(std::max<std::uint64_t>(2, integer_floor(x))); }

inline json estimate_json(const MomentEstimate& e) {
  return {{"x", e.x}, {"q", e.q}, {"mean", e.mean}, {"stderr", e.std_error},
          {"samples", e.samples}, {"seed", e.master_seed}};
}

inline std::string csv_row(const MomentEstimate& e) {
  std::ostringstream os;
  os << std::setprecision(17) << e.x << ',' << e.q << ',' << e.mean << ',' << e.std_error << ','
     << e.samples << ',' << e.master_seed << '\n';
  return os.str();
}

inline constexpr const char* kCsvHeader = "x,q,mean,stderr,samples,seed\n";

inline void collect_parameters(const CLI::App* app, json& params) {
  for (const CLI::Option* opt : app->get_options()) {
    const std::string key = opt->get_single_name();
    if (key == "help" || key.empty()) continue;
    if (opt->get_type_size() == 0) {
      params[key] = opt->count() > 0 ? "true" : "false";
    } else if (opt->count() > 0) {
      std::string joined;
      for (const auto& r : opt->results()) joined += (joined.empty() ? "" : ",") + r;
      params[key] = joined;
    } else {
      params[key] = opt->get_default_str();
    }
  }
}

}  // namespace detail

/// Parses argv-style arguments (without the program name), runs the
/// subcommand and writes the manifest to `out`. Returns 0, 1 (usage or
/// domain error) or 2 (a computed check did not pass).
inline int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pseudomoments of random multiplicative functions", "pseudomoment"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();

  std::uint64_t seed = kDefaultSeed;
  unsigned threads_flag = 0;
  std::string out_dir;
  app.add_option("--seed", seed, "master seed for every random draw");
  app.add_option("--threads", threads_flag, "worker threads (0: PSEUDOMOMENT_THREADS or hardware)");
  app.add_option("--out-dir", out_dir, "also write the manifest (and CSV) into this directory");

  std::string g_spec = "unit";
  auto add_g = [&](CLI::App* sub) {
    sub->add_option("--g-spec", g_spec, "JSON file or inline JSON for g (default: unit)");
  };

  // estimate
  double est_x = 0, est_q = 1.0;
  std::size_t est_samples = 10000;
  std::string est_out = "json";
  auto* estimate = app.add_subcommand("estimate", "Monte Carlo pseudomoment E|S(x)|^{2q}");
  add_g(estimate);
  estimate->add_option("--x", est_x)->required();
  estimate->add_option("--q", est_q);
  estimate->add_option("--samples", est_samples);
  estimate->add_option("--out", est_out)->check(CLI::IsMember({"json", "csv"}));

  // scaling
  double sc_q = 0.4;
  std::vector<double> sc_grid;
  std::size_t sc_samples = 20000;
  std::string sc_out = "json";
  auto* scaling = app.add_subcommand("scaling", "slope of log Psi against log log x");
  add_g(scaling);
  scaling->add_option("--q", sc_q);
  scaling->add_option("--x-grid", sc_grid)->required()->delimiter(',');
  scaling->add_option("--samples", sc_samples);
  scaling->add_option("--out", sc_out)->check(CLI::IsMember({"json", "csv"}));

  // window
  WindowMomentRequest win;
  std::size_t win_samples = 1000;
  auto* window = app.add_subcommand("window", "window moment E[(int_T^2T |H_k|^2)^q]");
  add_g(window);
  window->add_option("--k", win.k);
  window->add_option("--x", win.x)->required();
  window->add_option("--sigma", win.sigma);
  window->add_option("--T", win.T);
  window->add_option("--q", win.q);
  window->add_option("--samples", win_samples);

  // expect
  MixedMomentRequest mix;
  bool mix_oracle = false;
  double mix_calibration = kDefaultBudgetCalibration;
  auto* expect = app.add_subcommand("expect", "mixed moment formula, optionally against quadrature");
  add_g(expect);
  expect->add_option("--y", mix.params.y)->required();
  expect->add_option("--z", mix.params.z)->required();
  expect->add_option("--sigma", mix.params.sigma);
  expect->add_option("--t", mix.params.t);
  expect->add_option("--a", mix.a);
  expect->add_option("--b", mix.b);
  expect->add_option("--calibration", mix_calibration);
  expect->add_flag("--oracle", mix_oracle, "also run the per-prime quadrature oracle");

  // plancherel
  std::string pl_coeffs;
  double pl_sigma = 0.25, pl_tmax = 1e4, pl_tol = 1e-4;
  auto* plancherel = app.add_subcommand("plancherel", "Mellin-Plancherel identity check");
  plancherel->add_option("--coeffs", pl_coeffs, "JSON file or inline [[n, re, im], ...]")->required();
  plancherel->add_option("--sigma", pl_sigma);
  plancherel->add_option("--tmax", pl_tmax);
  plancherel->add_option("--tol", pl_tol);

  // rankin
  double rk_x = 100, rk_y = 7, rk_C = 1, rk_cap = 1e6;
  auto* rankin = app.add_subcommand("rankin", "Rankin tail inequality over y-smooth n");
  add_g(rankin);
  rankin->add_option("--x", rk_x);
  rankin->add_option("--y", rk_y);
  rankin->add_option("--C", rk_C);
  rankin->add_option("--cap", rk_cap);

  // lambda
  std::vector<double> la_grid{1e3, 1e4, 1e5, 1e6};
  auto* lambda = app.add_subcommand("lambda", "fit sum_{p<=x}|g(p)|^2/p against log log x");
  add_g(lambda);
  lambda->add_option("--x-grid", la_grid)->delimiter(',');

  // regimes
  double rg_alpha = 0.5, rg_q = 0.3;
  std::string rg_view = "divisor";
  auto* regimes = app.add_subcommand("regimes", "predicted log x exponent");
  regimes->add_option("--alpha", rg_alpha)->required();
  regimes->add_option("--q", rg_q)->required();
  regimes->add_option("--view", rg_view)->check(CLI::IsMember({"divisor", "density"}));

  // oracle
  double or_x = 11;
  std::vector<double> or_q{0.3};
  std::size_t or_grid = 32;
  auto* oracle = app.add_subcommand("oracle", "tensor-grid pseudomoment for x <= 12");
  add_g(oracle);
  oracle->add_option("--x", or_x);
  oracle->add_option("--q", or_q)->delimiter(',');
  oracle->add_option("--grid", or_grid);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ExitCode::ok : ExitCode::usage;
  }

  const auto started = std::chrono::steady_clock::now();
  const unsigned threads = resolve_threads(threads_flag > 0 ? std::optional<unsigned>(threads_flag)
                                                            : std::nullopt);
  CLI::App* sub = app.get_subcommands().front();
  json results;
  std::string csv;
  bool pass = true;

  try {
    const std::string name = sub->get_name();
    if (name == "estimate") {
      const auto spec = detail::load_spec(g_spec);
      const auto primes = detail::primes_for(est_x);
      const auto e = estimate_pseudomoment(spec, primes, est_x, est_q, est_samples, seed, threads);
      results = detail::estimate_json(e);
      if (est_out == "csv") csv = std::string(detail::kCsvHeader) + detail::csv_row(e);
    } else if (name == "scaling") {
      const auto spec = detail::load_spec(g_spec);
      const auto primes = detail::primes_for(sc_grid.empty() ? 2.0 : sc_grid.back());
      const auto fit = scaling_fit(spec, primes, sc_q, sc_grid, sc_samples, seed, threads);
      json per_x = json::array();
      csv = detail::kCsvHeader;
      for (const auto& e : fit.estimates) {
        per_x.push_back(detail::estimate_json(e));
        csv += detail::csv_row(e);
      }
      if (sc_out != "csv") csv.clear();
      results = {{"fitted_exponent", fit.fitted_exponent}, {"intercept", fit.intercept},
                 {"alpha_density", fit.alpha_density},      {"band", {fit.band_lower, fit.band_upper}},
                 {"pass", fit.in_band},                     {"per_x", per_x}};
      pass = fit.in_band;
    } else if (name == "window") {
      const auto spec = detail::load_spec(g_spec);
      win.validate();
      const auto primes = detail::primes_for(win.prime_cutoff());
      const auto r = window_bound_ratio(win, spec, primes, win_samples, seed, threads);
      results = detail::estimate_json(r.estimate.estimate);
      results["k"] = win.k;
      results["K"] = truncation_depth(win.x);
      results["T"] = win.T;
      results["sigma"] = win.sigma;
      results["unconverged"] = r.estimate.unconverged;
      results["regime"] = to_string(r.regime);
      results["main_term"] = r.main_term;
      results["ratio"] = r.ratio;
    } else if (name == "expect") {
      const auto spec = detail::load_spec(g_spec);
      const auto primes = detail::primes_for(mix.params.z);
      const auto f = mixed_moment_formula(spec, primes, mix, mix_calibration);
      results = {{"log_main", f.log_main}, {"prediction", f.prediction()},
                 {"error_budget", f.error_budget}};
      if (mix_oracle) {
        const auto o = product_expectation_oracle(spec, primes, mix);
        const double diff = std::abs(o.log_value - f.log_main);
        pass = diff <= f.error_budget;
        results["oracle"] = o.value;
        results["log_oracle"] = o.log_value;
        results["oracle_converged"] = o.converged;
        results["abs_log_diff"] = diff;
        results["pass"] = pass;
      } else {
        results["oracle"] = nullptr;
        results["abs_log_diff"] = nullptr;
        results["pass"] = nullptr;
      }
    } else if (name == "plancherel") {
      const auto coeffs = detail::load_coeffs(pl_coeffs);
      const auto r = plancherel_check(coeffs, pl_sigma, pl_tmax, pl_tol);
      results = {{"lhs", r.lhs}, {"rhs", r.rhs}, {"tail_bound", r.tail_bound},
                 {"quadrature_error", r.quadrature_error}, {"pass", r.pass}};
      pass = r.pass;
    } else if (name == "rankin") {
      const auto spec = detail::load_spec(g_spec);
      const auto primes = detail::primes_for(rk_y);
      const auto r = rankin_tail_check(spec, primes, rk_x, rk_y, rk_C, rk_cap);
      results = {{"delta", r.delta},
                 {"lhs_lower", r.lhs_lower},
                 {"lhs_remainder", r.lhs_remainder},
                 {"rhs_lower", r.rhs_lower},
                 {"rhs_remainder", io::detail::finite_or_string(r.rhs_remainder)},
                 {"rhs", io::detail::finite_or_string(r.rhs)},
                 {"series_converges", r.series_converges},
                 {"pass", r.pass}};
      pass = r.pass;
    } else if (name == "lambda") {
      const auto spec = detail::load_spec(g_spec);
      const auto primes = detail::primes_for(la_grid.empty() ? 2.0 : la_grid.back());
      const auto fit = fit_lambda(spec, la_grid, primes);
      json points = json::array();
      for (const auto& p : fit.points) {
        points.push_back({{"x", p.x}, {"lambda", p.lambda}, {"residual", p.residual}});
      }
      results = {{"fitted_alpha", fit.fitted_alpha}, {"intercept", fit.intercept}, {"points", points}};
    } else if (name == "regimes") {
      const auto r = rg_view == "divisor" ? regime_exponent_divisor(rg_alpha, rg_q)
                                          : regime_exponent_density(rg_alpha, rg_q);
      results = {{"exponent", r.log_x_exponent}, {"loglog", r.has_loglog_factor},
                 {"view", rg_view}, {"source", r.source}};
    } else if (name == "oracle") {
      const auto spec = detail::load_spec(g_spec);
      const auto primes = detail::primes_for(or_x);
      const auto r = brute_force_pseudomoment(spec, primes, or_x, or_q, or_grid, threads);
      results = {{"x", r.x}, {"grid", r.grid_m}, {"q", r.q}, {"value", r.value},
                 {"coarse_value", r.coarse_value}, {"grid_error", r.grid_error}};
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::usage;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::usage;
  }

  json params = json::object();
  detail::collect_parameters(&app, params);
  detail::collect_parameters(sub, params);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json manifest = {{"command", sub->get_name()},
                   {"parameters", params},
                   {"master_seed", seed},
                   {"artifact_version", kArtifactVersion},
                   {"wall_time_seconds", wall},
                   {"results", results}};
  const std::string text = manifest.dump(2);
  if (csv.empty()) {
    out << text << '\n';
  } else {
    out << csv;
    err << text << '\n';
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream(std::filesystem::path(out_dir) / (sub->get_name() + ".json")) << text << '\n';
    if (!csv.empty()) std::ofstream(std::filesystem::path(out_dir) / (sub->get_name() + ".csv")) << csv;
  }
  return pass ? ExitCode::ok : ExitCode::failed;
}

inline int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(std::move(args), out, err);
}

}  // namespace pseudomoment::cli

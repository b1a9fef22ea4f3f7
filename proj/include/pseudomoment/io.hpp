#pragma once

// JSON forms of multiplicative-function specs and coefficient vectors.
//
//   g-spec: {"kind": "divisor", "alpha_re": 0.5, "alpha_im": 0,
//            "A": ..., "B": ..., "theta": ..., "alpha_density": ...,
//            "table": [[prime_power, re, im], ...]}
//   coeffs: [[n, re, im], ...]
//
// Growth fields are optional; absent ones keep the kind's defaults.

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <string>

#include <json.hpp>

#include "dirichlet.hpp"
#include "errors.hpp"
#include "multfun.hpp"

namespace pseudomoment::io {

using nlohmann::json;

namespace detail {

inline double number_or_inf(const json& v) {
  if (v.is_string() && (v == "inf" || v == "Infinity")) return std::numeric_limits<double>::infinity();
  return v.get<double>();
}

inline json finite_or_string(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

}  // namespace detail

inline MultiplicativeSpec spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw DomainError("g-spec: object with \"kind\" required");
  const std::string kind = j.at("kind").get<std::string>();
  auto meta_with = [&](GrowthMetadata meta) {
    if (j.contains("A")) meta.A = detail::number_or_inf(j.at("A"));
    if (j.contains("B")) meta.B = j.at("B").get<double>();
    if (j.contains("theta")) meta.theta = j.at("theta").get<double>();
    if (j.contains("alpha_density")) meta.alpha_density = j.at("alpha_density").get<double>();
    return meta;
  };
  MultiplicativeSpec spec = MultiplicativeSpec::unit();
  if (kind == "divisor") {
    const complex alpha(j.value("alpha_re", 1.0), j.value("alpha_im", 0.0));
    spec = MultiplicativeSpec::divisor(alpha);
  } else if (kind == "unit") {
    spec = MultiplicativeSpec::unit();
  } else if (kind == "zero") {
    spec = MultiplicativeSpec::zero_on_primes();
  } else if (kind == "table") {
    std::map<std::uint64_t, complex> values;
    for (const auto& row : j.at("table")) {
      const auto key = row.at(0).get<std::uint64_t>();
      values[key] = complex(row.at(1).get<double>(), row.size() > 2 ? row.at(2).get<double>() : 0.0);
    }
    return MultiplicativeSpec::table(std::move(values), meta_with(GrowthMetadata{}));
  } else {
    throw DomainError("g-spec: unknown kind \"" + kind + "\" (divisor, unit, zero, table)");
  }
  return spec.with_metadata(meta_with(spec.metadata()));
}

inline json spec_to_json(const MultiplicativeSpec& spec) {
  json j;
  j["kind"] = to_string(spec.kind());
  if (spec.kind() == GKind::rule) throw DomainError("g-spec: rule kinds have no JSON form");
  if (spec.kind() == GKind::divisor) {
    j["alpha_re"] = spec.alpha().real();
    j["alpha_im"] = spec.alpha().imag();
  }
  const auto& m = spec.metadata();
  j["A"] = detail::finite_or_string(m.A);
  j["B"] = m.B;
  j["theta"] = m.theta;
  j["alpha_density"] = m.alpha_density;
  if (const auto* table = spec.table_values()) {
    json rows = json::array();
    for (const auto& [key, value] : *table) rows.push_back({key, value.real(), value.imag()});
    j["table"] = rows;
  }
  return j;
}

inline CoefficientVector coefficients_from_json(const json& j) {
  if (!j.is_array()) throw DomainError("coeffs: array of [n, re, im] required");
  CoefficientVector out;
  for (const auto& row : j) {
    out.push_back({row.at(0).get<std::uint64_t>(),
                   complex(row.at(1).get<double>(), row.size() > 2 ? row.at(2).get<double>() : 0.0)});
  }
  return out;
}

inline json coefficients_to_json(const CoefficientVector& coeffs) {
  json rows = json::array();
  for (const auto& c : coeffs) rows.push_back({c.n, c.a.real(), c.a.imag()});
  return rows;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DomainError(path + ": " + e.what());
  }
}

}  // namespace pseudomoment::io

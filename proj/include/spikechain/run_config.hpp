#pragma once

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "spikechain/error.hpp"
#include "spikechain/geometry.hpp"

namespace spikechain {

struct GeometrySpec {
  std::string kind = "family";  // family | polynomial | spline
  double b = 1.0;
  // family
  double h0 = 1.0, a = 20.0, beta = 0.0;
  // polynomial: sum_k coefficients[k] (s - center)^k
  std::vector<double> coefficients;
  double center = 0.0;
  // spline
  std::vector<double> sample_s, sample_H;
  double margin = -1.0;  // <= 0: model default
};

struct RunConfig {
  double p = 3.0;
  std::vector<double> eps = {1e-2, 5e-3, 2e-3, 1e-3};
  GeometrySpec geometry;
  double ground_state_tol = 1e-10;
  double R_max = 600.0;
  double shoot_tol = 0.0;  // 0: 1e-10 h
  double solve_tol = 0.0;  // 0: 1e-12 eps^2
  double integrator_rtol = 1e-10;
  double quadrature_rel_tol = 1e-8;
  std::size_t quadrature_order = 12;
  double quadrature_panel_width = 1.0;
  double mismatch_tol = -1.0;  // <= 0: model default
  double s_min = 2.0, s_max = 40.0, ds = 0.1;
  double lambda_C = 10.0;
  std::string cache_dir = "cache";
  std::string output_dir = "out";
  std::vector<std::string> checks;  // empty: all
  unsigned threads = 0;             // 0: hardware concurrency
};

inline CurvatureModel make_model(const GeometrySpec& g) {
  CurvatureModel m;
  if (g.kind == "family") {
    m = CurvatureModel::family(g.b, g.h0, g.a, g.beta);
  } else if (g.kind == "polynomial") {
    m = CurvatureModel::polynomial(g.b, g.coefficients, g.center);
  } else if (g.kind == "spline") {
    m = CurvatureModel::spline(g.sample_s, g.sample_H);
  } else {
    throw Error(ErrorCode::ConfigParseError, "cli_io", "unknown geometry kind '" + g.kind + "'");
  }
  if (g.margin > 0.0) m.set_margin(g.margin);
  return m;
}

/// Checks that can be made before any computation.
inline void validate(const RunConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigParseError, "cli_io", what); };
  if (!(c.p > 2.0)) fail("p must exceed 2");
  if (c.eps.empty()) fail("eps list is empty");
  for (double e : c.eps)
    if (!(e > 0.0 && e < std::exp(-1.0))) fail("eps values must lie in (0, 1/e)");
  if (!(c.ground_state_tol > 0.0)) fail("ground_state tolerance must be positive");
  if (!(c.R_max >= 20.0 && c.R_max <= 700.0)) fail("R_max must lie in [20, 700]");
  if (c.shoot_tol < 0.0 || c.solve_tol < 0.0) fail("tolerances must be positive");
  if (!(c.integrator_rtol > 0.0) || !(c.quadrature_rel_tol > 0.0)) fail("tolerances must be positive");
  if (!(c.s_min >= 2.0 && c.s_max > c.s_min && c.ds > 0.0)) fail("kernel range needs 2 <= s_min < s_max, ds > 0");
  if (!(c.geometry.b > 0.0) && c.geometry.kind != "spline") fail("geometry.b must be positive");
  if (!(c.lambda_C > 0.0)) fail("lambda_C must be positive");
}

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (!j.is_object()) throw Error(ErrorCode::ConfigParseError, "cli_io", "config must be a JSON object");
    detail::read_opt(j, "p", c.p);
    if (j.contains("eps")) {
      if (j.at("eps").is_array())
        c.eps = j.at("eps").get<std::vector<double>>();
      else
        c.eps = {j.at("eps").get<double>()};
    }
    detail::read_opt(j, "R_max", c.R_max);
    detail::read_opt(j, "lambda_C", c.lambda_C);
    detail::read_opt(j, "cache_dir", c.cache_dir);
    detail::read_opt(j, "output_dir", c.output_dir);
    detail::read_opt(j, "checks", c.checks);
    detail::read_opt(j, "threads", c.threads);
    if (j.contains("geometry")) {
      const auto& g = j.at("geometry");
      auto& out = c.geometry;
      detail::read_opt(g, "kind", out.kind);
      detail::read_opt(g, "b", out.b);
      detail::read_opt(g, "h0", out.h0);
      detail::read_opt(g, "a", out.a);
      detail::read_opt(g, "beta", out.beta);
      detail::read_opt(g, "coefficients", out.coefficients);
      detail::read_opt(g, "center", out.center);
      detail::read_opt(g, "margin", out.margin);
      if (g.contains("samples")) {
        for (const auto& row : g.at("samples")) {
          out.sample_s.push_back(row.at(0).get<double>());
          out.sample_H.push_back(row.at(1).get<double>());
        }
        if (!out.sample_s.empty()) out.b = out.sample_s.back() - out.sample_s.front();
      }
    }
    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      detail::read_opt(t, "ground_state", c.ground_state_tol);
      detail::read_opt(t, "shoot", c.shoot_tol);
      detail::read_opt(t, "solve", c.solve_tol);
      detail::read_opt(t, "integrator_rtol", c.integrator_rtol);
      detail::read_opt(t, "quadrature", c.quadrature_rel_tol);
      detail::read_opt(t, "endpoint_mismatch", c.mismatch_tol);
    }
    if (j.contains("kernel")) {
      const auto& k = j.at("kernel");
      detail::read_opt(k, "s_min", c.s_min);
      detail::read_opt(k, "s_max", c.s_max);
      detail::read_opt(k, "ds", c.ds);
      detail::read_opt(k, "order", c.quadrature_order);
      detail::read_opt(k, "panel_width", c.quadrature_panel_width);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigParseError, "cli_io", e.what());
  }
  validate(c);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::ConfigParseError, "cli_io", "cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigParseError, "cli_io", path + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace spikechain

#pragma once

// Scaling and property checks over an eps sweep. Each check in the manifest
// below is evaluated exactly once per report.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "spikechain/continuum_ode.hpp"
#include "spikechain/discrete_solver.hpp"
#include "spikechain/error.hpp"
#include "spikechain/gauss_legendre.hpp"
#include "spikechain/geometry.hpp"
#include "spikechain/ground_state.hpp"
#include "spikechain/interaction.hpp"

namespace spikechain {

// ---------------------------------------------------------------------------
// evenness cancellation

struct EvennessReport {
  double q1 = 0.0, q2 = 0.0;
  double I = 0.0;
  double w_q1 = 0.0;
  double ratio = 0.0;  // |I| / (|q1 - q2| w(q1)); 0 when q1 == q2
};

/// I = int_{y2>0} p w(y)^{p-1} (w(y - q1 e1) + w(y + q2 e1)) dw/dy1 dy.
inline EvennessReport check_evenness(const GroundStateProfile& prof, double q1, double q2,
                                           const QuadratureSpec& spec = {}) {
  if (!(q1 > 0.0 && q2 > 0.0)) throw Error(ErrorCode::InvalidArgument, "verifier", "q1, q2 must be positive");
  const double p = prof.p();
  const double M = detail::decay_radius(p);
  auto f = [&](double y1, double y2) {
    const double r = std::hypot(y1, y2);
    if (r == 0.0) return 0.0;
    double w, wp;
    prof.eval(r, w, wp);
    const double pair = prof.w(std::hypot(y1 - q1, y2)) + prof.w(std::hypot(y1 + q2, y2));
    return p * std::pow(w, p - 1.0) * pair * wp * (y1 / r);
  };
  EvennessReport rep;
  rep.q1 = q1;
  rep.q2 = q2;
  rep.I = detail::refined_integral(f, -q2 - M, q1 + M, 0.0, M, spec, "verifier", "evenness integral");
  rep.w_q1 = prof.w(q1);
  rep.ratio = q1 == q2 ? 0.0 : std::fabs(rep.I) / (std::fabs(q1 - q2) * rep.w_q1);
  return rep;
}

// ---------------------------------------------------------------------------
// midpoint rule along the trajectory

struct MidpointReport {
  double h = 0.0;
  double max_error = 0.0;
  std::vector<double> errors;  // i = 1..k-1
};

/// |sum_{j<=i} f(t_bar_j) h - int_0^{i h} f dt| for i = 1..count. The first
/// interval is graded towards t = 0 where the trajectory is least smooth.
inline MidpointReport midpoint_rule_errors(const std::function<double(double)>& f, double h, std::size_t count) {
  static const auto rule = quadrature::gauss_legendre(20);
  MidpointReport rep;
  rep.h = h;
  double sum = 0.0, integral = 0.0;
  for (std::size_t i = 1; i <= count; ++i) {
    const double a = static_cast<double>(i - 1) * h, b = static_cast<double>(i) * h;
    sum += f(0.5 * (a + b)) * h;
    double piece = 0.0;
    if (i == 1) {
      double lo = 0.0;
      for (int g = 30; g >= 0; --g) {
        const double hi = h * std::ldexp(1.0, -g);
        piece += quadrature::integrate_1d(f, rule, lo, hi, 1);
        lo = hi;
      }
    } else {
      piece = quadrature::integrate_1d(f, rule, a, b, 2);
    }
    integral += piece;
    rep.errors.push_back(std::fabs(sum - integral));
    rep.max_error = std::max(rep.max_error, rep.errors.back());
  }
  return rep;
}

inline MidpointReport check_midpoint_rule(const ContinuumSolution& sol, const CurvatureModel& model) {
  auto f = [&](double t) { return model.Hp(sol.x(std::min(t, sol.b_eps()))); };
  return midpoint_rule_errors(f, sol.h(), static_cast<std::size_t>(sol.k() - 1));
}

// ---------------------------------------------------------------------------
// per-eps pipeline

struct PipelineOptions {
  ContinuumOptions continuum;
  SolveOptions solve;
  double lambda_C = 10.0;
};

struct EpsRun {
  double eps = 0.0;
  bool ok = false;
  std::string error;
  ContinuumSolution sol;
  SpikeConfiguration initial;  // s0 with E terms filled
  SpikeConfiguration solved;
  MidpointReport midpoint;
  double forward_mismatch = 0.0;  // forward re-integration vs (x_b, rho_b)
  double runtime = 0.0;
};

inline EpsRun run_eps(const CurvatureModel& model, const InteractionKernel& kernel, double eps,
                      const PipelineOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  EpsRun run;
  run.eps = eps;
  try {
    run.sol = shoot(model, kernel, eps, opt.continuum);
    const auto fwd = integrate_forward(model, kernel, eps, run.sol.x0, opt.continuum);
    run.forward_mismatch = std::max(std::fabs(fwd[0] - run.sol.x_b), std::fabs(fwd[1] - run.sol.rho_b));
    run.initial = initial_configuration(run.sol, kernel, model, opt.lambda_C);
    error_terms(run.initial, kernel, model);
    run.solved = solve_corrections(run.initial, kernel, model, opt.solve);
    run.midpoint = check_midpoint_rule(run.sol, model);
    run.ok = true;
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  run.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

// ---------------------------------------------------------------------------
// report

enum class CheckStatus { Pass, Fail, Warn, NotApplicable };

constexpr const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Warn: return "warn";
    case CheckStatus::NotApplicable: return "n/a";
  }
  return "?";
}

struct CheckRecord {
  std::string name;
  std::string anchor;
  CheckStatus status = CheckStatus::NotApplicable;
  std::string detail;
  std::vector<std::pair<std::string, std::vector<double>>> per_eps;  // measured series, one entry per eps
  std::vector<std::pair<std::string, double>> fitted;
  double runtime = 0.0;
};

struct ManifestEntry {
  const char* name;
  const char* anchor;
  bool fit_only = false;  // needs two or more eps; omitted from single-eps reports
};

/// Every check the report carries, in report order.
inline const std::vector<ManifestEntry>& check_manifest() {
  static const std::vector<ManifestEntry> m = {
      {"ground_state_fidelity", "w'' + w'/r - w + w^p = 0, w'(r) = -(1+o(1)) w(r)"},
      {"kernel_asymptotics", "Psi1(s) = C s^{-1/2} e^{-s} (1+o(1))"},
      {"evenness_cancellation", "I(q1,q2) = O(|q1-q2| w(|q1|))"},
      {"shooting_compatibility", "rho_b = eps ln eps H'(x(b_eps)), rho(0) = 0"},
      {"rho_b_asymptotics", "rho_b = -(H'(b_eps) + O(ln(-ln eps)/ln eps)) h"},
      {"x0_scaling", "x(0) = O(ln(-ln eps)/ln eps)", true},
      {"midpoint_rule", "sum_j H'(x(t_bar_j)) h - int H'(x(t)) dt = O(h^2)", true},
      {"error_terms_interior", "E_i = O(eps), sum_i |E_i| = O(eps)", true},
      {"error_term_closing", "E_k = O(eps^2 ln(-ln eps)/ln eps)", true},
      {"correction_bound", "||y||_inf <= C eps ln(-ln eps)", true},
      {"residual_exactness", "max_i |r_i| <= 1e-12 eps^2"},
      {"configuration_space", "|y_1| <= C eps ln(-ln eps), |second difference| <= C eps^3 / min Psi"},
      {"spacing_lower_bound", "|s_i - s_{i-1}| >= (1+o(1)) |eps ln eps|"},
      {"spacing_profile_bound", "w((s_i - s_{i-1})/eps) <= c eps/|ln eps|", true},
      {"end_gaps", "|s_2 - s_1|, |s_k - s_{k-1}| = 2(1+o(1)) |eps ln eps|"},
      {"reflection_symmetry", "s_i -> b - s_{k+1-i} for H symmetric about b/2"},
      {"initial_balance_symmetric", "r_k(s0) = 0 for H symmetric about b/2"},
  };
  return m;
}

struct VerificationReport {
  std::vector<double> eps;
  std::vector<EpsRun> runs;
  std::vector<CheckRecord> checks;
  H1Report geometry;
  double kernel_runtime = 0.0;

  bool all_pass() const {
    for (const auto& r : runs)
      if (!r.ok) return false;
    for (const auto& c : checks)
      if (c.status == CheckStatus::Fail) return false;
    return true;
  }
  const CheckRecord* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// fits

/// max/min of |values|; infinity if any value is zero or nonfinite.
inline double stability_ratio(const std::vector<double>& values) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double v : values) {
    const double a = std::fabs(v);
    if (!(a > 0.0) || !std::isfinite(a)) return std::numeric_limits<double>::infinity();
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  return values.empty() ? std::numeric_limits<double>::infinity() : hi / lo;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

inline bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

inline bool is_reflection_symmetric(const CurvatureModel& m) {
  for (int i = 0; i <= 20; ++i) {
    const double u = m.b() * i / 40.0;
    const double a = m.H(m.s_begin() + u), b = m.H(m.s_end() - u);
    if (std::fabs(a - b) > 1e-12 * std::max(1.0, std::fabs(a))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepInput {
  const GroundStateProfile* profile = nullptr;
  const InteractionKernel* kernel = nullptr;
  CurvatureModel model;
  std::vector<double> eps;
  PipelineOptions options;
  double mismatch_tol = -1.0;  // <= 0: model default
  double stability_limit = 3.0;
  unsigned threads = 1;
  QuadratureSpec evenness_quadrature;
  std::vector<std::string> checks;  // empty: all
};

namespace detail {

inline bool selected(const SweepInput& in, const std::string& name) {
  return in.checks.empty() || std::find(in.checks.begin(), in.checks.end(), name) != in.checks.end();
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

/// Evaluate the checks on completed runs. `runs` must be ordered by
/// decreasing eps.
inline std::vector<CheckRecord> evaluate_checks(const SweepInput& in, const std::vector<EpsRun>& runs) {
  using detail::fmt;
  std::vector<CheckRecord> out;
  const auto& model = in.model;
  const bool fits = runs.size() >= 2;
  const double limit = in.stability_limit;
  bool all_ok = true;
  for (const auto& r : runs) all_ok = all_ok && r.ok;

  auto series = [&](auto&& fn) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.ok ? fn(r) : std::numeric_limits<double>::quiet_NaN());
    return v;
  };
  auto begin = [&](const ManifestEntry& e) {
    CheckRecord c;
    c.name = e.name;
    c.anchor = e.anchor;
    return c;
  };
  auto stability = [&](CheckRecord& c, const std::string& label, const std::vector<double>& v, bool& ok) {
    c.per_eps.emplace_back(label, v);
    if (!fits) return;
    const double ratio = stability_ratio(v);
    c.fitted.emplace_back(label + " max/min", ratio);
    if (!(ratio <= limit)) {
      ok = false;
      c.detail += label + " varies " + fmt(ratio) + "x (limit " + fmt(limit) + "x); ";
    }
  };
  auto finish = [&](CheckRecord& c, bool ok) {
    if (!all_ok) {
      c.status = CheckStatus::Fail;
      c.detail += "some eps runs failed; ";
    } else {
      c.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
    }
    if (c.detail.empty()) c.detail = "ok";
  };

  for (const auto& entry : check_manifest()) {
    const std::string name = entry.name;
    if (!detail::selected(in, name) || (entry.fit_only && !fits)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckRecord c = begin(entry);
    bool ok = true;

    if (name == "ground_state_fidelity") {
      const auto& g = *in.profile;
      const double R = g.R_max();
      const double decay = std::fabs(g.w_prime(R) / g.w(R) + 1.0);
      c.fitted = {{"w0", g.w0()}, {"ode_residual_max", g.ode_residual_max()}, {"decay_ratio_defect", decay},
                  {"tail_constant", g.tail_constant()}, {"tail_fit_residual", g.tail_fit_residual()}};
      ok = g.ode_residual_max() <= 1e-8 && decay <= 1e-3 && g.tail_fit_residual() <= 1e-3;
      if (!ok) c.detail = "residual " + fmt(g.ode_residual_max()) + ", |w'/w+1| " + fmt(decay);
      c.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
    } else if (name == "kernel_asymptotics") {
      const auto& k = *in.kernel;
      std::vector<double> xs, ys, q;
      for (std::size_t i = 0; i < k.s_grid().size(); ++i) {
        const double s = k.s_grid()[i];
        if (s < k.s_max() - 4.0 - 1e-9) continue;
        xs.push_back(s);
        ys.push_back(std::log(k.psi_values()[i]));
        q.push_back(ys.back() - std::log(k.nu2()) + s + 0.5 * std::log(s));
      }
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
      }
      mx /= xs.size();
      my /= xs.size();
      double sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
      }
      const double slope = sxy / sxx;
      const double spread = *std::max_element(q.begin(), q.end()) - *std::min_element(q.begin(), q.end());
      c.fitted = {{"log_slope", slope}, {"prefactor_spread", spread}, {"asym_constant", k.asym_constant()},
                  {"nu2", k.nu2()}};
      ok = slope >= -1.02 && slope <= -0.98 && spread <= 0.05 && k.nu2() > 0.0;
      if (!ok) c.detail = "slope " + fmt(slope) + ", spread " + fmt(spread);
      c.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
    } else if (name == "evenness_cancellation") {
      const auto& g = *in.profile;
      const auto& qs = in.evenness_quadrature;
      const auto zero = check_evenness(g, 8.0, 8.0, qs);
      const auto ref = check_evenness(g, 8.0, 8.01, qs);
      std::vector<double> ratios;
      for (double q1 : {8.0, 9.0, 10.0, 11.0, 12.0})
        ratios.push_back(q1 == 8.0 ? ref.ratio : check_evenness(g, q1, q1 + 0.01, qs).ratio);
      const auto i1 = check_evenness(g, 10.0, 10.01, qs);
      const auto i2 = check_evenness(g, 10.0, 10.02, qs);
      const double doubling = i2.I / i1.I;
      const double zero_rel = std::fabs(zero.I) / std::fabs(ref.I / 0.01);
      c.per_eps.emplace_back("ratio at q1 = 8..12", ratios);
      c.fitted = {{"I(8,8)", zero.I}, {"I(8,8)/|dI/dq|", zero_rel}, {"ratio max/min", stability_ratio(ratios)},
                  {"I(10,10.02)/I(10,10.01)", doubling}};
      ok = zero_rel <= 1e-8 && stability_ratio(ratios) <= limit && std::fabs(doubling - 2.0) <= 0.05;
      if (!ok) c.detail = "zero " + fmt(zero_rel) + ", ratio spread " + fmt(stability_ratio(ratios)) +
                          ", doubling " + fmt(doubling);
      c.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
    } else if (name == "shooting_compatibility") {
      const auto compat = series([&](const EpsRun& r) {
        return std::fabs(r.sol.rho_b / (r.eps * r.sol.lattice.ln_eps * model.Hp(r.sol.x_b)) - 1.0);
      });
      const auto resid = series([](const EpsRun& r) { return r.sol.shoot_residual / r.sol.shoot_tol; });
      const auto fwd = series([&](const EpsRun& r) { return r.forward_mismatch; });
      c.per_eps = {{"|rho_b/(eps ln eps H'(x_b)) - 1|", compat}, {"|rho(0)|/shoot_tol", resid},
                   {"forward re-integration mismatch", fwd}};
      for (std::size_t i = 0; i < runs.size(); ++i) {
        if (!(compat[i] <= 1e-8)) ok = false;
        if (!(resid[i] <= 1.0)) ok = false;
      }
      finish(c, ok);
    } else if (name == "rho_b_asymptotics") {
      const auto gap = series([&](const EpsRun& r) { return std::fabs(r.sol.rho_b / r.sol.h() + model.Hp(r.sol.b_eps())); });
      const auto ref = series([&](const EpsRun& r) { return std::fabs(model.Hp(r.sol.b_eps())); });
      c.per_eps = {{"|rho_b/h + H'(b_eps)|", gap}, {"|H'(b_eps)|", ref}};
      if (fits && !strictly_decreasing(gap)) {
        ok = false;
        c.detail += "not decreasing over the sweep; ";
      }
      if (!runs.empty() && !(gap.back() <= 0.5 * ref.back())) {
        ok = false;
        c.detail += "terminal value above 0.5 |H'(b_eps)|; ";
      }
      finish(c, ok);
    } else if (name == "x0_scaling") {
      const auto v = series([](const EpsRun& r) {
        const double L = r.sol.lattice.ln_eps;
        return std::fabs(r.sol.x0) / (std::log(-L) / -L);
      });
      c.per_eps.emplace_back("x(0)", series([](const EpsRun& r) { return r.sol.x0; }));
      stability(c, "|x(0)| |ln eps| / ln(-ln eps)", v, ok);
      finish(c, ok);
    } else if (name == "midpoint_rule") {
      const auto err = series([](const EpsRun& r) { return r.midpoint.max_error; });
      const auto hs = series([](const EpsRun& r) { return r.sol.h(); });
      c.per_eps = {{"h", hs}, {"max midpoint error", err}};
      if (fits && all_ok) {
        const double alpha = loglog_slope(hs, err);
        c.fitted.emplace_back("alpha", alpha);
        if (!(alpha >= 1.8 && alpha <= 2.2)) {
          ok = false;
          c.detail = "alpha = " + fmt(alpha) + " outside [1.8, 2.2]; ";
        }
      }
      finish(c, ok);
    } else if (name == "error_terms_interior") {
      stability(c, "max_{i<k} |E_i|/eps", series([](const EpsRun& r) { return double(r.initial.E_max / r.eps); }), ok);
      stability(c, "sum_{i<k} |E_i|/eps", series([](const EpsRun& r) { return double(r.initial.E_sum / r.eps); }), ok);
      finish(c, ok);
    } else if (name == "error_term_closing") {
      stability(c, "|E_k| |ln eps| / (eps^2 ln(-ln eps))", series([](const EpsRun& r) {
                  const double L = r.sol.lattice.ln_eps;
                  return double(std::fabs(r.initial.E_k)) * -L / (r.eps * r.eps * std::log(-L));
                }),
                ok);
      c.per_eps.emplace_back("E_k", series([](const EpsRun& r) { return double(r.initial.E_k); }));
      finish(c, ok);
    } else if (name == "correction_bound") {
      stability(c, "||y||_inf / (eps ln(-ln eps))", series([](const EpsRun& r) {
                  return double(r.solved.y_inf_norm) / (r.eps * std::log(-r.sol.lattice.ln_eps));
                }),
                ok);
      c.per_eps.emplace_back("solve path (1 staged, 2 newton)",
                             series([](const EpsRun& r) { return r.solved.path == SolvePath::Staged ? 1.0 : 2.0; }));
      finish(c, ok);
    } else if (name == "residual_exactness") {
      const auto v = series([](const EpsRun& r) { return double(r.solved.max_residual / (r.eps * r.eps)); });
      c.per_eps.emplace_back("max |r_i| / eps^2", v);
      for (double x : v)
        if (!(x <= 1e-12)) ok = false;
      finish(c, ok);
    } else if (name == "configuration_space") {
      const auto y1 = series([](const EpsRun& r) {
        return double(std::fabs(r.solved.y[0])) / (r.eps * std::log(-r.sol.lattice.ln_eps));
      });
      const auto sec = series([](const EpsRun& r) { return double(r.solved.lambda_second_worst); });
      c.per_eps = {{"|y_1| / (eps ln(-ln eps))", y1}, {"max |second difference| / bound", sec}};
      bool in_space = true;
      for (const auto& r : runs) in_space = in_space && r.ok && r.solved.lambda_k_ok();
      if (!all_ok) {
        c.status = CheckStatus::Fail;
        c.detail = "some eps runs failed";
      } else if (in_space) {
        c.status = CheckStatus::Pass;
        c.detail = "ok";
      } else {
        // the constant is existential: report, do not fail
        c.status = CheckStatus::Warn;
        c.detail = "outside the configuration space for C = " + fmt(in.options.lambda_C);
      }
    } else if (name == "spacing_lower_bound") {
      const auto v = series([](const EpsRun& r) {
        const auto& s = r.solved.s;
        const double unit = r.eps * -r.sol.lattice.ln_eps;
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i + 2 < s.size(); ++i) m = std::min(m, double(s[i + 1] - s[i]) / unit);
        return m;
      });
      c.per_eps.emplace_back("min interior gap / (eps |ln eps|)", v);
      for (double x : v)
        if (!(x >= 0.8)) ok = false;
      finish(c, ok);
    } else if (name == "spacing_profile_bound") {
      const auto& g = *in.profile;
      stability(c, "max_i w(gap_i/eps) |ln eps| / eps", series([&](const EpsRun& r) {
                  const auto& s = r.solved.s;
                  double m = 0.0;
                  for (std::size_t i = 0; i + 1 < s.size(); ++i) m = std::max(m, g.w(double((s[i + 1] - s[i]) / r.eps)));
                  return m * -r.sol.lattice.ln_eps / r.eps;
                }),
                ok);
      finish(c, ok);
    } else if (name == "end_gaps") {
      auto end_gap = [](const EpsRun& r, bool first) {
        const auto& s = r.solved.s;
        const std::size_t n = s.size();
        const double gap = first ? double(s[1] - s[0]) : double(s[n - 1] - s[n - 2]);
        return gap / (r.eps * -r.sol.lattice.ln_eps);
      };
      const auto g1 = series([&](const EpsRun& r) { return end_gap(r, true); });
      const auto gk = series([&](const EpsRun& r) { return end_gap(r, false); });
      c.per_eps = {{"(s_2 - s_1)/(eps |ln eps|)", g1}, {"(s_k - s_{k-1})/(eps |ln eps|)", gk}};
      if (!runs.empty()) {
        for (double x : {g1.back(), gk.back()})
          if (!(x >= 1.5 && x <= 2.5)) {
            ok = false;
            c.detail += "end gap " + fmt(x) + " outside [1.5, 2.5] at the smallest eps; ";
          }
      }
      if (fits) {
        std::vector<double> d1, dk;
        for (std::size_t i = 0; i < g1.size(); ++i) {
          d1.push_back(std::fabs(g1[i] - 2.0));
          dk.push_back(std::fabs(gk[i] - 2.0));
        }
        if (!strictly_decreasing(d1) || !strictly_decreasing(dk)) {
          ok = false;
          c.detail += "end gaps not approaching 2 monotonically; ";
        }
      }
      finish(c, ok);
    } else if (name == "reflection_symmetry" || name == "initial_balance_symmetric") {
      if (!is_reflection_symmetric(model)) {
        c.status = CheckStatus::NotApplicable;
        c.detail = "curvature model is not symmetric about the segment midpoint";
      } else if (name == "reflection_symmetry") {
        const double mirror = model.s_begin() + model.s_end();
        const auto v = series([&](const EpsRun& r) {
          const auto& s = r.solved.s;
          const std::size_t n = s.size();
          long double m = 0;
          for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(s[i] + s[n - 1 - i] - mirror));
          return double(m);
        });
        c.per_eps.emplace_back("max |s_i + s_{k+1-i} - b|", v);
        for (double x : v)
          if (!(x <= 1e-8)) ok = false;
        finish(c, ok);
      } else {
        const auto v = series([](const EpsRun& r) { return double(std::fabs(r.initial.initial_r_k)) / r.sol.shoot_tol; });
        c.per_eps.emplace_back("|r_k(s0)| / shoot_tol", v);
        for (double x : v)
          if (!(x <= 10.0)) ok = false;
        if (!ok) c.detail = "initial closing residual exceeds 10 shoot tolerances; ";
        finish(c, ok);
      }
    }
    while (c.detail.size() >= 2 && c.detail.compare(c.detail.size() - 2, 2, "; ") == 0) c.detail.resize(c.detail.size() - 2);
    if (c.detail.empty()) c.detail = "ok";
    c.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(c));
  }
  return out;
}

/// Runs the pipeline for every eps (largest first) and evaluates the checks.
/// Throws if the curvature model fails the convexity / endpoint gate.
inline VerificationReport run_sweep(const SweepInput& in) {
  if (!in.profile || !in.kernel) throw Error(ErrorCode::InvalidArgument, "verifier", "profile and kernel are required");
  VerificationReport rep;
  rep.geometry = validate_H1(in.model, in.mismatch_tol);
  if (!rep.geometry.pass)
    throw Error(ErrorCode::InvalidArgument, "verifier", "curvature model rejected: " + rep.geometry.reason);
  rep.eps = in.eps;
  std::sort(rep.eps.begin(), rep.eps.end(), std::greater<>());
  rep.runs.resize(rep.eps.size());
  const unsigned threads = std::max(1u, std::min<unsigned>(in.threads, static_cast<unsigned>(rep.eps.size())));
  auto work = [&](unsigned id) {
    for (std::size_t i = id; i < rep.eps.size(); i += threads) rep.runs[i] = run_eps(in.model, *in.kernel, rep.eps[i], in.options);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned id = 0; id < threads; ++id) pool.emplace_back(work, id);
    for (auto& t : pool) t.join();
  }
  rep.checks = evaluate_checks(in, rep.runs);
  return rep;
}

// ---------------------------------------------------------------------------
// output

/// Machine-readable report: no timings, no paths, stable key order.
inline nlohmann::ordered_json report_json(const VerificationReport& rep) {
  nlohmann::ordered_json j;
  j["eps"] = rep.eps;
  j["geometry"] = {{"pass", rep.geometry.pass},
                   {"min_Hpp", rep.geometry.min_Hpp},
                   {"endpoint_mismatch", rep.geometry.mismatch},
                   {"reason", rep.geometry.reason}};
  auto runs = nlohmann::ordered_json::array();
  for (const auto& r : rep.runs) {
    nlohmann::ordered_json e;
    e["eps"] = r.eps;
    e["ok"] = r.ok;
    if (!r.ok) e["error"] = r.error;
    if (r.ok) {
      e["k"] = r.sol.k();
      e["h"] = r.sol.h();
      e["x_b"] = r.sol.x_b;
      e["rho_b"] = r.sol.rho_b;
      e["x0"] = r.sol.x0;
      e["solve_path"] = to_string(r.solved.path);
      e["y_inf_norm"] = double(r.solved.y_inf_norm);
      e["max_residual"] = double(r.solved.max_residual);
    }
    runs.push_back(e);
  }
  j["runs"] = runs;
  auto checks = nlohmann::ordered_json::array();
  for (const auto& c : rep.checks) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["anchor"] = c.anchor;
    e["status"] = to_string(c.status);
    e["detail"] = c.detail;
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const auto& [label, v] : c.per_eps) per[label] = v;
    e["per_eps"] = per;
    nlohmann::ordered_json fit = nlohmann::ordered_json::object();
    for (const auto& [label, v] : c.fitted) fit[label] = v;
    e["fitted"] = fit;
    checks.push_back(e);
  }
  j["checks"] = checks;
  j["all_pass"] = rep.all_pass();
  return j;
}

inline std::string report_text(const VerificationReport& rep) {
  std::ostringstream os;
  os << "verification report\n\n";
  os << "geometry: " << (rep.geometry.pass ? "pass" : "FAIL") << " (min H'' = " << detail::fmt(rep.geometry.min_Hpp)
     << ", endpoint mismatch = " << detail::fmt(rep.geometry.mismatch) << ")\n\n";
  for (const auto& r : rep.runs) {
    os << "eps = " << detail::fmt(r.eps) << ": ";
    if (!r.ok) {
      os << "FAILED: " << r.error << '\n';
      continue;
    }
    os << "k = " << r.sol.k() << ", x_b = " << detail::fmt(r.sol.x_b) << ", rho_b = " << detail::fmt(r.sol.rho_b)
       << ", |y| = " << detail::fmt(double(r.solved.y_inf_norm)) << ", max |r| = "
       << detail::fmt(double(r.solved.max_residual)) << " (" << to_string(r.solved.path) << "), "
       << detail::fmt(r.runtime) << " s\n";
  }
  os << '\n';
  for (const auto& c : rep.checks) {
    os << "[" << to_string(c.status) << "] " << c.name << "  {" << c.anchor << "}\n";
    for (const auto& [label, v] : c.per_eps) {
      os << "    " << label << ":";
      for (double x : v) os << ' ' << detail::fmt(x);
      os << '\n';
    }
    for (const auto& [label, v] : c.fitted) os << "    " << label << " = " << detail::fmt(v) << '\n';
    if (c.detail != "ok") os << "    " << c.detail << '\n';
    os << "    (" << detail::fmt(c.runtime) << " s)\n";
  }
  os << "\noverall: " << (rep.all_pass() ? "pass" : "FAIL") << '\n';
  return os.str();
}

}  // namespace spikechain

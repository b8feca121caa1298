#pragma once

// Balance system for k spikes at arclengths s_1 < ... < s_k:
//   r_i = Psi1((s_{i+1} - s_i)/eps) + eps^2 sum_{j<=i} H'(s_j),   i < k,
//   r_k = eps^2 sum_{j<=k} H'(s_j).
// Positions and residuals are carried in long double: the residual target is
// far below the rounding error of gaps/eps in double.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "spikechain/continuum_ode.hpp"
#include "spikechain/error.hpp"
#include "spikechain/geometry.hpp"
#include "spikechain/interaction.hpp"
#include "spikechain/roots.hpp"
#include "spikechain/table_io.hpp"

namespace spikechain {

using Real = long double;

enum class SolvePath { None, Staged, Newton };

constexpr const char* to_string(SolvePath p) {
  switch (p) {
    case SolvePath::None: return "none";
    case SolvePath::Staged: return "staged";
    case SolvePath::Newton: return "newton";
  }
  return "?";
}

struct SpikeConfiguration {
  double eps = 0.0;
  int k = 0;
  double h = 0.0;
  std::vector<double> t_bar;  // sampling times of s0 (t_bar_k is (k - 1/2) h for reference)
  std::vector<Real> s0, y, s;
  std::vector<Real> residuals;
  std::vector<Real> E;
  Real E_max = 0, E_sum = 0, E_k = 0;  // max/sum of |E_i| over i < k, and E_k

  // configuration space constraints
  double lambda_C = 10.0;
  bool lambda_y1_ok = true;
  bool lambda_second_ok = true;
  Real lambda_second_worst = 0;  // largest ratio |second difference| / bound
  bool lambda_k_ok() const { return lambda_y1_ok && lambda_second_ok; }

  Real y_inf_norm = 0;
  Real max_residual = 0;
  Real initial_max_residual = 0;
  Real initial_r_k = 0;
  SolvePath path = SolvePath::None;
  int iterations = 0;
  double contraction = 0.0;
};

namespace detail {

inline Real g_of(const InteractionKernel& kernel, Real arg) {
  try {
    return invert_psi1<Real>(kernel, arg);
  } catch (const Error& e) {
    throw Error(ErrorCode::KernelRangeExceeded, "discrete_solver",
                "G queried at " + io::fmt_long_double(arg) + " (" + e.what() + ")");
  }
}

inline Real psi1_of(const InteractionKernel& kernel, Real gap) {
  try {
    return kernel.psi1<Real>(gap);
  } catch (const Error& e) {
    throw Error(ErrorCode::KernelRangeExceeded, "discrete_solver",
                "Psi1 queried at gap/eps = " + io::fmt_long_double(gap) + " (" + e.what() + ")");
  }
}

inline Real hp_of(const CurvatureModel& model, Real s) {
  try {
    return model.Hp<Real>(s);
  } catch (const Error&) {
    throw Error(ErrorCode::StepOutOfDomain, "discrete_solver",
                "s = " + io::fmt_long_double(s) + " outside the curvature domain");
  }
}

}  // namespace detail

/// Residual vector of the balance system at positions s.
inline std::vector<Real> residual(const std::vector<Real>& s, double eps, const InteractionKernel& kernel,
                                  const CurvatureModel& model) {
  const std::size_t k = s.size();
  const Real e = eps;
  std::vector<Real> r(k);
  Real sum = 0;
  for (std::size_t i = 0; i < k; ++i) {
    sum += detail::hp_of(model, s[i]);
    if (i + 1 < k) {
      const Real gap = (s[i + 1] - s[i]) / e;
      r[i] = detail::psi1_of(kernel, gap) + e * e * sum;
    } else {
      r[i] = e * e * sum;
    }
  }
  return r;
}

inline Real max_abs(const std::vector<Real>& v) {
  Real m = 0;
  for (Real x : v) m = std::max(m, std::fabs(x));
  return m;
}

/// Midpoint samples of the trajectory plus the closing spike.
inline SpikeConfiguration initial_configuration(const ContinuumSolution& sol, const InteractionKernel& kernel,
                                                const CurvatureModel& model, double lambda_C = 10.0) {
  SpikeConfiguration c;
  c.eps = sol.eps();
  c.k = sol.k();
  c.h = sol.h();
  c.lambda_C = lambda_C;
  const auto k = static_cast<std::size_t>(c.k);
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "discrete_solver", "need at least two spikes");
  c.t_bar.resize(k);
  c.s0.resize(k);
  for (std::size_t i = 1; i < k; ++i) {
    c.t_bar[i - 1] = (static_cast<double>(i) - 0.5) * c.h;
    c.s0[i - 1] = sol.x(c.t_bar[i - 1]);
  }
  c.t_bar[k - 1] = (static_cast<double>(k) - 0.5) * c.h;
  const Real e = c.eps;
  const Real arg = e / static_cast<Real>(sol.lattice.ln_eps) * static_cast<Real>(sol.rho_b);
  c.s0[k - 1] = c.s0[k - 2] + e * detail::g_of(kernel, arg);
  for (std::size_t i = 0; i + 1 < k; ++i)
    if (!(c.s0[i + 1] > c.s0[i]))
      throw Error(ErrorCode::InvalidArgument, "discrete_solver", "initial positions are not increasing");
  for (std::size_t i = 0; i < k; ++i) (void)detail::hp_of(model, c.s0[i]);
  c.y.assign(k, 0);
  c.s = c.s0;
  c.residuals = residual(c.s, c.eps, kernel, model);
  c.max_residual = max_abs(c.residuals);
  c.initial_max_residual = c.max_residual;
  c.initial_r_k = c.residuals.back();
  return c;
}

/// E_i = s0_{i+1} - s0_i - eps G(-eps^2 sum_{j<=i} H'(s0_j)) for i < k, E_k = eps^2 sum H'(s0_j).
inline std::vector<Real> error_terms(SpikeConfiguration& c, const InteractionKernel& kernel,
                                     const CurvatureModel& model) {
  const std::size_t k = c.s0.size();
  const Real e = c.eps;
  std::vector<Real> E(k);
  Real sum = 0;
  c.E_max = 0;
  c.E_sum = 0;
  for (std::size_t i = 0; i < k; ++i) {
    sum += detail::hp_of(model, c.s0[i]);
    if (i + 1 < k) {
      E[i] = c.s0[i + 1] - c.s0[i] - e * detail::g_of(kernel, -e * e * sum);
      c.E_max = std::max(c.E_max, std::fabs(E[i]));
      c.E_sum += std::fabs(E[i]);
    } else {
      E[i] = e * e * sum;
    }
  }
  c.E_k = E.back();
  c.E = E;
  return E;
}

/// Configuration-space checks for y = s - s0.
inline void update_lambda_flags(SpikeConfiguration& c, const InteractionKernel& kernel) {
  const std::size_t k = c.s.size();
  const Real e = c.eps;
  const Real C = c.lambda_C;
  c.lambda_y1_ok = std::fabs(c.y[0]) <= C * e * std::log(-std::log(e));
  c.lambda_second_ok = true;
  c.lambda_second_worst = 0;
  for (std::size_t i = 1; i + 1 < k; ++i) {
    const Real second = (c.s[i + 1] - c.s[i]) - (c.s[i] - c.s[i - 1]);
    const Real g_left = (c.s0[i] - c.s0[i - 1]) / e;
    const Real g_right = (c.s0[i + 1] - c.s0[i]) / e;
    Real psi_min;
    try {
      psi_min = std::min(kernel.psi<Real>(g_left), kernel.psi<Real>(g_right));
    } catch (const Error&) {
      c.lambda_second_ok = false;
      continue;
    }
    const Real bound = C * e * e * e / psi_min;
    const Real ratio = std::fabs(second) / bound;
    c.lambda_second_worst = std::max(c.lambda_second_worst, ratio);
    if (ratio > 1) c.lambda_second_ok = false;
  }
}

struct SolveOptions {
  Real tol = 0;  // 0: 1e-12 eps^2
  int max_iter = 400;
  double contraction_limit = 0.9;
  int max_newton = 60;
  bool allow_staged = true;
  bool allow_newton = true;
};

namespace detail {

/// Positions generated from s_1 by the first k-1 equations taken exactly.
/// Returns r_k, or a signed surrogate of the same sign when the recursion
/// cannot be continued (a partial sum turns nonnegative, a gap leaves the
/// kernel table, or a position leaves the domain).
inline Real staged_chain(Real s1, std::size_t k, Real e, const InteractionKernel& kernel,
                         const CurvatureModel& model, std::vector<Real>& s, bool& complete) {
  s.assign(k, 0);
  s[0] = s1;
  complete = false;
  const Real lo_arg = kernel.psi1<Real>(static_cast<Real>(kernel.s_max()));
  const Real hi_arg = kernel.psi1<Real>(static_cast<Real>(kernel.s_min()));
  Real sum = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!model.in_domain(static_cast<double>(s[i]))) {
      // ran off the far end: the chain overshoots
      return s[i] > static_cast<Real>(model.s_end()) ? Real(1) + static_cast<Real>(k - i) : -Real(1) - static_cast<Real>(k - i);
    }
    sum += model.Hp<Real>(s[i]);
    if (i + 1 == k) break;
    const Real arg = -e * e * sum;
    if (!(arg > lo_arg)) return Real(1) + static_cast<Real>(k - 1 - i);
    if (!(arg < hi_arg)) return -Real(1) - static_cast<Real>(k - 1 - i);
    s[i + 1] = s[i] + e * invert_psi1<Real>(kernel, arg);
  }
  complete = true;
  return e * e * sum;
}

}  // namespace detail

/// Staged solve: exact forward recursion through the first k-1 equations and a
/// scalar root-find on s_1 for the closing sum; damped Newton on all unknowns
/// as fallback.
inline SpikeConfiguration solve_corrections(SpikeConfiguration c, const InteractionKernel& kernel,
                                            const CurvatureModel& model, SolveOptions opt = {}) {
  const std::size_t k = c.s0.size();
  const Real e = c.eps;
  if (opt.tol <= 0) opt.tol = Real(1e-12) * e * e;
  c.s = c.s0;
  c.residuals = residual(c.s, c.eps, kernel, model);
  c.initial_max_residual = max_abs(c.residuals);
  c.initial_r_k = c.residuals.back();
  c.path = SolvePath::None;
  c.iterations = 0;
  c.contraction = 0.0;

  auto finish = [&](SolvePath path) {
    c.path = path;
    c.residuals = residual(c.s, c.eps, kernel, model);
    c.max_residual = max_abs(c.residuals);
    c.y.resize(k);
    c.y_inf_norm = 0;
    for (std::size_t i = 0; i < k; ++i) {
      c.y[i] = c.s[i] - c.s0[i];
      c.y_inf_norm = std::max(c.y_inf_norm, std::fabs(c.y[i]));
    }
    update_lambda_flags(c, kernel);
    return c;
  };

  if (c.initial_max_residual <= opt.tol) return finish(SolvePath::Staged);

  std::string staged_failure;
  if (opt.allow_staged) {
    std::vector<Real> work;
    std::vector<Real> history;
    bool complete = false;
    auto phi = [&](Real s1) {
      const Real v = detail::staged_chain(s1, k, e, kernel, model, work, complete);
      history.push_back(std::fabs(v));
      return v;
    };
    try {
      // bracket s_1 around its initial value
      Real step = e;
      Real a = c.s0[0] - step, b = c.s0[0] + step;
      Real fa = phi(a), fb = phi(b);
      for (int it = 0; (fa > 0) == (fb > 0) && it < 60; ++it) {
        step *= 2;
        a = c.s0[0] - step;
        b = c.s0[0] + step;
        fa = phi(a);
        fb = phi(b);
      }
      if ((fa > 0) == (fb > 0)) {
        staged_failure = "no sign change of the closing sum";
      } else {
        history.clear();
        const auto root = roots::brent<Real>(phi, a, b, fa, fb, Real(0), Real(0.5) * opt.tol, opt.max_iter);
        detail::staged_chain(root.x, k, e, kernel, model, work, complete);
        c.iterations = root.iterations;
        // empirical contraction: geometric mean reduction of the closing residual
        if (history.size() >= 2 && history.front() > 0 && history.back() > 0) {
          c.contraction = std::pow(static_cast<double>(history.back() / history.front()),
                                   1.0 / static_cast<double>(history.size() - 1));
        }
        if (!complete) {
          staged_failure = "recursion incomplete at the root";
        } else if (c.contraction > opt.contraction_limit) {
          staged_failure = "contraction factor " + io::fmt_double(c.contraction) + " above limit";
        } else {
          c.s = work;
          const auto r = residual(c.s, c.eps, kernel, model);
          if (max_abs(r) <= opt.tol) return finish(SolvePath::Staged);
          staged_failure = "residual " + io::fmt_long_double(max_abs(r)) + " above tolerance";
        }
      }
    } catch (const Error& err) {
      staged_failure = err.what();
    }
  }

  if (opt.allow_newton) {
    using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
    const auto n = static_cast<Eigen::Index>(k);
    std::vector<Real> s = c.s0;
    std::vector<Real> r = residual(s, c.eps, kernel, model);
    Real norm = max_abs(r);
    for (int it = 1; it <= opt.max_newton && norm > opt.tol; ++it) {
      Mat J = Mat::Zero(n, n);
      std::vector<Real> hpp(k);
      for (std::size_t j = 0; j < k; ++j) hpp[j] = model.Hpp<Real>(s[j]);
      for (std::size_t i = 0; i < k; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j <= i; ++j) J(ii, static_cast<Eigen::Index>(j)) = e * e * hpp[j];
        if (i + 1 < k) {
          const Real d = kernel.psi1_prime<Real>((s[i + 1] - s[i]) / e) / e;
          J(ii, ii + 1) += d;
          J(ii, ii) -= d;
        }
      }
      Vec rv(n);
      for (Eigen::Index i = 0; i < n; ++i) rv(i) = r[static_cast<std::size_t>(i)];
      const Vec dx = J.partialPivLu().solve(-rv);
      Real lambda = 1;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls, lambda /= 2) {
        std::vector<Real> trial(s);
        for (std::size_t i = 0; i < k; ++i) trial[i] += lambda * dx(static_cast<Eigen::Index>(i));
        try {
          const auto rt = residual(trial, c.eps, kernel, model);
          const Real nt = max_abs(rt);
          if (nt < norm || nt <= opt.tol) {
            s = trial;
            r = rt;
            norm = nt;
            accepted = true;
            break;
          }
        } catch (const Error&) {
        }
      }
      c.iterations = it;
      if (!accepted) break;
    }
    if (norm <= opt.tol) {
      c.s = s;
      return finish(SolvePath::Newton);
    }
    c.s = s;
    finish(SolvePath::None);
    throw Error(ErrorCode::NoConvergence, "discrete_solver",
                "staged path: " + (staged_failure.empty() ? std::string("disabled") : staged_failure) +
                    "; Newton path: final max residual " + io::fmt_long_double(norm));
  }
  throw Error(ErrorCode::NoConvergence, "discrete_solver", "staged path: " + staged_failure);
}

inline void write_configuration(const std::string& path, const SpikeConfiguration& c) {
  io::Table t;
  t.set("kind", "spike_configuration");
  t.set("eps", c.eps);
  t.set("k", std::to_string(c.k));
  t.set("h", c.h);
  t.set("y_inf_norm", io::fmt_long_double(c.y_inf_norm));
  t.set("max_residual", io::fmt_long_double(c.max_residual));
  t.set("solve_path", to_string(c.path));
  t.set("lambda_k_ok", c.lambda_k_ok() ? "true" : "false");
  t.columns = {"i", "t_bar", "s0", "y", "s", "r"};
  for (std::size_t i = 0; i < c.s0.size(); ++i) {
    t.rows.push_back({std::to_string(i + 1), io::fmt_double(c.t_bar[i]), io::fmt_long_double(c.s0[i]),
                      io::fmt_long_double(c.y[i]), io::fmt_long_double(c.s[i]), io::fmt_long_double(c.residuals[i])});
  }
  io::write_table(path, t);
}

}  // namespace spikechain

#pragma once

// Continuum limit of the spike chain:
//   dx/dt   = -(1/ln eps) G((eps/ln eps) rho),   drho/dt = H'(x),
//   rho(0) = 0,  x(b_eps) = x_b,  rho(b_eps) = eps ln eps H'(x_b),
// solved by integrating backward from b_eps and shooting on x_b.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "spikechain/dormand_prince.hpp"
#include "spikechain/error.hpp"
#include "spikechain/geometry.hpp"
#include "spikechain/interaction.hpp"
#include "spikechain/roots.hpp"
#include "spikechain/table_io.hpp"

namespace spikechain {

/// Lattice quantities fixed by eps and the segment length.
struct BootLattice {
  double eps = 0.0;
  double ln_eps = 0.0;
  double h = 0.0;  // -eps ln eps
  int k = 0;       // floor(b/h) + 1
  double b_eps = 0.0;

  static BootLattice make(double eps, double b) {
    if (!(eps > 0.0 && eps < std::exp(-1.0)))
      throw Error(ErrorCode::InvalidArgument, "continuum_ode", "eps must lie in (0, 1/e)");
    BootLattice L;
    L.eps = eps;
    L.ln_eps = std::log(eps);
    L.h = -eps * L.ln_eps;
    L.k = static_cast<int>(std::floor(b / L.h)) + 1;
    L.b_eps = (L.k - 1) * L.h;
    return L;
  }
};

struct ContinuumOptions {
  double rtol = 1e-10;
  double atol = 1e-13;
  double shoot_tol = 0.0;          // 0: 1e-10 h
  double bracket_half_width = 0.05;  // in units of b
  int max_iter = 200;
};

struct Trajectory {
  BootLattice lattice;
  double x_b = 0.0;
  double rho_b = 0.0;
  double x0 = 0.0;
  double rho0 = 0.0;
  std::size_t clamped_steps = 0;  // accepted steps ending with rho above -eps^3
  int escape = 0;                 // direction of a TrajectoryEscape, if one was thrown
  double max_rho = -std::numeric_limits<double>::infinity();
  ode::DenseOutput<2> dense;
};

namespace detail {

struct ChainRhs {
  const CurvatureModel& model;
  const InteractionKernel& kernel;
  double eps, ln_eps, floor;
  int* escape = nullptr;  // set to -1 / +1 when x leaves below / above

  ode::State<2> operator()(double, const ode::State<2>& y) const {
    const double rho = std::min(y[1], -floor);
    const double arg = eps / ln_eps * rho;
    double g;
    try {
      g = invert_psi1(kernel, arg);
    } catch (const Error& e) {
      throw Error(ErrorCode::KernelRangeExceeded, "continuum_ode",
                  "G queried at " + io::fmt_double(arg) + " (" + e.what() + ")");
    }
    double hp;
    try {
      hp = model.Hp(y[0]);
    } catch (const Error&) {
      if (escape) *escape = y[0] < model.s_begin() ? -1 : 1;
      throw Error(ErrorCode::TrajectoryEscape, "continuum_ode",
                  "x = " + io::fmt_double(y[0]) + " left the extended curvature domain");
    }
    return {-g / ln_eps, hp};
  }
};

}  // namespace detail

/// One backward integration from the terminal data at x_b. rho above the
/// clamp floor -eps^3 is fed to G as the floor value.
inline Trajectory integrate_backward(const CurvatureModel& model, const InteractionKernel& kernel, double eps,
                                     double x_b, const ContinuumOptions& opt = {}, bool keep_dense = true,
                                     int* escape = nullptr) {
  Trajectory tr;
  tr.lattice = BootLattice::make(eps, model.b());
  const auto& L = tr.lattice;
  if (!model.in_domain(x_b))
    throw Error(ErrorCode::TrajectoryEscape, "continuum_ode", "x_b = " + io::fmt_double(x_b) + " outside the domain");
  tr.x_b = x_b;
  tr.rho_b = eps * L.ln_eps * model.Hp(x_b);
  const double floor = eps * eps * eps;
  detail::ChainRhs rhs{model, kernel, eps, L.ln_eps, floor, escape};
  ode::DopriOptions o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  o.max_step = L.h;
  auto observer = [&](double, const ode::State<2>& y, std::ptrdiff_t) {
    if (y[1] > -floor) ++tr.clamped_steps;
    tr.max_rho = std::max(tr.max_rho, y[1]);
    return true;
  };
  tr.max_rho = tr.rho_b;
  const auto res = ode::integrate<2>(rhs, L.b_eps, ode::State<2>{x_b, tr.rho_b}, 0.0, o, std::span<const double>{},
                                     observer, keep_dense ? &tr.dense : nullptr);
  tr.x0 = res.y[0];
  tr.rho0 = res.y[1];
  return tr;
}

/// Forward integration from (x0, rho = 0) at t = 0 to b_eps.
inline ode::State<2> integrate_forward(const CurvatureModel& model, const InteractionKernel& kernel, double eps,
                                       double x0, const ContinuumOptions& opt = {}) {
  const BootLattice L = BootLattice::make(eps, model.b());
  detail::ChainRhs rhs{model, kernel, eps, L.ln_eps, eps * eps * eps};
  ode::DopriOptions o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  o.max_step = L.h;
  return ode::integrate<2>(rhs, 0.0, ode::State<2>{x0, 0.0}, L.b_eps, o).y;
}

struct ContinuumSolution {
  BootLattice lattice;
  double x_b = 0.0;
  double rho_b = 0.0;
  double x0 = 0.0;
  double shoot_tol = 0.0;
  double shoot_residual = 0.0;  // |rho(0)|
  int iterations = 0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  std::size_t clamped_steps = 0;
  std::vector<double> t_grid, x_values, rho_values;
  ode::DenseOutput<2> dense;

  double eps() const { return lattice.eps; }
  double h() const { return lattice.h; }
  int k() const { return lattice.k; }
  double b_eps() const { return lattice.b_eps; }
  double x(double t) const { return dense.eval(t)[0]; }
  double rho(double t) const { return dense.eval(t)[1]; }
};

/// Root-find x_b so that rho(0) = 0.
inline ContinuumSolution shoot(const CurvatureModel& model, const InteractionKernel& kernel, double eps,
                               const ContinuumOptions& opt = {}) {
  const BootLattice L = BootLattice::make(eps, model.b());
  const double tol = opt.shoot_tol > 0.0 ? opt.shoot_tol : 1e-10 * L.h;
  auto F = [&](double xb) { return integrate_backward(model, kernel, eps, xb, opt, false).rho0; };
  // Trial value, or a sign when the trajectory escapes: running off the low
  // end means rho(0) would be positive, off the high end negative.
  struct Probe {
    double value;
    bool escaped;
  };
  auto probe = [&](double xb) -> Probe {
    int escape = 0;
    try {
      return {integrate_backward(model, kernel, eps, xb, opt, false, &escape).rho0, false};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TrajectoryEscape) throw;
      return {escape < 0 ? 1.0 : -1.0, true};
    }
  };

  const double centre = model.s_begin() + L.b_eps;
  const double lo_limit = model.s_begin() - model.margin();
  const double hi_limit = model.s_end() + model.margin();
  double half = opt.bracket_half_width * model.b();
  double a = 0.0, c = 0.0;
  Probe pa{}, pc{};
  bool found = false;
  while (!found) {
    a = std::max(centre - half, lo_limit);
    c = std::min(centre + half, hi_limit);
    pa = probe(a);
    pc = probe(c);
    if ((pa.value <= 0.0) != (pc.value <= 0.0)) {
      found = true;
      break;
    }
    if (a == lo_limit && c == hi_limit) break;
    half *= 2.0;
  }
  if (!found)
    throw Error(ErrorCode::BracketFailure, "continuum_ode",
                "rho(0) keeps one sign for x_b in [" + io::fmt_double(a) + ", " + io::fmt_double(c) + "]");
  // shrink until both ends are genuine trajectories
  for (int it = 0; (pa.escaped || pc.escaped) && it < 200; ++it) {
    const double m = 0.5 * (a + c);
    const Probe pm = probe(m);
    if ((pm.value <= 0.0) == (pa.value <= 0.0)) {
      a = m;
      pa = pm;
    } else {
      c = m;
      pc = pm;
    }
  }
  if (pa.escaped || pc.escaped)
    throw Error(ErrorCode::BracketFailure, "continuum_ode", "no bracket free of escaping trajectories");
  const double fa = pa.value, fc = pc.value;

  const auto root = roots::brent<double>(F, a, c, fa, fc, 4.0 * std::numeric_limits<double>::epsilon(), tol,
                                         opt.max_iter);
  if (!(std::fabs(root.fx) <= tol))
    throw Error(ErrorCode::NoConvergence, "continuum_ode",
                "|rho(0)| = " + io::fmt_double(std::fabs(root.fx)) + " above shoot tolerance " + io::fmt_double(tol));

  Trajectory tr = integrate_backward(model, kernel, eps, root.x, opt, true);
  if (tr.max_rho > tol)
    throw Error(ErrorCode::SignConventionViolation, "continuum_ode",
                "rho reaches " + io::fmt_double(tr.max_rho) + " > 0 on the solution");

  ContinuumSolution sol;
  sol.lattice = L;
  sol.x_b = root.x;
  sol.rho_b = tr.rho_b;
  sol.x0 = tr.x0;
  sol.shoot_tol = tol;
  sol.shoot_residual = std::fabs(tr.rho0);
  sol.iterations = root.iterations;
  sol.bracket_lo = a;
  sol.bracket_hi = c;
  sol.clamped_steps = tr.clamped_steps;
  sol.dense = std::move(tr.dense);
  // step endpoints in increasing t
  const auto& steps = sol.dense.steps();
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    const double t = it->t0 + it->h;
    const auto y = it->eval(t);
    sol.t_grid.push_back(t);
    sol.x_values.push_back(y[0]);
    sol.rho_values.push_back(y[1]);
  }
  sol.t_grid.push_back(L.b_eps);
  sol.x_values.push_back(sol.x_b);
  sol.rho_values.push_back(sol.rho_b);
  return sol;
}

inline void write_trajectory(const std::string& path, const ContinuumSolution& sol) {
  io::Table t;
  t.set("kind", "continuum_trajectory");
  t.set("eps", sol.eps());
  t.set("h", sol.h());
  t.set("k", std::to_string(sol.k()));
  t.set("b_eps", sol.b_eps());
  t.set("x_b", sol.x_b);
  t.set("rho_b", sol.rho_b);
  t.set("shoot_residual", sol.shoot_residual);
  t.columns = {"t", "x", "rho"};
  for (std::size_t i = 0; i < sol.t_grid.size(); ++i)
    t.rows.push_back({io::fmt_double(sol.t_grid[i]), io::fmt_double(sol.x_values[i]), io::fmt_double(sol.rho_values[i])});
  io::write_table(path, t);
}

}  // namespace spikechain

#pragma once

// Independent reference solvers shared by the unit tests and the acceptance
// gate. None of them reuses the library's own solvers.

#include <boost/math/special_functions/bessel.hpp>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <vector>

#include <spikechain/geometry.hpp>
#include <spikechain/interaction.hpp>

namespace oracles {

// Second-order finite-difference relaxation of the radial problem on [0, L]
// with w'(0) = 0 and the linear-tail Robin condition at L, solved by damped
// Newton with a tridiagonal (Thomas) linear solve. Returns w(0).
inline double relaxation_w0(double p, double h, double L = 20.0) {
  const auto N = static_cast<std::size_t>(std::llround(L / h));
  const double kappa = boost::math::cyl_bessel_k(1, L) / boost::math::cyl_bessel_k(0, L);
  const double ih2 = 1.0 / (h * h);
  std::vector<double> F(N + 1), lo(N + 1), di(N + 1), up(N + 1);
  // fills F and the tridiagonal Jacobian; returns max |F|
  auto assemble = [&](const std::vector<double>& w) {
    double norm = 0.0;
    for (std::size_t j = 0; j <= N; ++j) {
      const double nl = std::pow(std::fabs(w[j]), p), dnl = p * std::pow(std::fabs(w[j]), p - 1.0);
      if (j == 0) {
        F[j] = 4.0 * (w[1] - w[0]) * ih2 - w[0] + nl;
        di[j] = -4.0 * ih2 - 1.0 + dnl;
        up[j] = 4.0 * ih2;
        lo[j] = 0.0;
      } else {
        const double r = j * h;
        const double cm = ih2 - 0.5 / (r * h), cp = ih2 + 0.5 / (r * h);
        double wp = j < N ? w[j + 1] : 0.0;
        double a = cm, c = cp;
        if (j == N) {  // ghost node from the central Robin condition
          wp = w[N - 1] - 2.0 * h * kappa * w[N];
          a = cm + cp;
          c = 0.0;
        }
        F[j] = cm * w[j - 1] - 2.0 * ih2 * w[j] + cp * wp - w[j] + nl;
        lo[j] = a;
        di[j] = -2.0 * ih2 - 1.0 + dnl - (j == N ? 2.0 * h * kappa * cp : 0.0);
        up[j] = c;
      }
      norm = std::max(norm, std::fabs(F[j]));
    }
    return norm;
  };
  std::vector<double> w(N + 1);
  for (std::size_t j = 0; j <= N; ++j) w[j] = 2.2 * std::exp(-0.6 * (j * h) * (j * h));
  double norm = assemble(w);
  // max |F| bottoms out near 1e-16 / h^2, so convergence is judged on the step
  for (int it = 0; it < 100; ++it) {
    std::vector<double> cprime(N + 1), dprime(N + 1), dx(N + 1);
    cprime[0] = up[0] / di[0];
    dprime[0] = -F[0] / di[0];
    for (std::size_t j = 1; j <= N; ++j) {
      const double m = di[j] - lo[j] * cprime[j - 1];
      cprime[j] = up[j] / m;
      dprime[j] = (-F[j] - lo[j] * dprime[j - 1]) / m;
    }
    dx[N] = dprime[N];
    for (std::size_t j = N; j-- > 0;) dx[j] = dprime[j] - cprime[j] * dx[j + 1];
    double step = 0.0;
    for (double d : dx) step = std::max(step, std::fabs(d));
    if (step < 1e-14) break;
    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30 && !accepted; ++ls, lambda *= 0.5) {
      std::vector<double> trial(w);
      for (std::size_t j = 0; j <= N; ++j) trial[j] += lambda * dx[j];
      const double n = assemble(trial);
      if (n < norm || step < 1e-10) {
        w.swap(trial);
        norm = n;
        accepted = true;
      }
    }
    if (!accepted) break;
    assemble(w);
  }
  return w[0];
}

// Richardson combination of two resolutions, both at least 5x finer than the
// library's dense grid.
inline double relaxation_w0_extrapolated(double p) {
  const double coarse = relaxation_w0(p, 1e-3), fine = relaxation_w0(p, 5e-4);
  return (4.0 * fine - coarse) / 3.0;
}

// Balance residuals scaled by eps^-2, for MINPACK's hybrid method.
struct BalanceFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  const spikechain::CurvatureModel& m;
  const spikechain::InteractionKernel& k;
  double eps;
  int n;
  int inputs() const { return n; }
  int values() const { return n; }
  int operator()(const Eigen::VectorXd& s, Eigen::VectorXd& r) const {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      sum += m.Hp(s(i));
      const double closing = eps * eps * sum;
      r(i) = (i + 1 < n ? k.psi1((s(i + 1) - s(i)) / eps) + closing : closing) / (eps * eps);
    }
    return 0;
  }
};

struct PowellResult {
  std::vector<double> s;
  int status = 0;
  double max_residual = 0.0;  // unscaled
};

inline PowellResult powell_balance(const spikechain::CurvatureModel& m, const spikechain::InteractionKernel& k,
                                   double eps, const std::vector<double>& start) {
  const int n = static_cast<int>(start.size());
  BalanceFunctor f{m, k, eps, n};
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(start.data(), n);
  Eigen::NumericalDiff<BalanceFunctor, Eigen::Central> nd(f);
  Eigen::HybridNonLinearSolver<Eigen::NumericalDiff<BalanceFunctor, Eigen::Central>> solver(nd);
  solver.parameters.xtol = 1e-15;
  solver.parameters.maxfev = 20000;
  PowellResult out;
  out.status = solver.solve(x);
  Eigen::VectorXd r(n);
  f(x, r);
  out.max_residual = r.cwiseAbs().maxCoeff() * eps * eps;
  out.s.assign(x.data(), x.data() + n);
  return out;
}

}  // namespace oracles

#pragma once

// Dormand-Prince 5(4) with step-size control and the standard 4th-order
// continuous extension. Integrates in either direction of t.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spikechain/error.hpp"

namespace spikechain::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct DopriOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0: automatic
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 2'000'000;
};

template <std::size_t N>
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  std::array<State<N>, 5> coeff{};

  State<N> eval(double t) const {
    const double theta = (t - t0) / h;
    const double theta1 = 1.0 - theta;
    State<N> y{};
    for (std::size_t i = 0; i < N; ++i) {
      y[i] = coeff[0][i] +
             theta * (coeff[1][i] + theta1 * (coeff[2][i] + theta * (coeff[3][i] + theta1 * coeff[4][i])));
    }
    return y;
  }
};

/// Continuous solution assembled from accepted steps, valid on the span
/// covered by the integration.
template <std::size_t N>
class DenseOutput {
 public:
  void push(const DenseStep<N>& step) { steps_.push_back(step); }
  bool empty() const { return steps_.empty(); }
  const std::vector<DenseStep<N>>& steps() const { return steps_; }

  double t_begin() const { return steps_.front().t0; }
  double t_end() const { return steps_.back().t0 + steps_.back().h; }

  State<N> eval(double t) const {
    if (steps_.empty()) throw Error(ErrorCode::InvalidArgument, "ode", "empty dense output");
    const bool forward = steps_.front().h > 0.0;
    // steps are stored in integration order; find the one containing t
    auto contains_after = [&](const DenseStep<N>& s) {
      const double end = s.t0 + s.h;
      return forward ? end < t : end > t;
    };
    auto it = std::partition_point(steps_.begin(), steps_.end(), contains_after);
    if (it == steps_.end()) it = std::prev(steps_.end());
    return it->eval(t);
  }

 private:
  std::vector<DenseStep<N>> steps_;
};

template <std::size_t N>
struct OdeResult {
  double t = 0.0;
  State<N> y{};
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool stopped = false;  // observer requested termination
};

namespace detail {
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace detail

/// Integrate y' = rhs(t, y) from t0 to t1. Steps are shortened so that every
/// entry of `landing` (ordered in the direction of integration) is hit
/// exactly. After each accepted step `observer(t, y, landing_index)` is
/// called, landing_index being -1 unless t is one of the landing times; a
/// false return stops the integration.
template <std::size_t N, class Rhs, class Observer>
OdeResult<N> integrate(Rhs&& rhs, double t0, const State<N>& y0, double t1, const DopriOptions& opt,
                       std::span<const double> landing, Observer&& observer, DenseOutput<N>* dense = nullptr) {
  using namespace detail;
  OdeResult<N> res;
  res.t = t0;
  res.y = y0;
  if (t1 == t0) return res;
  const double dir = t1 > t0 ? 1.0 : -1.0;

  auto norm = [&](const State<N>& err, const State<N>& ya, const State<N>& yb) {
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::fabs(ya[i]), std::fabs(yb[i]));
      acc += (err[i] / sc) * (err[i] / sc);
    }
    return std::sqrt(acc / static_cast<double>(N));
  };

  double t = t0;
  State<N> y = y0;
  State<N> k1 = rhs(t, y);

  double h = opt.initial_step;
  if (h <= 0.0) {
    // Hairer's starting step heuristic
    State<N> zero{};
    const double d0 = norm(y, y, zero) * std::sqrt(static_cast<double>(N));
    const double d1n = norm(k1, y, zero) * std::sqrt(static_cast<double>(N));
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, std::fabs(t1 - t0));
    State<N> y1{};
    for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + dir * h0 * k1[i];
    const State<N> f1 = rhs(t + dir * h0, y1);
    State<N> df{};
    for (std::size_t i = 0; i < N; ++i) df[i] = f1[i] - k1[i];
    const double d2 = norm(df, y, zero) * std::sqrt(static_cast<double>(N)) / h0;
    const double h1 = (std::max(d1n, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                    : std::pow(0.01 / std::max(d1n, d2), 1.0 / 5.0);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min({h, opt.max_step, std::fabs(t1 - t0)});

  std::size_t next_landing = 0;
  while (next_landing < landing.size() && dir * (landing[next_landing] - t0) <= 0.0) ++next_landing;

  State<N> k2{}, k3{}, k4{}, k5{}, k6{}, k7{}, yt{}, ynew{}, err{};
  bool last_rejected = false;
  while (dir * (t1 - t) > 0.0) {
    if (res.accepted + res.rejected >= opt.max_steps) {
      throw Error(ErrorCode::NoConvergence, "ode", "step budget exhausted at t=" + std::to_string(t));
    }
    double target = t1;
    if (next_landing < landing.size() && dir * (landing[next_landing] - t1) < 0.0) target = landing[next_landing];
    bool hits_target = false;
    if (h >= std::fabs(target - t) * (1.0 - 1e-12)) {
      h = std::fabs(target - t);
      hits_target = true;
    }
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(t))) {
      throw Error(ErrorCode::StepSizeUnderflow, "ode", "step size underflow at t=" + std::to_string(t));
    }
    const double hs = dir * h;

    for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * a21 * k1[i];
    k2 = rhs(t + c2 * hs, yt);
    for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
    k3 = rhs(t + c3 * hs, yt);
    for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = rhs(t + c4 * hs, yt);
    for (std::size_t i = 0; i < N; ++i)
      yt[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = rhs(t + c5 * hs, yt);
    for (std::size_t i = 0; i < N; ++i)
      yt[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const double t_new = hits_target ? target : t + hs;
    k6 = rhs(t + hs, yt);
    for (std::size_t i = 0; i < N; ++i)
      ynew[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    k7 = rhs(t_new, ynew);
    for (std::size_t i = 0; i < N; ++i)
      err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);

    const double en = norm(err, y, ynew);
    if (!(en <= 1.0)) {
      ++res.rejected;
      const double fac = std::isfinite(en) ? std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.2;
      h *= last_rejected ? std::min(fac, 0.5) : fac;
      last_rejected = true;
      continue;
    }
    last_rejected = false;
    ++res.accepted;

    if (dense) {
      DenseStep<N> step;
      step.t0 = t;
      step.h = t_new - t;
      for (std::size_t i = 0; i < N; ++i) {
        const double ydiff = ynew[i] - y[i];
        const double bspl = step.h * k1[i] - ydiff;
        step.coeff[0][i] = y[i];
        step.coeff[1][i] = ydiff;
        step.coeff[2][i] = bspl;
        step.coeff[3][i] = ydiff - step.h * k7[i] - bspl;
        step.coeff[4][i] =
            step.h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      dense->push(step);
    }

    t = t_new;
    y = ynew;
    k1 = k7;
    std::ptrdiff_t landed = -1;
    if (hits_target && next_landing < landing.size() && target == landing[next_landing]) {
      landed = static_cast<std::ptrdiff_t>(next_landing);
      ++next_landing;
    }
    res.t = t;
    res.y = y;
    if (!observer(t, y, landed)) {
      res.stopped = true;
      return res;
    }
    const double fac = en > 0.0 ? std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2))) : 5.0;
    h = std::min(h * fac, opt.max_step);
  }
  return res;
}

template <std::size_t N, class Rhs>
OdeResult<N> integrate(Rhs&& rhs, double t0, const State<N>& y0, double t1, const DopriOptions& opt,
                       DenseOutput<N>* dense = nullptr) {
  return integrate<N>(std::forward<Rhs>(rhs), t0, y0, t1, opt, std::span<const double>{},
                      [](double, const State<N>&, std::ptrdiff_t) { return true; }, dense);
}

}  // namespace spikechain::ode

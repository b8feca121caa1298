#pragma once

// Radial ground state of  w'' + w'/r - w + w^p = 0  on the plane: the unique
// positive, decaying solution. Found by shooting on w(0) with the
// blow-up / zero-crossing dichotomy; beyond the matching radius the profile is
// continued by the decaying solution A*K0(r) of the linearised equation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "spikechain/dormand_prince.hpp"
#include "spikechain/error.hpp"
#include "spikechain/table_io.hpp"

namespace spikechain {

struct GroundStateOptions {
  double dr = 0.005;          // node spacing of the dense section
  double dense_limit = 80.0;  // dense section covers [0, min(R_max, dense_limit)]
  double coarse_dr = 0.1;     // spacing of the exported tail section
  double r_start = 1e-6;      // series start of the integration
};

class GroundStateProfile {
 public:
  double p() const { return p_; }
  double R_max() const { return R_max_; }
  double tol() const { return tol_; }
  double dr() const { return dr_; }
  double w0() const { return values_.front(); }

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& derivs() const { return derivs_; }
  std::size_t dense_count() const { return dense_count_; }

  /// Radius from which the profile is A*K0(r).
  double r_match() const { return r_match_; }
  double tail_amplitude() const { return tail_amplitude_; }
  /// Least-squares c in w(r) ~ c r^{-1/2} e^{-r} over the last quarter of the grid.
  double tail_constant() const { return tail_constant_; }
  double tail_fit_residual() const { return tail_fit_residual_; }
  /// c of the same model pinned to w(R_max); used for r > R_max.
  double tail_anchor() const { return tail_anchor_; }
  double ode_residual_max() const { return ode_residual_max_; }
  int bisection_steps() const { return bisection_steps_; }

  double w(double r) const {
    double v, d;
    eval(r, v, d);
    return v;
  }
  double w_prime(double r) const {
    double v, d;
    eval(r, v, d);
    return d;
  }

  /// Value and radial derivative at |r|.
  void eval(double r, double& value, double& deriv) const {
    const bool neg = r < 0.0;
    r = std::fabs(r);
    if (r <= dense_end_) {
      hermite(r, value, deriv);
    } else if (r <= R_max_) {
      value = tail_amplitude_ * std::cyl_bessel_k(0.0, r);
      deriv = -tail_amplitude_ * std::cyl_bessel_k(1.0, r);
    } else {
      value = tail_anchor_ * std::exp(-r - 0.5 * std::log(r));
      deriv = -value * (1.0 + 0.5 / r);
    }
    if (neg) deriv = -deriv;
  }

 private:
  friend GroundStateProfile solve_ground_state(double, double, double, const GroundStateOptions&);
  friend GroundStateProfile read_profile(const std::string&);

  void hermite(double r, double& value, double& deriv) const {
    std::size_t j = static_cast<std::size_t>(r / dr_);
    if (j + 1 >= dense_count_) j = dense_count_ - 2;
    const double h = dr_;
    const double t = (r - grid_[j]) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    const double h01 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    const double h02 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    const double h10 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    const double h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    const double h12 = 0.5 * (t3 - 2.0 * t4 + t5);
    const double d00 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    const double d01 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    const double d02 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    const double d11 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    const double d12 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    const double f0 = values_[j], f1 = values_[j + 1];
    const double g0 = derivs_[j], g1 = derivs_[j + 1];
    const double s0 = second_[j], s1 = second_[j + 1];
    value = h00 * f0 + h * h01 * g0 + h * h * h02 * s0 + h10 * f1 + h * h11 * g1 + h * h * h12 * s1;
    deriv = (d00 * (f0 - f1)) / h + d01 * g0 + h * d02 * s0 + d11 * g1 + h * d12 * s1;
  }

  /// Second derivatives, ODE residual and tail constants from the node data.
  void finalize() {
    const std::size_t n = grid_.size();
    second_.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double r = grid_[j];
      const double w = values_[j];
      if (j == 0) {
        second_[j] = 0.5 * (w - std::pow(w, p_));
      } else if (r <= r_match_) {
        second_[j] = w - std::pow(w, p_) - derivs_[j] / r;
      } else {
        second_[j] = w - derivs_[j] / r;
      }
    }
    dense_end_ = grid_[dense_count_ - 1];

    // Residual w'' + w'/r - w + w^p with w'' from a sixth-order difference of
    // the stored w'. w' is odd, which supplies the stencil near r = 0.
    auto wp_at = [&](std::ptrdiff_t i) { return i < 0 ? -derivs_[static_cast<std::size_t>(-i)] : derivs_[i]; };
    static constexpr double c[3] = {3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
    double worst = 0.0;
    for (std::size_t j = 0; j + 3 < dense_count_; ++j) {
      const auto i = static_cast<std::ptrdiff_t>(j);
      double d2 = 0.0;
      for (int m = 1; m <= 3; ++m) d2 += c[m - 1] * (wp_at(i + m) - wp_at(i - m));
      d2 /= dr_;
      const double w = values_[j];
      const double res = j == 0 ? 2.0 * d2 - w + std::pow(w, p_)
                                : d2 + derivs_[j] / grid_[j] - w + std::pow(w, p_);
      worst = std::max(worst, std::fabs(res));
    }
    for (std::size_t j = dense_count_; j < n; ++j) worst = std::max(worst, std::pow(values_[j], p_));
    ode_residual_max_ = worst;

    // tail fit on the last quarter of the grid
    double sum = 0.0;
    std::size_t cnt = 0;
    std::vector<double> q;
    for (std::size_t j = 0; j < n; ++j) {
      const double r = grid_[j];
      if (r < 0.75 * R_max_ || values_[j] <= 0.0) continue;
      q.push_back(std::log(values_[j]) + r + 0.5 * std::log(r));
      sum += q.back();
      ++cnt;
    }
    const double mean = sum / static_cast<double>(cnt);
    tail_fit_residual_ = 0.0;
    for (double v : q) tail_fit_residual_ = std::max(tail_fit_residual_, std::fabs(v - mean));
    tail_constant_ = std::exp(mean);
    tail_anchor_ = std::exp(std::log(values_.back()) + R_max_ + 0.5 * std::log(R_max_));
  }

  double p_ = 3.0, R_max_ = 0.0, tol_ = 0.0, dr_ = 0.0;
  std::vector<double> grid_, values_, derivs_, second_;
  std::size_t dense_count_ = 0;
  double dense_end_ = 0.0;
  double r_match_ = 0.0, tail_amplitude_ = 0.0;
  double tail_constant_ = 0.0, tail_fit_residual_ = 0.0, tail_anchor_ = 0.0;
  double ode_residual_max_ = 0.0;
  int bisection_steps_ = 0;
};

namespace detail {

enum class Shot { BlowUp, Crossing };

struct ShotRecord {
  Shot kind = Shot::BlowUp;
  double robin = 0.0;           // w' + (K1/K0) w at the matching node
  std::size_t match_index = 0;  // node where |w|^{p-1} first fell below threshold (0: not reached)
  std::vector<double> w, wp;    // node values, index 0 is r = 0
};

inline ShotRecord shoot_radial(double p, double w0, double dr, std::size_t nodes, double threshold,
                               const GroundStateOptions& opt, double rtol, bool record) {
  ShotRecord rec;
  std::vector<double> landing(nodes - 1);
  for (std::size_t j = 1; j < nodes; ++j) landing[j - 1] = static_cast<double>(j) * dr;
  if (record) {
    rec.w.assign(nodes, 0.0);
    rec.wp.assign(nodes, 0.0);
    rec.w[0] = w0;
  }
  const double r0 = opt.r_start;
  const double curv = w0 - std::pow(w0, p);
  ode::State<2> y0{w0 + curv * r0 * r0 / 4.0, curv * r0 / 2.0};
  auto rhs = [p](double r, const ode::State<2>& y) {
    const double nl = std::pow(std::fabs(y[0]), p - 1.0) * y[0];
    return ode::State<2>{y[1], -y[1] / r + y[0] - nl};
  };
  bool decided = false;
  auto observer = [&](double r, const ode::State<2>& y, std::ptrdiff_t landed) {
    if (y[0] <= 0.0) {
      rec.kind = Shot::Crossing;
      decided = true;
      return false;
    }
    if (y[1] > 0.0) {
      rec.kind = Shot::BlowUp;
      decided = true;
      return false;
    }
    if (landed >= 0) {
      const auto j = static_cast<std::size_t>(landed) + 1;
      if (record) {
        rec.w[j] = y[0];
        rec.wp[j] = y[1];
      }
      if (std::pow(y[0], p - 1.0) <= threshold) {
        rec.robin = y[1] + std::cyl_bessel_k(1.0, r) / std::cyl_bessel_k(0.0, r) * y[0];
        rec.kind = rec.robin > 0.0 ? Shot::BlowUp : Shot::Crossing;
        rec.match_index = j;
        decided = true;
        return false;
      }
    }
    return true;
  };
  ode::DopriOptions o;
  o.rtol = rtol;
  o.atol = 1e-24;
  o.max_step = dr;
  const auto res = ode::integrate<2>(rhs, r0, y0, landing.back(), o, landing, observer);
  if (!decided) {
    // threshold never reached: decide by the sign of the growing mode at the end
    const double r = res.t;
    rec.robin = res.y[1] + std::cyl_bessel_k(1.0, r) / std::cyl_bessel_k(0.0, r) * res.y[0];
    rec.kind = rec.robin > 0.0 ? Shot::BlowUp : Shot::Crossing;
  }
  return rec;
}

}  // namespace detail

/// Shooting solve of the radial ground state. `tol` bounds the relative width
/// of the final w(0) bracket and sets the matching threshold.
inline GroundStateProfile solve_ground_state(double p, double tol = 1e-10, double R_max = 600.0,
                                             const GroundStateOptions& opt = {}) {
  if (!(p > 2.0)) throw Error(ErrorCode::ExponentOutOfRange, "ground_state", "p must exceed 2");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "ground_state", "tol must be positive");
  if (!(R_max >= 20.0) || R_max > 700.0)
    throw Error(ErrorCode::InvalidArgument, "ground_state", "R_max must lie in [20, 700]");

  const double dr = opt.dr;
  const double dense_end = std::min(R_max, opt.dense_limit);
  const auto dense_count = static_cast<std::size_t>(std::floor(dense_end / dr + 1e-9)) + 1;
  const double threshold = std::min(1e-8, 1e-2 * tol);
  const double rtol = std::min(1e-13, 1e-3 * tol);

  auto classify = [&](double w0, bool record) {
    return detail::shoot_radial(p, w0, dr, dense_count, threshold, opt, rtol, record);
  };

  double lo = 1.0 + 1e-3;
  if (classify(lo, false).kind != detail::Shot::BlowUp)
    throw Error(ErrorCode::ShootingBracketFailure, "ground_state", "lower bracket does not blow up");
  double hi = 2.0;
  while (classify(hi, false).kind != detail::Shot::Crossing) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e3) throw Error(ErrorCode::ShootingBracketFailure, "ground_state", "no zero crossing below w(0)=1e3");
  }

  int steps = 0;
  for (;; ++steps) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (steps > 200) throw Error(ErrorCode::ToleranceNotReached, "ground_state", "bisection stalled");
    if (classify(mid, false).kind == detail::Shot::BlowUp)
      lo = mid;
    else
      hi = mid;
  }
  if (hi - lo > tol * hi) throw Error(ErrorCode::ToleranceNotReached, "ground_state", "bracket wider than tol");

  // The exact solution lies between the two neighbouring shots; blend them so
  // that the decaying-tail condition holds exactly at the matching node.
  detail::ShotRecord a = classify(lo, true);
  detail::ShotRecord b = classify(hi, true);
  if (a.match_index == 0 && b.match_index == 0)
    throw Error(ErrorCode::ToleranceNotReached, "ground_state", "matching radius not reached");
  double theta = 1.0;
  std::size_t m = a.match_index;
  if (a.match_index != 0 && a.match_index == b.match_index && a.robin != b.robin) {
    theta = b.robin / (b.robin - a.robin);
  } else if (a.match_index == 0) {
    theta = 0.0;
    m = b.match_index;
  }

  GroundStateProfile prof;
  prof.p_ = p;
  prof.R_max_ = R_max;
  prof.tol_ = tol;
  prof.dr_ = dr;
  prof.dense_count_ = dense_count;
  prof.bisection_steps_ = steps;
  prof.grid_.resize(dense_count);
  prof.values_.resize(dense_count);
  prof.derivs_.resize(dense_count);
  for (std::size_t j = 0; j < dense_count; ++j) prof.grid_[j] = static_cast<double>(j) * dr;
  for (std::size_t j = 0; j <= m; ++j) {
    const double wa = a.w.empty() ? 0.0 : a.w[j];
    const double wb = b.w.empty() ? 0.0 : b.w[j];
    prof.values_[j] = theta * wa + (1.0 - theta) * wb;
    prof.derivs_[j] = theta * (a.wp.empty() ? 0.0 : a.wp[j]) + (1.0 - theta) * (b.wp.empty() ? 0.0 : b.wp[j]);
  }
  prof.values_[0] = theta * lo + (1.0 - theta) * hi;
  prof.derivs_[0] = 0.0;
  prof.r_match_ = prof.grid_[m];
  prof.tail_amplitude_ = prof.values_[m] / std::cyl_bessel_k(0.0, prof.r_match_);
  for (std::size_t j = m + 1; j < dense_count; ++j) {
    const double r = prof.grid_[j];
    prof.values_[j] = prof.tail_amplitude_ * std::cyl_bessel_k(0.0, r);
    prof.derivs_[j] = -prof.tail_amplitude_ * std::cyl_bessel_k(1.0, r);
  }
  const double last_dense = prof.grid_.back();
  if (R_max - last_dense > 1e-12) {
    const auto extra = static_cast<std::size_t>(std::ceil((R_max - last_dense) / opt.coarse_dr - 1e-9));
    for (std::size_t i = 1; i <= extra; ++i) {
      const double r = i == extra ? R_max : last_dense + static_cast<double>(i) * opt.coarse_dr;
      prof.grid_.push_back(r);
      prof.values_.push_back(prof.tail_amplitude_ * std::cyl_bessel_k(0.0, r));
      prof.derivs_.push_back(-prof.tail_amplitude_ * std::cyl_bessel_k(1.0, r));
    }
  }
  prof.finalize();
  return prof;
}

inline double eval_w(const GroundStateProfile& prof, double r) { return prof.w(r); }
inline double eval_w_prime(const GroundStateProfile& prof, double r) { return prof.w_prime(r); }

inline void write_profile(const std::string& path, const GroundStateProfile& prof) {
  io::Table t;
  t.set("kind", "ground_state_profile");
  t.set("p", prof.p());
  t.set("R_max", prof.R_max());
  t.set("tol", prof.tol());
  t.set("dr", prof.dr());
  t.set("dense_count", std::to_string(prof.dense_count()));
  t.set("r_match", prof.r_match());
  t.set("tail_amplitude", prof.tail_amplitude());
  t.set("tail_constant", prof.tail_constant());
  t.set("tail_anchor", prof.tail_anchor());
  t.set("ode_residual_max", prof.ode_residual_max());
  t.columns = {"r", "w", "dw"};
  for (std::size_t j = 0; j < prof.grid().size(); ++j)
    t.rows.push_back({io::fmt_double(prof.grid()[j]), io::fmt_double(prof.values()[j]),
                      io::fmt_double(prof.derivs()[j])});
  io::write_table(path, t);
}

inline GroundStateProfile read_profile(const std::string& path) {
  const io::Table t = io::read_table(path);
  if (!t.has("kind") || t.get("kind") != "ground_state_profile")
    throw Error(ErrorCode::ArtifactMissing, "ground_state", path + " is not a profile table");
  GroundStateProfile prof;
  prof.p_ = t.get_double("p");
  prof.R_max_ = t.get_double("R_max");
  prof.tol_ = t.get_double("tol");
  prof.dr_ = t.get_double("dr");
  prof.dense_count_ = static_cast<std::size_t>(std::stoull(t.get("dense_count")));
  prof.r_match_ = t.get_double("r_match");
  prof.tail_amplitude_ = t.get_double("tail_amplitude");
  prof.grid_ = t.column_values("r");
  prof.values_ = t.column_values("w");
  prof.derivs_ = t.column_values("dw");
  if (prof.grid_.size() < prof.dense_count_ || prof.dense_count_ < 2)
    throw Error(ErrorCode::ArtifactMissing, "ground_state", path + " is truncated");
  prof.finalize();
  return prof;
}

}  // namespace spikechain

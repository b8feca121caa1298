#pragma once

// Curvature H(gamma(s)) along a boundary segment [s_begin, s_begin + b], with
// first and second derivatives, and the convexity / endpoint check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "spikechain/error.hpp"
#include "spikechain/table_io.hpp"

namespace spikechain {

enum class CurvatureKind { Polynomial, Spline };

class CurvatureModel {
 public:
  /// h0 + a (s - s*)^2 + beta (s - s*)^3 on [0, b] with s* chosen so that H(0) = H(b).
  static CurvatureModel family(double b, double h0, double a, double beta = 0.0) {
    if (!(b > 0.0)) throw Error(ErrorCode::InvalidArgument, "geometry", "b must be positive");
    double u = 0.5 * b;
    if (beta != 0.0) {
      // 3 beta u^2 - (3 beta b + 2a) u + (beta b^2 + a b) = 0, root nearest b/2
      const double A = 3.0 * beta, B = -(3.0 * beta * b + 2.0 * a), C = beta * b * b + a * b;
      const double disc = B * B - 4.0 * A * C;
      if (disc < 0.0) throw Error(ErrorCode::InvalidArgument, "geometry", "no endpoint-matching centre");
      const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
      const double r1 = q / A, r2 = C / q;
      u = std::fabs(r1 - 0.5 * b) < std::fabs(r2 - 0.5 * b) ? r1 : r2;
      if (!(u > 0.0 && u < b)) throw Error(ErrorCode::InvalidArgument, "geometry", "endpoint-matching centre outside segment");
    }
    return polynomial(b, {h0, 0.0, a, beta}, u);
  }

  /// sum_k c_k (s - center)^k on [0, b].
  static CurvatureModel polynomial(double b, std::vector<double> coeffs, double center = 0.0) {
    if (!(b > 0.0)) throw Error(ErrorCode::InvalidArgument, "geometry", "b must be positive");
    if (coeffs.empty()) throw Error(ErrorCode::InvalidArgument, "geometry", "empty coefficient list");
    CurvatureModel m;
    m.kind_ = CurvatureKind::Polynomial;
    m.b_ = b;
    m.center_ = center;
    m.coeffs_ = std::move(coeffs);
    m.margin_ = 0.5 * b;
    return m;
  }

  /// Not-a-knot cubic spline through (s_j, H_j); the segment is [s_0, s_n].
  static CurvatureModel spline(std::vector<double> s, std::vector<double> H) {
    const std::size_t n = s.size();
    if (n < 4 || H.size() != n) throw Error(ErrorCode::InvalidArgument, "geometry", "spline needs >= 4 matching samples");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (!(s[i + 1] > s[i])) throw Error(ErrorCode::InvalidArgument, "geometry", "spline abscissae must increase");
    CurvatureModel m;
    m.kind_ = CurvatureKind::Spline;
    m.b_ = s.back() - s.front();
    m.begin_ = s.front();
    m.margin_ = 0.5 * m.b_;
    // second derivatives M_j
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    auto hh = [&](std::size_t i) { return s[i + 1] - s[i]; };
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      A(r, r - 1) = hh(i - 1);
      A(r, r) = 2.0 * (hh(i - 1) + hh(i));
      A(r, r + 1) = hh(i);
      rhs(r) = 6.0 * ((H[i + 1] - H[i]) / hh(i) - (H[i] - H[i - 1]) / hh(i - 1));
    }
    const auto N = static_cast<Eigen::Index>(n);
    A(0, 0) = hh(1);
    A(0, 1) = -(hh(0) + hh(1));
    A(0, 2) = hh(0);
    A(N - 1, N - 3) = hh(n - 2);
    A(N - 1, N - 2) = -(hh(n - 3) + hh(n - 2));
    A(N - 1, N - 1) = hh(n - 3);
    const Eigen::VectorXd M = A.fullPivLu().solve(rhs);
    m.knots_ = std::move(s);
    m.samples_ = std::move(H);
    m.second_.assign(M.data(), M.data() + N);
    return m;
  }

  CurvatureKind kind() const { return kind_; }
  double b() const { return b_; }
  double s_begin() const { return begin_; }
  double s_end() const { return begin_ + b_; }
  double margin() const { return margin_; }
  void set_margin(double margin) { margin_ = margin; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  double center() const { return center_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& samples() const { return samples_; }

  /// Same curvature profile moved by delta along the arclength.
  CurvatureModel shifted(double delta) const {
    CurvatureModel m = *this;
    m.begin_ += delta;
    m.center_ += delta;
    for (auto& k : m.knots_) k += delta;
    return m;
  }

  bool in_segment(double s) const { return s >= s_begin() && s <= s_end(); }
  bool in_domain(double s) const { return s >= s_begin() - margin_ && s <= s_end() + margin_; }

  template <class T = double>
  T H(T s) const {
    T v[3];
    eval(s, v);
    return v[0];
  }
  template <class T = double>
  T Hp(T s) const {
    T v[3];
    eval(s, v);
    return v[1];
  }
  template <class T = double>
  T Hpp(T s) const {
    T v[3];
    eval(s, v);
    return v[2];
  }

  /// H, H', H'' at s; OutOfDomain beyond the extrapolation margin.
  template <class T>
  void eval(T s, T out[3]) const {
    const double sd = static_cast<double>(s);
    if (!(sd >= s_begin() - margin_ && sd <= s_end() + margin_))
      throw Error(ErrorCode::OutOfDomain, "geometry",
                  "s=" + io::fmt_double(sd) + " beyond the extrapolation margin of [" + io::fmt_double(s_begin()) +
                      ", " + io::fmt_double(s_end()) + "]");
    if (kind_ == CurvatureKind::Polynomial) {
      const T x = s - static_cast<T>(center_);
      T f = 0, d = 0, dd = 0;
      for (std::size_t k = coeffs_.size(); k-- > 0;) {
        dd = dd * x + 2 * d;
        d = d * x + f;
        f = f * x + static_cast<T>(coeffs_[k]);
      }
      out[0] = f;
      out[1] = d;
      out[2] = dd;
      return;
    }
    const std::size_t n = knots_.size();
    if (sd < knots_.front() || sd > knots_.back()) {
      // clamped quadratic continuation from the nearer end
      const bool left = sd < knots_.front();
      const std::size_t e = left ? 0 : n - 1;
      T edge[3];
      spline_piece(left ? 0 : n - 2, static_cast<T>(knots_[e]), edge);
      const T dx = s - static_cast<T>(knots_[e]);
      out[0] = edge[0] + edge[1] * dx + edge[2] * dx * dx / 2;
      out[1] = edge[1] + edge[2] * dx;
      out[2] = edge[2];
      return;
    }
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), sd);
    std::size_t j = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    if (j + 1 >= n) j = n - 2;
    spline_piece(j, s, out);
  }

 private:
  template <class T>
  void spline_piece(std::size_t j, T s, T out[3]) const {
    const T h = static_cast<T>(knots_[j + 1]) - static_cast<T>(knots_[j]);
    const T A = (static_cast<T>(knots_[j + 1]) - s) / h;
    const T B = (s - static_cast<T>(knots_[j])) / h;
    const T M0 = second_[j], M1 = second_[j + 1];
    const T y0 = samples_[j], y1 = samples_[j + 1];
    out[0] = A * y0 + B * y1 + ((A * A * A - A) * M0 + (B * B * B - B) * M1) * h * h / 6;
    out[1] = (y1 - y0) / h - (3 * A * A - 1) / 6 * h * M0 + (3 * B * B - 1) / 6 * h * M1;
    out[2] = A * M0 + B * M1;
  }

  CurvatureKind kind_ = CurvatureKind::Polynomial;
  double b_ = 1.0, begin_ = 0.0, margin_ = 0.5;
  std::vector<double> coeffs_;
  double center_ = 0.0;
  std::vector<double> knots_, samples_, second_;
};

struct H1Report {
  double min_Hpp = 0.0;
  double argmin = 0.0;
  double mismatch = 0.0;
  double tol = 0.0;
  double tol_c0 = 0.0;
  std::size_t samples = 0;
  bool pass = false;
  std::string reason;
};

inline double default_mismatch_tol(const CurvatureModel& m) {
  return m.kind() == CurvatureKind::Spline ? 1e-6 : 1e-10;
}

/// Scan H'' on the segment and compare the endpoint curvatures.
inline H1Report validate_H1(const CurvatureModel& m, double tol = -1.0, double tol_c0 = 1e-8,
                            std::size_t samples = 20001) {
  H1Report rep;
  rep.tol = tol > 0.0 ? tol : default_mismatch_tol(m);
  rep.tol_c0 = tol_c0;
  rep.samples = samples;
  rep.min_Hpp = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples; ++i) {
    const double s = i + 1 == samples ? m.s_end() : m.s_begin() + m.b() * static_cast<double>(i) / (samples - 1.0);
    const double v = m.Hpp(s);
    if (v < rep.min_Hpp) {
      rep.min_Hpp = v;
      rep.argmin = s;
    }
  }
  rep.mismatch = std::fabs(m.H(m.s_begin()) - m.H(m.s_end()));
  if (!(tol_c0 > 0.0)) {
    rep.reason = "convexity threshold must be positive";
  } else if (!(rep.min_Hpp >= tol_c0)) {
    rep.reason = "H'' = " + io::fmt_double(rep.min_Hpp) + " at s = " + io::fmt_double(rep.argmin) +
                 " is below " + io::fmt_double(tol_c0);
  } else if (!(rep.mismatch <= rep.tol)) {
    rep.reason = "endpoint curvature mismatch " + io::fmt_double(rep.mismatch) + " exceeds " + io::fmt_double(rep.tol);
  } else {
    rep.pass = true;
    rep.reason = "ok";
  }
  return rep;
}

}  // namespace spikechain

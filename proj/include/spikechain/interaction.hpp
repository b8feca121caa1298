#pragma once

// Interaction function Psi(s) of two ground states at distance s, the
// constant nu2, the normalised Psi1 = Psi / nu2 and its inverse G.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "spikechain/error.hpp"
#include "spikechain/gauss_legendre.hpp"
#include "spikechain/ground_state.hpp"
#include "spikechain/table_io.hpp"

namespace spikechain {

struct QuadratureSpec {
  std::size_t order = 12;    // Gauss-Legendre points per panel and direction
  double panel_width = 1.0;  // base panel width; refinement halves it
  double rel_tol = 1e-8;     // agreement required between successive refinements
  int max_refine = 3;
};

namespace detail {

/// Tensor Gauss-Legendre sum of f over [x0,x1] x [y0,y1]. Also returns the sum
/// of |f| as a magnitude scale.
template <class F>
double tensor_sum(F&& f, double x0, double x1, double y0, double y1, std::size_t nx, std::size_t ny,
                  const quadrature::GaussLegendreRule& rule, double& abs_sum) {
  const auto cx = quadrature::composite(rule, x0, x1, nx);
  const auto cy = quadrature::composite(rule, y0, y1, ny);
  double sum = 0.0;
  abs_sum = 0.0;
  for (std::size_t j = 0; j < cy.nodes.size(); ++j) {
    double row = 0.0, arow = 0.0;
    for (std::size_t i = 0; i < cx.nodes.size(); ++i) {
      const double v = cx.weights[i] * f(cx.nodes[i], cy.nodes[j]);
      row += v;
      arow += std::fabs(v);
    }
    sum += cy.weights[j] * row;
    abs_sum += cy.weights[j] * arow;
  }
  return sum;
}

/// Refinement-checked tensor quadrature; `what` names the quantity in errors.
template <class F>
double refined_integral(F&& f, double x0, double x1, double y0, double y1, const QuadratureSpec& spec,
                        const char* module, const std::string& what) {
  const auto rule = quadrature::gauss_legendre(spec.order);
  auto panels = [&](double len) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / spec.panel_width - 1e-9)));
  };
  std::size_t nx = panels(x1 - x0), ny = panels(y1 - y0);
  double mag = 0.0;
  double prev = tensor_sum(f, x0, x1, y0, y1, nx, ny, rule, mag);
  for (int level = 1; level <= spec.max_refine; ++level) {
    nx *= 2;
    ny *= 2;
    const double cur = tensor_sum(f, x0, x1, y0, y1, nx, ny, rule, mag);
    // the magnitude floor only matters when the signed integral nearly cancels
    const double scale = std::max(std::fabs(cur), 1e-3 * mag);
    if (std::fabs(cur - prev) <= spec.rel_tol * scale) return cur;
    prev = cur;
  }
  throw Error(ErrorCode::QuadratureNonconvergent, module, what + ": refinements disagree");
}

inline double decay_radius(double p) { return 41.5 / (p + 1.0) + 2.0; }

}  // namespace detail

/// Psi(s) = -int_{y2>0} p w(y-(s,0)) w(y)^{p-1} dw/dy1 dy on a truncated rectangle.
inline double compute_psi(const GroundStateProfile& prof, double s, const QuadratureSpec& spec = {}) {
  if (!std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "interaction", "s must be finite");
  const double p = prof.p();
  const double M = detail::decay_radius(p);
  double lo = std::min(0.0, s) - M;
  double hi = std::max(0.0, s) + M;
  // beyond this distance the factor w(y)^p is negligible next to the peak
  const double far = 41.4 / (p - 1.0) + 2.0;
  if (s > far) hi = std::min(hi, far);
  if (s < -far) lo = std::max(lo, -far);
  auto f = [&](double y1, double y2) {
    const double r = std::hypot(y1, y2);
    if (r == 0.0) return 0.0;
    double w, wp;
    prof.eval(r, w, wp);
    const double wd = prof.w(std::hypot(y1 - s, y2));
    return -p * wd * std::pow(w, p - 1.0) * wp * (y1 / r);
  };
  return detail::refined_integral(f, lo, hi, 0.0, M, spec, "interaction", "Psi(" + io::fmt_double(s) + ")");
}

/// nu2 = (1/3) int_R (w'(|y|)/|y|)^2 y^4 dy = (2/3) int_0^inf w'(r)^2 r^2 dr.
inline double compute_nu2(const GroundStateProfile& prof, const QuadratureSpec& spec = {}, double L = 40.0) {
  const auto rule = quadrature::gauss_legendre(2 * spec.order);
  auto f = [&](double r) {
    const double d = prof.w_prime(r);
    return d * d * r * r;
  };
  std::size_t n = static_cast<std::size_t>(std::ceil(L / spec.panel_width));
  double prev = quadrature::integrate_1d(f, rule, 0.0, L, n);
  for (int level = 1; level <= spec.max_refine; ++level) {
    n *= 2;
    const double cur = quadrature::integrate_1d(f, rule, 0.0, L, n);
    if (std::fabs(cur - prev) <= spec.rel_tol * std::fabs(cur)) return 2.0 / 3.0 * cur;
    prev = cur;
  }
  throw Error(ErrorCode::QuadratureNonconvergent, "interaction", "nu2: refinements disagree");
}

/// Tabulated Psi with log-space cubic Hermite interpolation. Psi1 is Psi/nu2
/// evaluated on the fly.
class InteractionKernel {
 public:
  double p() const { return p_; }
  double R_max() const { return R_max_; }
  double profile_tol() const { return profile_tol_; }
  double profile_dr() const { return profile_dr_; }
  double s_min() const { return s_.front(); }
  double s_max() const { return s_.back(); }
  double ds() const { return ds_; }
  double nu2() const { return nu2_; }
  double asym_constant() const { return asym_constant_; }
  double asym_spread() const { return asym_spread_; }
  double probe_error() const { return probe_error_; }
  const QuadratureSpec& quadrature_spec() const { return spec_; }
  const std::vector<double>& s_grid() const { return s_; }
  const std::vector<double>& psi_values() const { return psi_; }

  bool in_range(double s) const { return s >= s_.front() && s <= s_.back(); }

  template <class T = double>
  T log_psi(T s) const {
    T v, d;
    interp(s, v, d);
    return v;
  }
  template <class T = double>
  T log_psi1(T s) const {
    return log_psi<T>(s) - static_cast<T>(log_nu2_);
  }
  template <class T = double>
  T psi(T s) const {
    using std::exp;
    return exp(log_psi<T>(s));
  }
  template <class T = double>
  T psi1(T s) const {
    using std::exp;
    return exp(log_psi1<T>(s));
  }
  /// d Psi1 / ds
  template <class T = double>
  T psi1_prime(T s) const {
    using std::exp;
    T v, d;
    interp(s, v, d);
    return exp(v - static_cast<T>(log_nu2_)) * d;
  }

  /// Log value and log slope of the interpolant; throws outside the table.
  template <class T>
  void interp(T s, T& value, T& slope) const {
    if (!(s >= static_cast<T>(s_.front()) && s <= static_cast<T>(s_.back())))
      throw Error(ErrorCode::OutOfTabulatedRange, "interaction",
                  "s=" + io::fmt_double(static_cast<double>(s)) + " outside kernel table [" +
                      io::fmt_double(s_.front()) + ", " + io::fmt_double(s_.back()) + "]");
    const std::size_t n = s_.size();
    auto j = static_cast<std::size_t>((static_cast<double>(s) - s_.front()) / ds_);
    if (j + 1 >= n) j = n - 2;
    if (j > 0 && s < static_cast<T>(s_[j])) --j;
    if (j + 2 < n && s > static_cast<T>(s_[j + 1])) ++j;
    const T h = static_cast<T>(s_[j + 1]) - static_cast<T>(s_[j]);
    const T t = (s - static_cast<T>(s_[j])) / h;
    const T t2 = t * t, t3 = t2 * t;
    const T f0 = lpsi_[j], f1 = lpsi_[j + 1], m0 = slope_[j], m1 = slope_[j + 1];
    value = (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * m0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * h * m1;
    slope = ((6 * t2 - 6 * t) * (f0 - f1)) / h + (3 * t2 - 4 * t + 1) * m0 + (3 * t2 - 2 * t) * m1;
  }

 private:
  friend InteractionKernel make_kernel(const GroundStateProfile&, std::vector<double>, std::vector<double>, double,
                                       const QuadratureSpec&);
  friend InteractionKernel read_kernel(const std::string&);
  friend InteractionKernel build_kernel(const GroundStateProfile&, double, double, double, const QuadratureSpec&,
                                        unsigned);

  void finalize() {
    const std::size_t n = s_.size();
    if (n < 5) throw Error(ErrorCode::InvalidArgument, "interaction", "kernel table needs at least 5 nodes");
    ds_ = (s_.back() - s_.front()) / static_cast<double>(n - 1);
    log_nu2_ = std::log(nu2_);
    lpsi_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(psi_[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "interaction", "Psi must be positive on the table");
      lpsi_[i] = std::log(psi_[i]);
    }
    // fourth-order difference slopes, one-sided at the ends
    slope_.resize(n);
    const double h = ds_;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = lpsi_;
      if (i >= 2 && i + 2 < n) {
        slope_[i] = (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / (12 * h);
      } else if (i == 0) {
        slope_[i] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h);
      } else if (i == 1) {
        slope_[i] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h);
      } else if (i == n - 1) {
        slope_[i] = (25 * f[n - 1] - 48 * f[n - 2] + 36 * f[n - 3] - 16 * f[n - 4] + 3 * f[n - 5]) / (12 * h);
      } else {
        slope_[i] = (3 * f[n - 1] + 10 * f[n - 2] - 18 * f[n - 3] + 6 * f[n - 4] - f[n - 5]) / (12 * h);
      }
    }
    // Psi1 ~ C s^{-1/2} e^{-s}: average over the last third of the table
    const std::size_t first = n - n / 3;
    double sum = 0.0;
    std::vector<double> q;
    for (std::size_t i = first; i < n; ++i) {
      q.push_back(lpsi_[i] - log_nu2_ + s_[i] + 0.5 * std::log(s_[i]));
      sum += q.back();
    }
    const double mean = sum / static_cast<double>(q.size());
    asym_spread_ = 0.0;
    for (double v : q) asym_spread_ = std::max(asym_spread_, std::fabs(v - mean));
    asym_constant_ = std::exp(mean);
  }

  double p_ = 3.0, R_max_ = 0.0, profile_tol_ = 0.0, profile_dr_ = 0.0;
  std::vector<double> s_, psi_, lpsi_, slope_;
  double ds_ = 0.0, nu2_ = 0.0, log_nu2_ = 0.0;
  double asym_constant_ = 0.0, asym_spread_ = 0.0, probe_error_ = 0.0;
  QuadratureSpec spec_;
};

inline InteractionKernel make_kernel(const GroundStateProfile& prof, std::vector<double> s, std::vector<double> psi,
                                     double nu2, const QuadratureSpec& spec) {
  InteractionKernel k;
  k.p_ = prof.p();
  k.R_max_ = prof.R_max();
  k.profile_tol_ = prof.tol();
  k.profile_dr_ = prof.dr();
  k.s_ = std::move(s);
  k.psi_ = std::move(psi);
  k.nu2_ = nu2;
  k.spec_ = spec;
  k.finalize();
  return k;
}

/// Tabulate Psi on s_min:ds:s_max. Grid points are distributed over `threads`
/// workers (0: hardware concurrency); the result does not depend on the count.
inline InteractionKernel build_kernel(const GroundStateProfile& prof, double s_min = 2.0, double s_max = 40.0,
                                      double ds = 0.1, const QuadratureSpec& spec = {}, unsigned threads = 0) {
  if (!(s_min >= 2.0 && s_max > s_min && ds > 0.0))
    throw Error(ErrorCode::InvalidArgument, "interaction", "kernel range needs 2 <= s_min < s_max and ds > 0");
  const auto n = static_cast<std::size_t>(std::llround((s_max - s_min) / ds)) + 1;
  if (n < 5) throw Error(ErrorCode::InvalidArgument, "interaction", "kernel table needs at least 5 nodes");
  std::vector<double> s(n), psi(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = i + 1 == n ? s_max : s_min + static_cast<double>(i) * ds;

  // probes at interval midpoints, computed alongside the table
  std::vector<std::size_t> probe_at;
  for (std::size_t i = 0; i + 1 < n; i += std::max<std::size_t>(1, n / 12)) probe_at.push_back(i);
  std::vector<double> probe(probe_at.size());

  const std::size_t jobs = n + probe_at.size();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs));
  std::vector<std::exception_ptr> failures(threads);
  auto work = [&](unsigned id) {
    try {
      for (std::size_t job = id; job < jobs; job += threads) {
        if (job < n) {
          psi[job] = compute_psi(prof, s[job], spec);
        } else {
          const std::size_t i = probe_at[job - n];
          probe[job - n] = compute_psi(prof, 0.5 * (s[i] + s[i + 1]), spec);
        }
      }
    } catch (...) {
      failures[id] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned id = 0; id < threads; ++id) pool.emplace_back(work, id);
    for (auto& t : pool) t.join();
  }
  for (auto& e : failures)
    if (e) std::rethrow_exception(e);

  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(psi[i + 1] < psi[i]))
      throw Error(ErrorCode::QuadratureNonconvergent, "interaction", "Psi not decreasing at s=" + io::fmt_double(s[i]));

  InteractionKernel k = make_kernel(prof, std::move(s), std::move(psi), compute_nu2(prof, spec), spec);
  double worst = 0.0;
  for (std::size_t m = 0; m < probe_at.size(); ++m) {
    const std::size_t i = probe_at[m];
    const double mid = 0.5 * (k.s_[i] + k.s_[i + 1]);
    worst = std::max(worst, std::fabs(k.psi(mid) / probe[m] - 1.0));
  }
  k.probe_error_ = worst;
  if (worst > 1e-6)
    throw Error(ErrorCode::QuadratureNonconvergent, "interaction",
                "interpolation misses off-grid probes by " + io::fmt_double(worst));
  return k;
}

/// G(b): the s with Psi1(s) = b.
template <class T = double>
T invert_psi1(const InteractionKernel& k, T b) {
  using std::fabs;
  using std::log;
  if (!(b > T(0))) throw Error(ErrorCode::NonpositiveArgument, "interaction", "G needs a positive argument");
  const T lb = log(b);
  const auto& s = k.s_grid();
  const T top = k.log_psi1<T>(static_cast<T>(s.front()));
  const T bottom = k.log_psi1<T>(static_cast<T>(s.back()));
  if (!(lb < top && lb > bottom))
    throw Error(ErrorCode::OutOfTabulatedRange, "interaction",
                "G(" + io::fmt_double(static_cast<double>(b)) + ") outside kernel table");
  std::size_t lo = 0, hi = s.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (k.log_psi1<T>(static_cast<T>(s[mid])) >= lb)
      lo = mid;
    else
      hi = mid;
  }
  T a = s[lo], c = s[hi];
  T x = a + (c - a) / 2;
  for (int it = 0; it < 100; ++it) {
    T v, d;
    k.interp(x, v, d);
    v -= static_cast<T>(std::log(k.nu2()));
    const T g = v - lb;
    if (g > 0)
      a = x;
    else if (g < 0)
      c = x;
    else
      return x;
    T next = x - g / d;
    if (!(next > a && next < c)) next = a + (c - a) / 2;
    const T step = fabs(next - x);
    x = next;
    if (step <= 4 * std::numeric_limits<T>::epsilon() * x || c - a <= 2 * std::numeric_limits<T>::epsilon() * x)
      return x;
  }
  return x;
}

inline void write_kernel(const std::string& path, const InteractionKernel& k) {
  io::Table t;
  t.set("kind", "interaction_kernel");
  t.set("p", k.p());
  t.set("R_max", k.R_max());
  t.set("profile_tol", k.profile_tol());
  t.set("profile_dr", k.profile_dr());
  t.set("s_min", k.s_min());
  t.set("s_max", k.s_max());
  t.set("ds", k.ds());
  t.set("quad_order", std::to_string(k.quadrature_spec().order));
  t.set("quad_panel_width", k.quadrature_spec().panel_width);
  t.set("quad_rel_tol", k.quadrature_spec().rel_tol);
  t.set("nu2", k.nu2());
  t.set("asym_constant", k.asym_constant());
  t.set("probe_error", k.probe_error());
  t.columns = {"s", "psi", "psi1"};
  for (std::size_t i = 0; i < k.s_grid().size(); ++i)
    t.rows.push_back({io::fmt_double(k.s_grid()[i]), io::fmt_double(k.psi_values()[i]),
                      io::fmt_double(k.psi_values()[i] / k.nu2())});
  io::write_table(path, t);
}

inline InteractionKernel read_kernel(const std::string& path) {
  const io::Table t = io::read_table(path);
  if (!t.has("kind") || t.get("kind") != "interaction_kernel")
    throw Error(ErrorCode::ArtifactMissing, "interaction", path + " is not a kernel table");
  InteractionKernel k;
  k.p_ = t.get_double("p");
  k.R_max_ = t.get_double("R_max");
  k.profile_tol_ = t.get_double("profile_tol");
  k.profile_dr_ = t.get_double("profile_dr");
  k.spec_.order = static_cast<std::size_t>(std::stoul(t.get("quad_order")));
  k.spec_.panel_width = t.get_double("quad_panel_width");
  k.spec_.rel_tol = t.get_double("quad_rel_tol");
  k.nu2_ = t.get_double("nu2");
  k.probe_error_ = t.get_double("probe_error");
  k.s_ = t.column_values("s");
  k.psi_ = t.column_values("psi");
  k.finalize();
  return k;
}

}  // namespace spikechain

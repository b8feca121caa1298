#pragma once

#include <cmath>
#include <limits>
#include <utility>

namespace spikechain::roots {

template <class T>
struct RootResult {
  T x{};
  T fx{};
  int iterations = 0;
  bool converged = false;
};

/// Brent's method on a bracket with f(a), f(b) of opposite sign (or one of
/// them zero). Stops when the bracket is below `xtol` or |f| <= ftol.
template <class T, class F>
RootResult<T> brent(F&& f, T a, T b, T fa, T fb, T xtol, T ftol = T(0), int max_iter = 200) {
  RootResult<T> r;
  if (fa == T(0)) return {a, fa, 0, true};
  if (fb == T(0)) return {b, fb, 0, true};
  if ((fa > 0) == (fb > 0)) return {b, fb, 0, false};
  using std::fabs;
  const T eps = std::numeric_limits<T>::epsilon();
  T c = a, fc = fa, d = b - a, e = d;
  for (int it = 1; it <= max_iter; ++it) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (fabs(fc) < fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const T tol1 = T(2) * eps * fabs(b) + T(0.5) * xtol;
    const T xm = T(0.5) * (c - b);
    if (fabs(xm) <= tol1 || fb == T(0) || fabs(fb) <= ftol) return {b, fb, it, true};
    if (fabs(e) >= tol1 && fabs(fa) > fabs(fb)) {
      T p, q;
      const T s = fb / fa;
      if (a == c) {
        p = T(2) * xm * s;
        q = T(1) - s;
      } else {
        const T qq = fa / fc;
        const T rr = fb / fc;
        p = s * (T(2) * xm * qq * (qq - rr) - (b - a) * (rr - T(1)));
        q = (qq - T(1)) * (rr - T(1)) * (s - T(1));
      }
      if (p > 0) q = -q;
      p = fabs(p);
      const T min1 = T(3) * xm * q - fabs(tol1 * q);
      const T min2 = fabs(e * q);
      if (T(2) * p < (min1 < min2 ? min1 : min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (fabs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
    fb = f(b);
  }
  r.x = b;
  r.fx = fb;
  r.iterations = max_iter;
  r.converged = false;
  return r;
}

}  // namespace spikechain::roots

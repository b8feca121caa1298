#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace spikechain::quadrature {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Nodes by Newton iteration on P_n, carried in long double so the double
/// nodes and weights are correctly rounded for n up to a few hundred.
inline GaussLegendreRule gauss_legendre(std::size_t n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    long double x = std::cos(std::numbers::pi_v<long double> * (static_cast<long double>(i) + 0.75L) /
                             (static_cast<long double>(n) + 0.5L));
    long double dp = 0.0L;
    for (int iter = 0; iter < 100; ++iter) {
      long double p0 = 1.0L;
      long double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const long double pk = ((2.0L * k - 1.0L) * x * p1 - (k - 1.0L) * p0) / static_cast<long double>(k);
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0L;
      dp = static_cast<long double>(n) * (x * p1 - p0) / (x * x - 1.0L);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-19L) break;
    }
    // recompute derivative at the converged node
    long double p0 = 1.0L;
    long double p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const long double pk = ((2.0L * k - 1.0L) * x * p1 - (k - 1.0L) * p0) / static_cast<long double>(k);
      p0 = p1;
      p1 = pk;
    }
    if (n == 1) p0 = 1.0L;
    dp = static_cast<long double>(n) * (x * p1 - p0) / (x * x - 1.0L);
    const long double w = 2.0L / ((1.0L - x * x) * dp * dp);
    rule.nodes[i] = static_cast<double>(-x);
    rule.nodes[n - 1 - i] = static_cast<double>(x);
    rule.weights[i] = static_cast<double>(w);
    rule.weights[n - 1 - i] = static_cast<double>(w);
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Composite rule: [a, b] split into `panels` equal panels, each mapped from
/// the reference rule. Returned as flat node/weight arrays. The partition of a
/// mirrored interval is the mirror image of the original partition.
struct CompositeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline CompositeRule composite(const GaussLegendreRule& rule, double a, double b, std::size_t panels) {
  CompositeRule out;
  out.nodes.reserve(panels * rule.size());
  out.weights.reserve(panels * rule.size());
  const double width = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + width * static_cast<double>(p);
    const double hi = (p + 1 == panels) ? b : a + width * static_cast<double>(p + 1);
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < rule.size(); ++i) {
      out.nodes.push_back(mid + half * rule.nodes[i]);
      out.weights.push_back(half * rule.weights[i]);
    }
  }
  return out;
}

template <class F>
double integrate_1d(F&& f, const GaussLegendreRule& rule, double a, double b, std::size_t panels) {
  const CompositeRule c = composite(rule, a, b, panels);
  double sum = 0.0;
  for (std::size_t i = 0; i < c.nodes.size(); ++i) sum += c.weights[i] * f(c.nodes[i]);
  return sum;
}

}  // namespace spikechain::quadrature

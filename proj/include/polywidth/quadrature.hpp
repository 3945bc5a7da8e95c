#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <polywidth/errors.hpp>
#include <polywidth/matrix.hpp>

namespace polywidth {

// Gauss-Legendre rule on [-1, 1].
struct QuadratureRule {
  Vec nodes;    // strictly increasing abscissae in (-1, 1)
  Vec weights;  // positive, sum to 2
};

// n-point Gauss-Legendre rule. Nodes are the roots of the Legendre polynomial
// P_n, found by Newton iteration seeded with the Chebyshev-angle estimate; we
// compute the non-negative half and mirror it so the rule is exactly symmetric.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1 || n > 512)
    throw size_error("gauss_legendre: point count " + std::to_string(n) +
                     " outside [1, 512]");
  QuadratureRule rule;
  rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
  rule.weights.assign(static_cast<std::size_t>(n), 0.0);

  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // i-th root counted from x = +1 downwards; this loop covers x >= 0.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Evaluate P_n and P_{n-1} by the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = (n == 1) ? x : p1;
      const double pnm1 = (n == 1) ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Mirror: node i from the top pairs with node n-1-i from the bottom.
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    rule.weights[static_cast<std::size_t>(i)] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

// Point count needed to integrate a polynomial of the given degree exactly,
// plus a safety margin of two points.
inline int gauss_count_for_degree(int max_degree) {
  return (max_degree + 2) / 2 + 2;
}

// Integrate f over [a, b] with the given rule mapped affinely.
template <class F>
double integrate(const QuadratureRule& rule, F&& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q)
    s += rule.weights[q] * f(mid + hw * rule.nodes[q]);
  return hw * s;
}

}  // namespace polywidth

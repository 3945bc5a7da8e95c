#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <polywidth/errors.hpp>

namespace polywidth {

// Brent's method: bracketed root-finding combining bisection, secant, and
// inverse quadratic interpolation. Requires a sign change on [a, b]; stops
// when the bracket width shrinks below tol (plus machine slack).
inline double brent_root(const std::function<double(double)>& f, double a, double b,
                         double tol = 1e-13) {
  if (!(tol >= 1e-14))
    throw size_error("brent_root: tolerance must be >= 1e-14");
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0))
    throw bracket_error("brent_root: no sign change on [" + std::to_string(a) + ", " +
                        std::to_string(b) + "]");

  double c = a, fc = fa;
  double d = b - a, e = b - a;
  const int max_iter = 200;
  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * tol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      // Attempt interpolation.
      const double s = fb / fa;
      double p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
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
    b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
  }
  return b;
}

}  // namespace polywidth

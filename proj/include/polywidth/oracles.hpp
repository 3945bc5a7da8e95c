#pragma once

// Reference spectra computed by independent closed-form or special-function
// routes, never through the Galerkin path. Used by tests and by the CLI's
// oracle-comparison columns.

#include <cmath>
#include <vector>

#include <polywidth/bessel.hpp>
#include <polywidth/errors.hpp>
#include <polywidth/roots.hpp>

namespace polywidth::oracles {

// p = 1, free ends: -u'' = lambda u with u'(0) = u'(1) = 0 has eigenvalues
// (pi j)^2 with eigenfunctions cos(pi j t), plus the constant kernel.
inline double neumann_lambda(int j) { return (M_PI * j) * (M_PI * j); }

// p = 2, free-free beam: u'''' = lambda u with u'' = u''' = 0 at both ends.
// Positive eigenvalues are k_j^4 with cos(k_j) cosh(k_j) = 1. The roots sit
// near (j + 1/2) pi; we solve cos k = sech k, which is scale-free.
inline std::vector<double> beam_roots(int count) {
  std::vector<double> roots;
  roots.reserve(static_cast<std::size_t>(count));
  for (int j = 1; j <= count; ++j) {
    const double a = (j + 0.45) * M_PI;
    const double b = (j + 0.55) * M_PI;
    roots.push_back(brent_root(
        [](double k) { return std::cos(k) - 1.0 / std::cosh(k); }, a, b, 1e-14));
  }
  return roots;
}

inline double beam_lambda(int j) {
  const auto roots = beam_roots(j);
  const double k = roots.back();
  return k * k * k * k;
}

// Clamped unit disk, p = 1 (the clamped-plate problem): radial frequencies in
// angular mode l are the roots of J_l(k) I_l'(k) - I_l(k) J_l'(k) = 0, and the
// eigenvalues are k^4. The determinant is normalized by I_l(k) to keep the
// scanned function O(1).
inline std::vector<double> clamped_disk_roots(int l, int count) {
  auto f = [l](double k) {
    return bessel_J(l, k) * (bessel_I_prime(l, k) / bessel_I(l, k)) - bessel_J_prime(l, k);
  };
  std::vector<double> roots;
  double prev_k = 0.5 + 0.1 * l;
  double prev_f = f(prev_k);
  const double step = 0.02;
  for (double k = prev_k + step; k < 59.0 && static_cast<int>(roots.size()) < count;
       k += step) {
    const double cur = f(k);
    if ((prev_f < 0.0 && cur > 0.0) || (prev_f > 0.0 && cur < 0.0))
      roots.push_back(brent_root(f, prev_k, k, 1e-13));
    prev_k = k;
    prev_f = cur;
  }
  if (static_cast<int>(roots.size()) < count)
    throw bracket_error("clamped_disk_roots: scan exhausted before finding enough roots");
  return roots;
}

inline double clamped_disk_lambda(int l, int index = 1) {
  const auto roots = clamped_disk_roots(l, index);
  const double k = roots[static_cast<std::size_t>(index - 1)];
  return k * k * k * k;
}

}  // namespace polywidth::oracles

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <polywidth/errors.hpp>

namespace polywidth {

namespace detail {

inline void check_bessel_args(const char* name, int l, double x) {
  if (l < 0 || l > 20)
    throw std::domain_error(std::string(name) + ": order " + std::to_string(l) +
                            " outside validated range [0, 20]");
  if (!(x >= 0.0) || x > 60.0)
    throw std::domain_error(std::string(name) + ": argument " + std::to_string(x) +
                            " outside validated range [0, 60]");
}

// Ascending power series for J_l; accurate for moderate x (no cancellation
// trouble below x ~ 12 at double precision).
inline double bessel_J_series(int l, double x) {
  const double half = 0.5 * x;
  // term_0 = (x/2)^l / l!
  double term = 1.0;
  for (int k = 1; k <= l; ++k) term *= half / k;
  double sum = term;
  const double x2 = -half * half;
  for (int m = 1; m <= 200; ++m) {
    term *= x2 / (static_cast<double>(m) * (m + l));
    sum += term;
    if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300)) break;
  }
  return sum;
}

// Miller's downward recurrence for the whole array J_0..J_l, normalized by
// J_0 + 2*sum_k J_{2k} = 1; the stable choice for larger arguments.
inline double bessel_J_miller(int l, double x) {
  int m_start = 2 * static_cast<int>(std::ceil(x)) + 40;
  if (m_start < l + 20) m_start = l + 20;
  if (m_start % 2 == 1) ++m_start;
  double jp1 = 0.0;       // J_{m+1}
  double j = 1e-30;       // J_m (arbitrary seed)
  double norm = 0.0;      // accumulates J_0 + 2*sum J_{2k}
  double result = 0.0;
  for (int m = m_start; m >= 1; --m) {
    const double jm1 = (2.0 * m / x) * j - jp1;
    jp1 = j;
    j = jm1;
    if (std::abs(j) > 1e250) {  // rescale to avoid overflow
      j *= 1e-250;
      jp1 *= 1e-250;
      norm *= 1e-250;
      result *= 1e-250;
    }
    const int idx = m - 1;  // we now hold J_{idx}
    if (idx == l) result = j;
    if (idx > 0 && idx % 2 == 0) norm += 2.0 * j;
  }
  norm += j;  // j now holds J_0
  return result / norm;
}

}  // namespace detail

// Bessel function of the first kind J_l(x), validated for 0 <= l <= 20,
// 0 <= x <= 60: power series for small x, Miller recurrence otherwise.
inline double bessel_J(int l, double x) {
  detail::check_bessel_args("bessel_J", l, x);
  if (x == 0.0) return l == 0 ? 1.0 : 0.0;
  if (x <= 12.0) return detail::bessel_J_series(l, x);
  return detail::bessel_J_miller(l, x);
}

// Modified Bessel function I_l(x): the ascending series has all-positive
// terms, so it is cancellation-free over the whole validated range.
inline double bessel_I(int l, double x) {
  detail::check_bessel_args("bessel_I", l, x);
  if (x == 0.0) return l == 0 ? 1.0 : 0.0;
  const double half = 0.5 * x;
  double term = 1.0;
  for (int k = 1; k <= l; ++k) term *= half / k;
  double sum = term;
  const double x2 = half * half;
  for (int m = 1; m <= 400; ++m) {
    term *= x2 / (static_cast<double>(m) * (m + l));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

// Derivatives via the standard recurrences.
inline double bessel_J_prime(int l, double x) {
  if (l == 0) return -bessel_J(1, x);
  return 0.5 * (bessel_J(l - 1, x) - bessel_J(l + 1, x));
}

inline double bessel_I_prime(int l, double x) {
  if (l == 0) return bessel_I(1, x);
  return 0.5 * (bessel_I(l - 1, x) + bessel_I(l + 1, x));
}

}  // namespace polywidth

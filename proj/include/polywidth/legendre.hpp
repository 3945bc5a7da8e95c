#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <polywidth/errors.hpp>
#include <polywidth/matrix.hpp>

namespace polywidth {

// Values P_0(x) .. P_nmax(x) of the Legendre polynomials.
inline Vec legendre_values(int n_max, double x) {
  Vec p(static_cast<std::size_t>(n_max) + 1);
  p[0] = 1.0;
  if (n_max >= 1) p[1] = x;
  for (int k = 2; k <= n_max; ++k)
    p[static_cast<std::size_t>(k)] =
        ((2 * k - 1) * x * p[static_cast<std::size_t>(k - 1)] -
         (k - 1) * p[static_cast<std::size_t>(k - 2)]) / k;
  return p;
}

// table[m][k] = d^m/dx^m P_k(x) for m = 0..m_max, k = 0..n_max, built with the
// derivative recurrence P^(m)_{k+1} = P^(m)_{k-1} + (2k+1) P^(m-1)_k.
// Entries with k < m are exactly zero (polynomial degree drops below zero).
inline std::vector<Vec> legendre_derivative_table(int n_max, int m_max, double x) {
  std::vector<Vec> table(static_cast<std::size_t>(m_max) + 1,
                         Vec(static_cast<std::size_t>(n_max) + 1, 0.0));
  table[0] = legendre_values(n_max, x);
  for (int m = 1; m <= m_max; ++m) {
    auto& cur = table[static_cast<std::size_t>(m)];
    const auto& prev = table[static_cast<std::size_t>(m - 1)];
    // cur[k] = 0 for k < m holds by initialization; build upwards from k = m.
    for (int k = 1; k <= n_max; ++k) {
      const double below = (k >= 2) ? cur[static_cast<std::size_t>(k - 2)] : 0.0;
      cur[static_cast<std::size_t>(k)] =
          below + (2 * k - 1) * prev[static_cast<std::size_t>(k - 1)];
    }
  }
  return table;
}

// Orthonormal shifted Legendre basis on [0,1]: B_k(t) = sqrt(2k+1) P_k(2t-1).
// shifted_basis_table[m][k] = d^m/dt^m B_k(t) (chain rule factor 2^m included).
inline std::vector<Vec> shifted_basis_table(int n_max, int m_max, double t) {
  auto table = legendre_derivative_table(n_max, m_max, 2.0 * t - 1.0);
  double chain = 1.0;
  for (int m = 0; m <= m_max; ++m) {
    auto& row = table[static_cast<std::size_t>(m)];
    for (int k = 0; k <= n_max; ++k)
      row[static_cast<std::size_t>(k)] *= chain * std::sqrt(2.0 * k + 1.0);
    chain *= 2.0;
  }
  return table;
}

inline double shifted_basis_value(int k, double t) {
  return shifted_basis_table(k, 0, t)[0][static_cast<std::size_t>(k)];
}

// Derivative matrix on the orthonormal shifted basis: (d/dt) B_k = sum_j D(j,k) B_j
// with D(j,k) = 2 sqrt((2j+1)(2k+1)) for j < k, k - j odd; zero otherwise.
// (Exact expansion of P'_k = sum_{j<k, k-j odd} (2j+1) P_j.)
inline Matrix derivative_matrix_1d(int basis_size) {
  const auto n = static_cast<std::size_t>(basis_size);
  Matrix d(n, n);
  for (int k = 0; k < basis_size; ++k)
    for (int j = k - 1; j >= 0; j -= 2)
      d(static_cast<std::size_t>(j), static_cast<std::size_t>(k)) =
          2.0 * std::sqrt((2.0 * j + 1.0) * (2.0 * k + 1.0));
  return d;
}

// Multiplication-by-s operator on the orthonormal shifted basis over s in [0,1]:
// s B_k = (k+1)/(2 sqrt((2k+1)(2k+3))) B_{k+1} + (1/2) B_k + k/(2 sqrt((2k-1)(2k+1))) B_{k-1}.
// Exact symmetric tridiagonal matrix (from the Legendre three-term recurrence).
inline Matrix multiplication_by_s_matrix(int basis_size) {
  const auto n = static_cast<std::size_t>(basis_size);
  Matrix s(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    s(k, k) = 0.5;
    if (k + 1 < n) {
      const double off =
          (static_cast<double>(k) + 1.0) /
          (2.0 * std::sqrt((2.0 * k + 1.0) * (2.0 * k + 3.0)));
      s(k + 1, k) = off;
      s(k, k + 1) = off;
    }
  }
  return s;
}

}  // namespace polywidth

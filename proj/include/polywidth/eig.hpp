#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <polywidth/errors.hpp>
#include <polywidth/matrix.hpp>

namespace polywidth {

// Symmetric stiffness/mass pair defining the pencil K v = lambda M v.
struct GalerkinPair {
  Matrix stiffness;
  Matrix mass;
  std::size_t dim = 0;
};

// Eigenvalues ascending; eigenvector columns mass-orthonormal.
struct EigenDecomposition {
  Vec values;
  Matrix vectors;
};

inline void check_galerkin_pair(const GalerkinPair& pair) {
  if (pair.stiffness.rows() != pair.dim || pair.stiffness.cols() != pair.dim ||
      pair.mass.rows() != pair.dim || pair.mass.cols() != pair.dim)
    throw shape_error("galerkin pair: matrix dimensions disagree with dim");
  const double ks = std::max(max_abs(pair.stiffness), 1e-300);
  const double ms = std::max(max_abs(pair.mass), 1e-300);
  for (std::size_t i = 0; i < pair.dim; ++i)
    for (std::size_t j = i + 1; j < pair.dim; ++j) {
      if (std::abs(pair.stiffness(i, j) - pair.stiffness(j, i)) > 1e-12 * ks)
        throw shape_error("galerkin pair: stiffness not symmetric at (" +
                          std::to_string(i) + "," + std::to_string(j) + ")");
      if (std::abs(pair.mass(i, j) - pair.mass(j, i)) > 1e-12 * ms)
        throw shape_error("galerkin pair: mass not symmetric at (" +
                          std::to_string(i) + "," + std::to_string(j) + ")");
    }
}

namespace detail {

// Cyclic Jacobi on a symmetric matrix (in place). A rotation is applied only
// when the pivot exceeds a small floor relative to the local diagonal scale,
// sqrt(|a_pp a_qq|); sweeps continue until none does. Measuring pivots against
// the local scale instead of a global norm matters for the spectral pencils in
// this library, whose eigenvalues span many orders of magnitude: a stopping
// rule tied to the largest eigenvalue would abandon the smallest ones with
// absolute errors far above their own size, whereas the relative rule keeps
// every eigenvalue of a positive semidefinite input accurate relative to
// itself (Demmel & Veselic). It also leaves exactly-zero rows/columns
// untouched, so structural kernel eigenvalues come out as exact zeros.
// Exceeding the sweep budget is an error.
inline void jacobi_in_place(Matrix& a, Matrix& v, int max_sweeps = 100) {
  const std::size_t n = a.rows();
  v = Matrix::identity(n);
  if (n < 2) return;
  const double rel_floor = 0.5e-15;
  const auto below_floor = [&](std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    const double scale =
        std::sqrt(std::abs(a(p, p)) * std::abs(a(q, q))) + std::abs(apq);
    return apq == 0.0 || std::abs(apq) <= rel_floor * scale;
  };

  for (int sweep = 0;; ++sweep) {
    bool any_above = false;
    for (std::size_t p = 0; p + 1 < n && !any_above; ++p)
      for (std::size_t q = p + 1; q < n && !any_above; ++q)
        any_above = !below_floor(p, q);
    if (!any_above) return;
    if (sweep >= max_sweeps)
      throw convergence_error("jacobi: not converged after " +
                              std::to_string(max_sweeps) + " sweeps");

    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (below_floor(p, q)) continue;
        const double apq = a(p, q);

        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        const double app = a(p, p), aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = akp - s * (akq + tau * akp);
          a(p, k) = a(k, p);
          a(k, q) = akq + s * (akp - tau * akq);
          a(q, k) = a(k, q);
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp - s * (vkq + tau * vkp);
          v(k, q) = vkq + s * (vkp - tau * vkq);
        }
      }
  }
}

// Deterministic ordering and sign convention applied to a decomposition.
inline void order_and_sign(EigenDecomposition& d) {
  const std::size_t n = d.values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Ascending by eigenvalue; exact ties ordered by the index of the
  // largest-magnitude coefficient of the eigenvector.
  auto argmax_row = [&](std::size_t col) {
    std::size_t best = 0;
    double bestval = -1.0;
    for (std::size_t i = 0; i < d.vectors.rows(); ++i) {
      const double m = std::abs(d.vectors(i, col));
      if (m > bestval) {
        bestval = m;
        best = i;
      }
    }
    return best;
  };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (d.values[a] != d.values[b]) return d.values[a] < d.values[b];
    return argmax_row(a) < argmax_row(b);
  });

  Vec sorted_values(n);
  Matrix sorted_vectors(d.vectors.rows(), n);
  for (std::size_t c = 0; c < n; ++c) {
    sorted_values[c] = d.values[idx[c]];
    // Sign: first coefficient with magnitude > 1e-12 made positive.
    double sign = 1.0;
    for (std::size_t i = 0; i < d.vectors.rows(); ++i) {
      const double val = d.vectors(i, idx[c]);
      if (std::abs(val) > 1e-12) {
        sign = val > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t i = 0; i < d.vectors.rows(); ++i)
      sorted_vectors(i, c) = sign * d.vectors(i, idx[c]);
  }
  d.values = std::move(sorted_values);
  d.vectors = std::move(sorted_vectors);
}

}  // namespace detail

// Standard symmetric eigenproblem A y = lambda y (orthonormal eigenvectors).
inline EigenDecomposition sym_eig(const Matrix& a, int max_sweeps = 100) {
  if (a.rows() != a.cols()) throw shape_error("sym_eig: matrix not square");
  Matrix work = symmetrize(a);
  Matrix v;
  detail::jacobi_in_place(work, v, max_sweeps);
  EigenDecomposition d;
  d.values.resize(work.rows());
  for (std::size_t i = 0; i < work.rows(); ++i) d.values[i] = work(i, i);
  d.vectors = v;
  detail::order_and_sign(d);
  return d;
}

// Generalized symmetric-definite eigenproblem K x = lambda M x via Cholesky
// M = L L^T and Jacobi on L^-1 K L^-T; eigenvectors returned mass-orthonormal.
inline EigenDecomposition sym_generalized_eig(const GalerkinPair& pair) {
  check_galerkin_pair(pair);
  const std::size_t n = pair.dim;
  const Matrix l = cholesky(pair.mass);

  // B = L^-1 K L^-T, formed column-by-column with triangular solves.
  Matrix w(n, n);  // W = L^-1 K
  for (std::size_t j = 0; j < n; ++j) {
    Vec col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = pair.stiffness(i, j);
    const Vec sol = solve_lower(l, col);
    for (std::size_t i = 0; i < n; ++i) w(i, j) = sol[i];
  }
  Matrix b(n, n);  // B = (L^-1 W^T)^T
  for (std::size_t j = 0; j < n; ++j) {
    Vec row(n);
    for (std::size_t i = 0; i < n; ++i) row[i] = w(j, i);
    const Vec sol = solve_lower(l, row);
    for (std::size_t i = 0; i < n; ++i) b(j, i) = sol[i];
  }
  b = symmetrize(b);

  Matrix y;
  detail::jacobi_in_place(b, y);

  EigenDecomposition d;
  d.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.values[i] = b(i, i);
  // Back-transform x = L^-T y column by column.
  d.vectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    Vec col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = y(i, c);
    const Vec x = solve_lower_transpose(l, col);
    for (std::size_t i = 0; i < n; ++i) d.vectors(i, c) = x[i];
  }
  detail::order_and_sign(d);
  return d;
}

}  // namespace polywidth

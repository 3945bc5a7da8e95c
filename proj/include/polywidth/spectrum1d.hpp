#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <polywidth/eig.hpp>
#include <polywidth/ellipsoid.hpp>
#include <polywidth/errors.hpp>
#include <polywidth/legendre.hpp>
#include <polywidth/matrix.hpp>
#include <polywidth/quadrature.hpp>

namespace polywidth {

// The 1D problem on [0,1]: minimize / diagonalize int |u^(p)|^2 subject to
// int |u|^2 = 1 over a shifted-Legendre trial space of size basis_size.
// No boundary constraints are imposed: the natural conditions
// u^(p+j)(0) = u^(p+j)(1) = 0 emerge from the variational form, and the
// p-dimensional polynomial kernel {1, t, ..., t^(p-1)} appears exactly.
struct Problem1D {
  int p = 1;
  int basis_size = 40;
};

inline void validate_problem(const Problem1D& problem) {
  if (problem.p < 1 || problem.p > 4)
    throw size_error("problem1d: smoothness order p = " + std::to_string(problem.p) +
                     " outside [1, 4]");
  if (problem.basis_size < 2 * problem.p + 2 || problem.basis_size > 256)
    throw size_error("problem1d: basis size " + std::to_string(problem.basis_size) +
                     " outside [2p+2, 256]");
}

// Eigenvalues ascending with the p null eigenvalues stored as exact zeros at
// the front; eigenvector columns are L2(0,1)-orthonormal coefficient vectors
// in the shifted-Legendre basis.
struct Spectrum1D {
  int p = 0;
  int basis_size = 0;
  int null_dim = 0;
  Vec eigenvalues;
  Matrix eigenvectors;
  GalerkinPair pair;  // kept for Gram checks and expansions
};

// Zero threshold separating the analytic p-fold kernel from the positive
// spectrum: an eigenvalue counts as zero iff it lies below 1e-8, as an
// absolute number. Deliberately NOT scaled by lambda_max: the derivative and
// Laplacian coefficient matrices are strictly upper triangular, so the kernel
// rows/columns of every stiffness matrix are exactly zero, and the eigensolver
// (Cholesky forward solves plus Jacobi rotations that skip zero pivots)
// propagates them to eigenvalues that are exact floating-point zeros — the
// kernel tests assert == 0.0. Meanwhile the largest eigenvalue grows like
// basis_size^(4p) (~1e23 for p = 2 at radial size 32) while the smallest
// positive one stays put (>= pi^2 for every problem in this library), so any
// lambda_max-relative cut would swallow genuine low eigenvalues long before
// reaching the basis sizes this library supports.
inline double null_threshold() { return 1e-8; }

// Stiffness S_ij = int B_i^(p) B_j^(p) dt and mass M_ij = int B_i B_j dt on
// [0,1], assembled with a Gauss rule exact for the integrand degree. Basis
// derivatives come from the Legendre derivative recurrence, so rows with
// polynomial degree < p vanish identically and the stiffness has rank
// deficiency exactly p.
inline GalerkinPair assemble_1d(const Problem1D& problem) {
  // Assembly itself only needs room for the rank structure (rank = K - p >= 1);
  // the full solve enforces the stricter K >= 2p + 2 via validate_problem.
  if (problem.p < 1 || problem.p > 4)
    throw size_error("problem1d: smoothness order p = " + std::to_string(problem.p) +
                     " outside [1, 4]");
  if (problem.basis_size < problem.p + 1 || problem.basis_size > 256)
    throw size_error("assemble_1d: basis size " + std::to_string(problem.basis_size) +
                     " too small for the rank structure (need > p) or above 256");
  const int K = problem.basis_size;
  const int p = problem.p;
  const auto rule = gauss_legendre(gauss_count_for_degree(2 * (K - 1)));

  GalerkinPair pair;
  pair.dim = static_cast<std::size_t>(K);
  pair.stiffness = Matrix(pair.dim, pair.dim);
  pair.mass = Matrix(pair.dim, pair.dim);

  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double t = 0.5 * (rule.nodes[q] + 1.0);
    const double w = 0.5 * rule.weights[q];
    const auto table = shifted_basis_table(K - 1, p, t);
    const auto& val = table[0];
    const auto& der = table[static_cast<std::size_t>(p)];
    for (int i = 0; i < K; ++i) {
      const auto si = static_cast<std::size_t>(i);
      for (int j = i; j < K; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        pair.mass(si, sj) += w * val[si] * val[sj];
        pair.stiffness(si, sj) += w * der[si] * der[sj];
      }
    }
  }
  for (std::size_t i = 0; i < pair.dim; ++i)
    for (std::size_t j = i + 1; j < pair.dim; ++j) {
      pair.mass(j, i) = pair.mass(i, j);
      pair.stiffness(j, i) = pair.stiffness(i, j);
    }
  return pair;
}

inline Spectrum1D solve_spectrum_1d(const Problem1D& problem) {
  validate_problem(problem);
  const GalerkinPair pair = assemble_1d(problem);
  auto decomposition = sym_generalized_eig(pair);

  Spectrum1D spectrum;
  spectrum.p = problem.p;
  spectrum.basis_size = problem.basis_size;
  spectrum.eigenvalues = std::move(decomposition.values);
  spectrum.eigenvectors = std::move(decomposition.vectors);
  spectrum.pair = pair;

  const double threshold = null_threshold();
  int nulls = 0;
  for (double v : spectrum.eigenvalues) {
    if (v < -threshold)
      throw discretization_error(
          "solve_spectrum_1d: eigenvalue " + std::to_string(v) +
          " below the negative tolerance; assembly is inconsistent");
    if (v < threshold)
      ++nulls;
  }
  if (nulls != problem.p)
    throw discretization_error(
        "solve_spectrum_1d: null space dimension " + std::to_string(nulls) +
        " != p = " + std::to_string(problem.p) +
        " (basis too small or threshold misconfigured; p = " + std::to_string(problem.p) +
        ", basis " + std::to_string(problem.basis_size) + ")");
  spectrum.null_dim = nulls;
  for (int i = 0; i < nulls; ++i) spectrum.eigenvalues[static_cast<std::size_t>(i)] = 0.0;
  return spectrum;
}

// Width of the smoothness class under the computed spectrum: infinite while
// the projection dimension cannot cover the polynomial kernel, 1/sqrt(lambda_{N+1})
// afterwards (null eigenvalues counted inside the ordering).
inline double kolmogorov_width_1d(const Spectrum1D& spectrum, std::size_t n_dim) {
  if (n_dim + 1 > spectrum.eigenvalues.size())
    throw std::out_of_range("kolmogorov_width_1d: N beyond computed spectrum");
  if (n_dim < static_cast<std::size_t>(spectrum.p))
    return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(spectrum.eigenvalues[n_dim]);
}

struct AsymptoticsRow {
  int j = 0;
  double ratio = 0.0;       // lambda_{p+j} / (pi j)^(2p)
  double deviation = 0.0;   // |ratio - 1|
  double root_ratio = 0.0;  // ratio^(1/(2p)), the frequency-scale ratio
  bool within_fitted = false;  // deviation <= C / j for the fitted C
};

struct AsymptoticsReport {
  std::vector<AsymptoticsRow> rows;
  double fitted_constant = 0.0;  // C = max_j j * |ratio_j - 1|
};

// Ratios of computed eigenvalues to the leading-order growth law
// (pi j)^(2p). Restricted to the lower third of the spectrum, the
// discretization-trust region; higher Galerkin eigenvalues are artifacts.
inline AsymptoticsReport asymptotic_report(const Spectrum1D& spectrum, int j_max) {
  if (j_max < 1) throw size_error("asymptotic_report: j_max must be >= 1");
  if (3 * (spectrum.p + j_max) > spectrum.basis_size)
    throw std::out_of_range(
        "asymptotic_report: j_max beyond the trust region (lowest third of the "
        "spectrum)");
  AsymptoticsReport report;
  for (int j = 1; j <= j_max; ++j) {
    AsymptoticsRow row;
    row.j = j;
    const double lambda = spectrum.eigenvalues[static_cast<std::size_t>(spectrum.p + j - 1)];
    row.ratio = lambda / std::pow(M_PI * j, 2.0 * spectrum.p);
    row.deviation = std::abs(row.ratio - 1.0);
    row.root_ratio = std::pow(row.ratio, 1.0 / (2.0 * spectrum.p));
    report.rows.push_back(row);
  }
  for (const auto& row : report.rows)
    report.fitted_constant = std::max(report.fitted_constant, row.j * row.deviation);
  for (auto& row : report.rows)
    row.within_fitted = row.deviation <= report.fitted_constant / row.j + 1e-15;
  return report;
}

// Evaluate a coefficient vector (or its derivative) at a point of [0,1].
inline double eval_1d(const Vec& coeffs, int order, double t) {
  const int K = static_cast<int>(coeffs.size());
  const auto table = shifted_basis_table(K - 1, order, t);
  const auto& row = table[static_cast<std::size_t>(order)];
  double v = 0.0;
  for (int k = 0; k < K; ++k) v += coeffs[static_cast<std::size_t>(k)] * row[static_cast<std::size_t>(k)];
  return v;
}

}  // namespace polywidth

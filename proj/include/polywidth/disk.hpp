#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <polywidth/eig.hpp>
#include <polywidth/ellipsoid.hpp>
#include <polywidth/errors.hpp>
#include <polywidth/legendre.hpp>
#include <polywidth/matrix.hpp>
#include <polywidth/quadrature.hpp>
#include <polywidth/spectrum1d.hpp>

namespace polywidth {

// Separation-of-variables Galerkin solver on the unit disk. Functions are
// decomposed into angular Fourier modes cos(l*theta), sin(l*theta) times radial
// profiles; within mode l the radial trial space is
//   { r^l * B_m(r^2) : m = 0 .. radial_size-1 },
// with B_m the orthonormal shifted Legendre basis on [0,1]. Every basis
// function is a polynomial in (x, y), smooth at the origin, and the Laplacian
// maps the family into itself exactly, so assembly is exact up to roundoff.

enum class Variant { free, clamped };

struct DiskProblem {
  int p = 1;           // polyharmonic order: energy is the L2 norm of (Laplacian^p u)
  int l_max = 4;       // largest angular wavenumber retained
  int radial_size = 32;  // radial basis functions per mode
  Variant variant = Variant::free;
};

inline void validate_disk_problem(const DiskProblem& problem) {
  if (problem.p < 1 || problem.p > 2)
    throw size_error("disk problem: polyharmonic order p = " + std::to_string(problem.p) +
                     " outside [1, 2]");
  if (problem.l_max < 0 || problem.l_max > 12)
    throw size_error("disk problem: angular cutoff l_max = " + std::to_string(problem.l_max) +
                     " outside [0, 12]");
  if (problem.radial_size < 2 * problem.p + 2 || problem.radial_size > 64)
    throw size_error("disk problem: radial size " + std::to_string(problem.radial_size) +
                     " outside [2p+2, 64]");
}

// Integral of the squared angular factor: 2*pi for the constant mode, pi for
// cos(l*theta) and sin(l*theta) with l >= 1.
inline double angular_factor(int l) { return l == 0 ? 2.0 * M_PI : M_PI; }

// Exact matrix of the Laplacian on the mode-l radial basis. Writing a trial
// function as r^l * g(s) with s = r^2, the 2D Laplacian of the full mode
// function reduces to r^l * (4 s g'' + 4 (l+1) g'), again of the same family
// with the s-degree lowered by one. The matrix is therefore strictly upper
// triangular (nilpotent) and is assembled from the exact derivative and
// multiplication-by-s matrices of the shifted basis; no quadrature involved.
inline Matrix radial_laplacian_matrix(int l, int radial_size) {
  if (l < 0 || l > 12)
    throw size_error("radial_laplacian_matrix: angular mode " + std::to_string(l) +
                     " outside [0, 12]");
  if (radial_size < 1 || radial_size > 64)
    throw size_error("radial_laplacian_matrix: radial size " + std::to_string(radial_size) +
                     " outside [1, 64]");
  const Matrix d = derivative_matrix_1d(radial_size);
  const Matrix s = multiplication_by_s_matrix(radial_size);
  Matrix a = matmul(s, matmul(d, d));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      a(i, j) = 4.0 * (a(i, j) + (static_cast<double>(l) + 1.0) * d(i, j));
  return a;
}

// L2(disk) Gram matrix of the mode-l radial basis (angular factor included):
//   M_ij = angular_factor(l) * 1/2 * int_0^1 s^l B_i(s) B_j(s) ds,
// assembled with a Gauss rule exact for the integrand degree. Including the
// angular factor here makes mass-orthonormal eigenvectors orthonormal in
// L2 of the whole disk, which is the normalization every downstream
// expansion assumes.
inline Matrix radial_mass_matrix(int l, int radial_size) {
  if (l < 0 || l > 12)
    throw size_error("radial_mass_matrix: angular mode " + std::to_string(l) +
                     " outside [0, 12]");
  if (radial_size < 1 || radial_size > 64)
    throw size_error("radial_mass_matrix: radial size " + std::to_string(radial_size) +
                     " outside [1, 64]");
  const auto n = static_cast<std::size_t>(radial_size);
  const auto rule = gauss_legendre(gauss_count_for_degree(l + 2 * (radial_size - 1)));
  Matrix m(n, n);
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double t = 0.5 * (rule.nodes[q] + 1.0);
    const double w = 0.5 * rule.weights[q];
    double tl = 1.0;
    for (int e = 0; e < l; ++e) tl *= t;
    const auto val = shifted_basis_table(radial_size - 1, 0, t)[0];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) m(i, j) += w * tl * val[i] * val[j];
  }
  const double scale = 0.5 * angular_factor(l);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      m(i, j) *= scale;
      m(j, i) = m(i, j);
    }
  return m;
}

// Boundary trace of each radial basis function at r = 1: B_k(1) = sqrt(2k+1).
inline Vec boundary_value_functional(int radial_size) {
  Vec v(static_cast<std::size_t>(radial_size));
  for (int k = 0; k < radial_size; ++k)
    v[static_cast<std::size_t>(k)] = std::sqrt(2.0 * k + 1.0);
  return v;
}

// Radial (outward normal) derivative of each mode-l basis function at r = 1:
//   d/dr [r^l B_k(r^2)] at r=1  =  sqrt(2k+1) * (l + 2 k (k+1)).
inline Vec boundary_derivative_functional(int l, int radial_size) {
  Vec v(static_cast<std::size_t>(radial_size));
  for (int k = 0; k < radial_size; ++k)
    v[static_cast<std::size_t>(k)] =
        std::sqrt(2.0 * k + 1.0) * (static_cast<double>(l) + 2.0 * k * (k + 1.0));
  return v;
}

// Rows of the clamped constraint matrix: the 2p functionals
//   u -> (Laplacian^j u)(1)  and  u -> d/dr (Laplacian^j u)(1),  j = 0..p-1,
// each row scaled to unit Euclidean norm for conditioning.
inline Matrix clamped_constraint_matrix(int p, int l, int radial_size) {
  if (p < 1 || p > 4)
    throw size_error("clamped_constraint_matrix: order p = " + std::to_string(p) +
                     " outside [1, 4]");
  const auto n = static_cast<std::size_t>(radial_size);
  const Matrix a = radial_laplacian_matrix(l, radial_size);
  Vec val = boundary_value_functional(radial_size);
  Vec der = boundary_derivative_functional(l, radial_size);
  Matrix c(2 * static_cast<std::size_t>(p), n);
  for (int j = 0; j < p; ++j) {
    const auto r0 = static_cast<std::size_t>(2 * j);
    const double sv = norm2(val);
    const double sd = norm2(der);
    if (sv == 0.0 || sd == 0.0)
      throw assembly_error("clamped_constraint_matrix: vanishing constraint row at level " +
                           std::to_string(j));
    for (std::size_t k = 0; k < n; ++k) {
      c(r0, k) = val[k] / sv;
      c(r0 + 1, k) = der[k] / sd;
    }
    if (j + 1 < p) {
      // Compose the functionals with one more Laplacian: row <- row * A.
      Vec nval(n, 0.0), nder(n, 0.0);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) {
          nval[k] += val[i] * a(i, k);
          nder[k] += der[i] * a(i, k);
        }
      val = std::move(nval);
      der = std::move(nder);
    }
  }
  return c;
}

// Banded basis of the null space of a constraint matrix: column c is the unit
// null vector of the r x (r+1) window of C over coefficient slots c..c+r, so
// its support is exactly that window. Locality is what matters here, not
// orthonormality (the generalized eigensolver accepts any congruence): a
// banded basis keeps the reduced stiffness GRADED like the unconstrained one,
// with diagonal entries climbing from the smooth rows to the rough ones.
// Jacobi computes the small eigenvalues of a graded positive semidefinite
// matrix to high relative accuracy, whereas a dense null basis (for instance
// eigenvectors of C^T C) mixes the rough directions into every column, every
// diagonal entry of the reduced stiffness becomes comparable to |K| (~1e23 at
// the largest supported sizes), and the low eigenvalues - some fourteen orders
// of magnitude down - drown in cancellation noise. Each window's null vector
// comes from Gram-Schmidt on the window's rows (never from the window's Gram
// matrix, which would square its conditioning), so the constraints annihilate
// the basis to machine precision. A window whose rows are dependent, or a
// globally rank-deficient constraint matrix, is an assembly error.
inline Matrix constraint_null_space(const Matrix& c) {
  const std::size_t n = c.cols();
  const std::size_t r = c.rows();
  if (r >= n)
    throw assembly_error("constraint_null_space: " + std::to_string(r) +
                         " constraints leave no trial space in dimension " + std::to_string(n));

  // Global rank guard: orthonormalize the full rows (two MGS passes); a row
  // whose residual drops below 1e-10 of its norm depends on its predecessors.
  {
    Matrix q(r, n);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < n; ++j) q(i, j) = c(i, j);
    for (std::size_t i = 0; i < r; ++i) {
      double norm_before = 0.0;
      for (std::size_t j = 0; j < n; ++j) norm_before += q(i, j) * q(i, j);
      norm_before = std::sqrt(norm_before);
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k = 0; k < i; ++k) {
          double proj = 0.0;
          for (std::size_t j = 0; j < n; ++j) proj += q(k, j) * q(i, j);
          for (std::size_t j = 0; j < n; ++j) q(i, j) -= proj * q(k, j);
        }
      double norm_after = 0.0;
      for (std::size_t j = 0; j < n; ++j) norm_after += q(i, j) * q(i, j);
      norm_after = std::sqrt(norm_after);
      if (norm_after <= 1e-10 * std::max(norm_before, 1e-300))
        throw assembly_error("constraint_null_space: constraint matrix rank " +
                             std::to_string(i) + " != row count " + std::to_string(r));
      for (std::size_t j = 0; j < n; ++j) q(i, j) /= norm_after;
    }
  }

  const std::size_t w = r + 1;  // window width
  Matrix z(n, n - r);
  std::vector<double> rows(r * w), seed(w), best(w);
  for (std::size_t col = 0; col + r < n; ++col) {
    // Orthonormalize the window's rows in place (two MGS passes each).
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) rows[i * w + j] = c(i, col + j);
    for (std::size_t i = 0; i < r; ++i) {
      double norm_before = 0.0;
      for (std::size_t j = 0; j < w; ++j) norm_before += rows[i * w + j] * rows[i * w + j];
      norm_before = std::sqrt(norm_before);
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k = 0; k < i; ++k) {
          double proj = 0.0;
          for (std::size_t j = 0; j < w; ++j) proj += rows[k * w + j] * rows[i * w + j];
          for (std::size_t j = 0; j < w; ++j) rows[i * w + j] -= proj * rows[k * w + j];
        }
      double norm_after = 0.0;
      for (std::size_t j = 0; j < w; ++j) norm_after += rows[i * w + j] * rows[i * w + j];
      norm_after = std::sqrt(norm_after);
      if (norm_after <= 1e-10 * std::max(norm_before, 1e-300))
        throw assembly_error("constraint_null_space: constraints dependent on the window at slot " +
                             std::to_string(col));
      for (std::size_t j = 0; j < w; ++j) rows[i * w + j] /= norm_after;
    }
    // Null vector of the window: project every coordinate direction through
    // the orthonormal rows, keep the largest residual (deterministic).
    double best_norm = -1.0;
    for (std::size_t s = 0; s < w; ++s) {
      for (std::size_t j = 0; j < w; ++j) seed[j] = (j == s) ? 1.0 : 0.0;
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k = 0; k < r; ++k) {
          double proj = 0.0;
          for (std::size_t j = 0; j < w; ++j) proj += rows[k * w + j] * seed[j];
          for (std::size_t j = 0; j < w; ++j) seed[j] -= proj * rows[k * w + j];
        }
      double nrm = 0.0;
      for (std::size_t j = 0; j < w; ++j) nrm += seed[j] * seed[j];
      nrm = std::sqrt(nrm);
      if (nrm > best_norm) {
        best_norm = nrm;
        best = seed;
      }
    }
    if (best_norm <= 1e-8)
      throw assembly_error("constraint_null_space: degenerate window at slot " +
                           std::to_string(col));
    double sign = 1.0;
    for (double v : best) {
      if (std::abs(v) > 1e-12 * best_norm) {
        sign = v > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t j = 0; j < w; ++j) z(col + j, col) = sign * best[j] / best_norm;
  }
  return z;
}

// Full assembly data for one angular mode: the exact Laplacian, the L2(disk)
// mass, the full-space stiffness (Laplacian^p)^T M (Laplacian^p), and the
// pencil actually handed to the eigensolver. The free variant constrains
// nothing (trial_basis = identity); the clamped variant restricts the trial
// space to the null space of the 2p boundary constraint rows.
struct DiskModeAssembly {
  GalerkinPair pair;
  Matrix laplacian;
  Matrix mass;
  Matrix stiffness;
  Matrix trial_basis;
};

inline DiskModeAssembly assemble_disk_mode(const DiskProblem& problem, int l) {
  validate_disk_problem(problem);
  if (l < 0 || l > problem.l_max)
    throw size_error("assemble_disk_mode: angular mode " + std::to_string(l) +
                     " outside [0, l_max]");
  const auto n = static_cast<std::size_t>(problem.radial_size);

  DiskModeAssembly assembly;
  assembly.laplacian = radial_laplacian_matrix(l, problem.radial_size);
  assembly.mass = radial_mass_matrix(l, problem.radial_size);
  const Matrix ap = matrix_power(assembly.laplacian, static_cast<unsigned>(problem.p));
  assembly.stiffness = symmetrize(matmul(transpose(ap), matmul(assembly.mass, ap)));

  if (problem.variant == Variant::free) {
    assembly.trial_basis = Matrix::identity(n);
    assembly.pair.stiffness = assembly.stiffness;
    assembly.pair.mass = assembly.mass;
    assembly.pair.dim = n;
  } else {
    const Matrix c = clamped_constraint_matrix(problem.p, l, problem.radial_size);
    const Matrix z = constraint_null_space(c);
    assembly.trial_basis = z;
    const Matrix zt = transpose(z);
    assembly.pair.stiffness = symmetrize(matmul(zt, matmul(assembly.stiffness, z)));
    assembly.pair.mass = symmetrize(matmul(zt, matmul(assembly.mass, z)));
    assembly.pair.dim = z.cols();
  }
  return assembly;
}

inline GalerkinPair assemble_disk(const DiskProblem& problem, int l) {
  return assemble_disk_mode(problem, l).pair;
}

// One angular mode of the spectrum. Eigenvalues ascending with null values
// stored as exact zeros in front; eigenvector columns are radial coefficient
// vectors in the full mode basis (clamped vectors already lifted), orthonormal
// in L2 of the disk.
struct ModeSpectrum {
  int l = 0;
  int null_dim = 0;
  Vec eigenvalues;
  Matrix eigenvectors;
};

// One entry of the merged positive spectrum. index points into the owning
// mode's eigenvalue/eigenvector arrays; harmonic 0 tags the cos(l*theta) copy
// and harmonic 1 the sin(l*theta) copy (modes l >= 1 appear twice, matching
// the true multiplicities of the rotation-invariant problem).
struct MergedEntry {
  double lambda = 0.0;
  int l = 0;
  int index = 0;
  int harmonic = 0;
};

// A function on the disk given as angular components: radial coefficients per
// (l, harmonic), in the same mode basis the solver uses.
struct ModeFunction {
  int l = 0;
  int harmonic = 0;
  Vec coeffs;
};

struct DiskSpectrum {
  DiskProblem problem;
  std::vector<ModeSpectrum> modes;        // indexed by l = 0..l_max
  std::vector<MergedEntry> merged;        // positive eigenvalues, globally ascending
  std::vector<ModeFunction> null_basis;   // orthonormal polyharmonic family
};

// Orthonormal basis of the polyharmonic kernel restricted to modes <= l_max:
// per mode l the kernel is span{ r^(l+2m) : m = 0..p-1 }, orthonormalized by
// Gram-Schmidt over the exact monomial moments
//   <r^a, r^b> = angular_factor(l) / (a + b + 2),
// then converted to radial-basis coefficients (exactly, via the
// multiplication-by-s matrix). Modes l >= 1 contribute a cos and a sin copy.
inline std::vector<ModeFunction> polyharmonic_null_basis(int p, int l_max, int radial_size) {
  if (p < 1 || p > 2)
    throw size_error("polyharmonic_null_basis: order p = " + std::to_string(p) +
                     " outside [1, 2]");
  if (l_max < 0 || l_max > 12)
    throw size_error("polyharmonic_null_basis: angular cutoff l_max = " +
                     std::to_string(l_max) + " outside [0, 12]");
  if (radial_size < p || radial_size > 64)
    throw size_error("polyharmonic_null_basis: radial size " + std::to_string(radial_size) +
                     " cannot hold the degree-p kernel");
  const auto n = static_cast<std::size_t>(radial_size);
  const auto np = static_cast<std::size_t>(p);

  // Radial-basis coefficients of the monomials s^m, m = 0..p-1 (exact).
  const Matrix s = multiplication_by_s_matrix(radial_size);
  std::vector<Vec> monomial(np, Vec(n, 0.0));
  monomial[0][0] = 1.0;
  for (std::size_t m = 1; m < np; ++m) monomial[m] = matvec(s, monomial[m - 1]);

  std::vector<ModeFunction> basis;
  for (int l = 0; l <= l_max; ++l) {
    // Exact Gram matrix of { r^(l+2a) } in L2 of the disk.
    const double c_l = angular_factor(l);
    Matrix gram(np, np);
    for (std::size_t a = 0; a < np; ++a)
      for (std::size_t b = 0; b < np; ++b)
        gram(a, b) = c_l / (2.0 * l + 2.0 * static_cast<double>(a + b) + 2.0);
    auto gram_dot = [&](const Vec& x, const Vec& y) {
      double acc = 0.0;
      for (std::size_t a = 0; a < np; ++a)
        for (std::size_t b = 0; b < np; ++b) acc += x[a] * gram(a, b) * y[b];
      return acc;
    };

    std::vector<Vec> alpha;  // monomial coordinates of the orthonormal family
    for (std::size_t m = 0; m < np; ++m) {
      Vec cur(np, 0.0);
      cur[m] = 1.0;
      for (const Vec& prev : alpha) {
        const double proj = gram_dot(cur, prev);
        for (std::size_t a = 0; a < np; ++a) cur[a] -= proj * prev[a];
      }
      const double nrm = std::sqrt(gram_dot(cur, cur));
      for (std::size_t a = 0; a < np; ++a) cur[a] /= nrm;
      alpha.push_back(std::move(cur));
    }

    for (int harmonic = 0; harmonic < (l == 0 ? 1 : 2); ++harmonic)
      for (std::size_t m = 0; m < np; ++m) {
        ModeFunction f;
        f.l = l;
        f.harmonic = harmonic;
        f.coeffs.assign(n, 0.0);
        for (std::size_t a = 0; a < np; ++a)
          for (std::size_t k = 0; k < n; ++k) f.coeffs[k] += alpha[m][a] * monomial[a][k];
        basis.push_back(std::move(f));
      }
  }
  return basis;
}

namespace detail {

inline ModeSpectrum solve_disk_mode(const DiskProblem& problem, int l) {
  const DiskModeAssembly assembly = assemble_disk_mode(problem, l);
  const EigenDecomposition reduced = sym_generalized_eig(assembly.pair);

  ModeSpectrum mode;
  mode.l = l;
  mode.eigenvalues = reduced.values;
  // Lift to full radial coordinates (identity for the free variant) and
  // re-apply the sign convention, which the lift may have flipped.
  mode.eigenvectors = matmul(assembly.trial_basis, reduced.vectors);
  for (std::size_t c = 0; c < mode.eigenvectors.cols(); ++c) {
    double sign = 1.0;
    for (std::size_t i = 0; i < mode.eigenvectors.rows(); ++i) {
      const double v = mode.eigenvectors(i, c);
      if (std::abs(v) > 1e-12) {
        sign = v > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    if (sign < 0.0)
      for (std::size_t i = 0; i < mode.eigenvectors.rows(); ++i)
        mode.eigenvectors(i, c) = -mode.eigenvectors(i, c);
  }

  const double threshold = null_threshold();
  int nulls = 0;
  for (double v : mode.eigenvalues) {
    if (v < -threshold)
      throw discretization_error("disk mode " + std::to_string(l) + ": eigenvalue " +
                                 std::to_string(v) + " below the negative tolerance");
    if (v < threshold) ++nulls;
  }
  const int expected = problem.variant == Variant::free ? problem.p : 0;
  if (nulls != expected)
    throw discretization_error(
        "disk mode " + std::to_string(l) + ": null space dimension " + std::to_string(nulls) +
        " != expected " + std::to_string(expected) +
        (problem.variant == Variant::free ? " (= p, the radial polyharmonic kernel)"
                                          : " (clamped problem is injective at zero)"));
  mode.null_dim = nulls;
  for (int i = 0; i < nulls; ++i) mode.eigenvalues[static_cast<std::size_t>(i)] = 0.0;
  return mode;
}

inline std::vector<MergedEntry> merge_modes(const std::vector<ModeSpectrum>& modes) {
  std::vector<MergedEntry> merged;
  for (const ModeSpectrum& mode : modes)
    for (std::size_t k = static_cast<std::size_t>(mode.null_dim); k < mode.eigenvalues.size();
         ++k) {
      const int copies = mode.l == 0 ? 1 : 2;
      for (int harmonic = 0; harmonic < copies; ++harmonic) {
        MergedEntry entry;
        entry.lambda = mode.eigenvalues[k];
        entry.l = mode.l;
        entry.index = static_cast<int>(k);
        entry.harmonic = harmonic;
        merged.push_back(entry);
      }
    }
  std::sort(merged.begin(), merged.end(), [](const MergedEntry& a, const MergedEntry& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    if (a.l != b.l) return a.l < b.l;
    if (a.index != b.index) return a.index < b.index;
    return a.harmonic < b.harmonic;
  });
  return merged;
}

}  // namespace detail

// Solve every angular mode (concurrently if threads > 1; results are
// identical for any thread count because modes are independent and the merge
// is a deterministic sequential reduction).
inline DiskSpectrum solve_disk_spectrum(const DiskProblem& problem, int threads = 1) {
  validate_disk_problem(problem);
  const int mode_count = problem.l_max + 1;
  std::vector<ModeSpectrum> modes(static_cast<std::size_t>(mode_count));

  const int workers = std::clamp(threads, 1, mode_count);
  if (workers <= 1) {
    for (int l = 0; l < mode_count; ++l)
      modes[static_cast<std::size_t>(l)] = detail::solve_disk_mode(problem, l);
  } else {
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(mode_count));
    std::atomic<int> next{0};
    auto work = [&]() {
      for (;;) {
        const int l = next.fetch_add(1);
        if (l >= mode_count) return;
        try {
          modes[static_cast<std::size_t>(l)] = detail::solve_disk_mode(problem, l);
        } catch (...) {
          failures[static_cast<std::size_t>(l)] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& failure : failures)
      if (failure) std::rethrow_exception(failure);
  }

  DiskSpectrum spectrum;
  spectrum.problem = problem;
  spectrum.modes = std::move(modes);
  spectrum.merged = detail::merge_modes(spectrum.modes);
  spectrum.null_basis =
      polyharmonic_null_basis(problem.p, problem.l_max, problem.radial_size);
  return spectrum;
}

// Evaluate a mode-l radial coefficient vector at radius r (value of the
// radial profile r^l * sum_k c_k B_k(r^2)).
inline double radial_eval(int l, const Vec& coeffs, double r) {
  const int n = static_cast<int>(coeffs.size());
  const double s = r * r;
  const auto val = shifted_basis_table(n - 1, 0, s)[0];
  double g = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) g += coeffs[k] * val[k];
  double rl = 1.0;
  for (int e = 0; e < l; ++e) rl *= r;
  return rl * g;
}

// L2(disk) inner product of two functions given as angular-component bundles.
// Components with different (l, harmonic) are exactly orthogonal (angular
// integration), so only matching pairs contribute, each through the mode's
// radial mass matrix.
inline double disk_inner_product(const std::vector<ModeFunction>& f,
                                 const std::vector<ModeFunction>& g) {
  std::map<std::pair<int, std::size_t>, Matrix> mass_cache;
  double acc = 0.0;
  for (const ModeFunction& fe : f)
    for (const ModeFunction& ge : g) {
      if (fe.l != ge.l || fe.harmonic != ge.harmonic) continue;
      if (fe.coeffs.size() != ge.coeffs.size())
        throw shape_error("disk_inner_product: mismatched radial sizes within mode " +
                          std::to_string(fe.l));
      const auto key = std::make_pair(fe.l, fe.coeffs.size());
      auto it = mass_cache.find(key);
      if (it == mass_cache.end())
        it = mass_cache
                 .emplace(key, radial_mass_matrix(fe.l, static_cast<int>(fe.coeffs.size())))
                 .first;
      acc += dot(fe.coeffs, matvec(it->second, ge.coeffs));
    }
  return acc;
}

// Coordinates of a bundle in the principal-axes frame of the spectrum:
// free coordinates against the orthonormal polyharmonic family, bound
// coordinates against the merged eigenfunctions (aligned with merged order).
inline EllipsoidCoords expand_in_eigenbasis(const std::vector<ModeFunction>& f,
                                            const DiskSpectrum& spectrum) {
  const auto n = static_cast<std::size_t>(spectrum.problem.radial_size);
  for (const ModeFunction& fe : f) {
    if (fe.l < 0 || fe.l > spectrum.problem.l_max)
      throw std::out_of_range("expand_in_eigenbasis: component mode " + std::to_string(fe.l) +
                              " beyond l_max = " + std::to_string(spectrum.problem.l_max));
    if (fe.harmonic != 0 && fe.harmonic != 1)
      throw shape_error("expand_in_eigenbasis: harmonic tag must be 0 (cos) or 1 (sin)");
    if (fe.l == 0 && fe.harmonic == 1)
      throw shape_error("expand_in_eigenbasis: the l = 0 mode has no sine harmonic");
    if (fe.coeffs.size() != n)
      throw shape_error("expand_in_eigenbasis: radial size mismatch in component of mode " +
                        std::to_string(fe.l));
  }

  std::map<int, Matrix> mass_cache;
  auto mass_for = [&](int l) -> const Matrix& {
    auto it = mass_cache.find(l);
    if (it == mass_cache.end())
      it = mass_cache.emplace(l, radial_mass_matrix(l, spectrum.problem.radial_size)).first;
    return it->second;
  };
  auto inner_against = [&](int l, int harmonic, const Vec& g) {
    double acc = 0.0;
    const Vec mg = matvec(mass_for(l), g);
    for (const ModeFunction& fe : f)
      if (fe.l == l && fe.harmonic == harmonic) acc += dot(fe.coeffs, mg);
    return acc;
  };

  EllipsoidCoords coords;
  coords.free_coeffs.reserve(spectrum.null_basis.size());
  for (const ModeFunction& nb : spectrum.null_basis)
    coords.free_coeffs.push_back(inner_against(nb.l, nb.harmonic, nb.coeffs));

  coords.bound_coeffs.reserve(spectrum.merged.size());
  coords.eigenvalues.reserve(spectrum.merged.size());
  for (const MergedEntry& entry : spectrum.merged) {
    const ModeSpectrum& mode = spectrum.modes[static_cast<std::size_t>(entry.l)];
    Vec column(n);
    for (std::size_t i = 0; i < n; ++i)
      column[i] = mode.eigenvectors(i, static_cast<std::size_t>(entry.index));
    coords.bound_coeffs.push_back(inner_against(entry.l, entry.harmonic, column));
    coords.eigenvalues.push_back(entry.lambda);
  }
  return coords;
}

// Resolved prefix of a computed spectrum: how many of the lowest positive
// eigenpairs a polynomial trial space of the given size actually resolves.
// The rule is the same one the 1D asymptotics report uses - roughly the lowest
// third of the modes a degree budget of `size` can represent, after spending
// p of them on the kernel. Beyond this prefix the discrete eigenfunctions
// saturate the basis, so applying the Laplacian to them aliases instead of
// differentiating and no verified construction is possible at any size.
inline std::size_t resolved_mode_count(int p, int size) {
  const int trust = size / 3 - p;
  return trust > 0 ? static_cast<std::size_t>(trust) : 0;
}

// Map the resolved clamped eigenfunctions phi to psi = Laplacian^p phi. The
// psi are eigenfunctions of the free problem with the same eigenvalues; three
// postconditions are verified per function before the mapped spectrum is
// returned:
//   (a) eigen-residual in the free pencil, relative to (|K|_F + lambda |M|_F) |psi|;
//   (b) L2(disk) orthogonality to the polyharmonic kernel of the same mode;
//   (c) the norm identity |psi| = sqrt(lambda) |phi|, relative on the norm scale.
// Only the resolved prefix of each mode (resolved_mode_count) is mapped:
// checks (b) and (c) hold discretely for every index, but the eigen-residual
// (a) is a property the discrete pair only inherits from the continuum while
// phi is resolved, and the top of the discrete spectrum never is.
inline DiskSpectrum clamped_to_free_map(const DiskSpectrum& clamped, int p) {
  if (clamped.problem.variant != Variant::clamped)
    throw shape_error("clamped_to_free_map: input spectrum is not the clamped variant");
  if (p != clamped.problem.p)
    throw size_error("clamped_to_free_map: order " + std::to_string(p) +
                     " disagrees with the spectrum's order " +
                     std::to_string(clamped.problem.p));
  const auto n = static_cast<std::size_t>(clamped.problem.radial_size);

  DiskSpectrum mapped;
  mapped.problem = clamped.problem;
  mapped.problem.variant = Variant::free;
  mapped.null_basis = clamped.null_basis;

  for (const ModeSpectrum& mode : clamped.modes) {
    if (mode.eigenvectors.rows() != n ||
        mode.eigenvectors.cols() != mode.eigenvalues.size())
      throw shape_error("clamped_to_free_map: malformed mode " + std::to_string(mode.l));
    const Matrix a = radial_laplacian_matrix(mode.l, clamped.problem.radial_size);
    const Matrix m = radial_mass_matrix(mode.l, clamped.problem.radial_size);
    const Matrix ap = matrix_power(a, static_cast<unsigned>(p));
    const Matrix k = symmetrize(matmul(transpose(ap), matmul(m, ap)));
    const double k_scale = frobenius_norm(k);
    const double m_scale = frobenius_norm(m);

    std::vector<Vec> kernel;  // normalized kernel functions of this mode
    for (const ModeFunction& nb : clamped.null_basis)
      if (nb.l == mode.l && nb.harmonic == 0) kernel.push_back(nb.coeffs);

    const std::size_t count = std::min(
        mode.eigenvalues.size(),
        resolved_mode_count(p, clamped.problem.radial_size));
    ModeSpectrum out;
    out.l = mode.l;
    out.null_dim = 0;
    out.eigenvalues.assign(mode.eigenvalues.begin(),
                           mode.eigenvalues.begin() + static_cast<std::ptrdiff_t>(count));
    out.eigenvectors = Matrix(n, count);

    for (std::size_t c = 0; c < count; ++c) {
      const double lambda = mode.eigenvalues[c];
      Vec phi(n);
      for (std::size_t i = 0; i < n; ++i) phi[i] = mode.eigenvectors(i, c);
      const Vec psi = matvec(ap, phi);
      const std::string tag =
          " at (l = " + std::to_string(mode.l) + ", k = " + std::to_string(c + 1) + ")";

      const Vec kpsi = matvec(k, psi);
      const Vec mpsi = matvec(m, psi);
      Vec residual(n);
      for (std::size_t i = 0; i < n; ++i) residual[i] = kpsi[i] - lambda * mpsi[i];
      const double scale = (k_scale + lambda * m_scale) * norm2(psi);
      if (norm2(residual) > 1e-6 * scale)
        throw construction_error("clamped_to_free_map: eigen-residual check failed" + tag);

      const double psi_norm2 = dot(psi, mpsi);
      for (const Vec& z : kernel)
        if (std::abs(dot(z, mpsi)) > 1e-8 * std::sqrt(psi_norm2))
          throw construction_error("clamped_to_free_map: kernel orthogonality check failed" +
                                   tag);

      const double phi_norm2 = dot(phi, matvec(m, phi));
      const double psi_norm = std::sqrt(psi_norm2);
      const double target_norm = std::sqrt(lambda * phi_norm2);
      if (std::abs(psi_norm - target_norm) > 1e-6 * std::max(target_norm, 1e-300))
        throw construction_error("clamped_to_free_map: norm identity check failed" + tag);

      for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, c) = psi[i];
    }
    mapped.modes.push_back(std::move(out));
  }
  mapped.merged = detail::merge_modes(mapped.modes);
  return mapped;
}

// Both sides of the polyharmonic Green identity for a pair of mode-l
// functions (outward normal): the interior integral of
// (Laplacian^p u) v - u (Laplacian^p v) against the boundary sum
// sum_j [ d/dr(Laplacian^(p-1-j) u) (Laplacian^j v) - (Laplacian^(p-1-j) u) d/dr(Laplacian^j v) ]
// at r = 1, times the angular factor. Exact for every pair in the trial
// family, so the residual is pure roundoff.
struct GreenReport {
  double interior = 0.0;
  double boundary = 0.0;
  double residual = 0.0;  // |interior - boundary| / max(|interior|, |boundary|, 1)
};

inline GreenReport green_identity_check(int p, int l, const Vec& u, const Vec& v) {
  if (p < 1 || p > 4)
    throw size_error("green_identity_check: order p = " + std::to_string(p) +
                     " outside [1, 4]");
  if (u.size() != v.size() || u.empty())
    throw shape_error("green_identity_check: coefficient vectors must share a nonzero size");
  const int radial_size = static_cast<int>(u.size());
  const Matrix a = radial_laplacian_matrix(l, radial_size);
  const Matrix m = radial_mass_matrix(l, radial_size);
  const Vec val = boundary_value_functional(radial_size);
  const Vec der = boundary_derivative_functional(l, radial_size);

  // Iterated Laplacians of both arguments: powers[j] = Laplacian^j applied.
  std::vector<Vec> lap_u(static_cast<std::size_t>(p) + 1), lap_v(static_cast<std::size_t>(p) + 1);
  lap_u[0] = u;
  lap_v[0] = v;
  for (int j = 1; j <= p; ++j) {
    lap_u[static_cast<std::size_t>(j)] = matvec(a, lap_u[static_cast<std::size_t>(j - 1)]);
    lap_v[static_cast<std::size_t>(j)] = matvec(a, lap_v[static_cast<std::size_t>(j - 1)]);
  }

  GreenReport report;
  report.interior = dot(lap_u[static_cast<std::size_t>(p)], matvec(m, v)) -
                    dot(u, matvec(m, lap_v[static_cast<std::size_t>(p)]));
  double boundary = 0.0;
  for (int j = 0; j < p; ++j) {
    const Vec& uu = lap_u[static_cast<std::size_t>(p - 1 - j)];
    const Vec& vv = lap_v[static_cast<std::size_t>(j)];
    boundary += dot(der, uu) * dot(val, vv) - dot(val, uu) * dot(der, vv);
  }
  report.boundary = angular_factor(l) * boundary;
  report.residual = std::abs(report.interior - report.boundary) /
                    std::max({std::abs(report.interior), std::abs(report.boundary), 1.0});
  return report;
}

}  // namespace polywidth

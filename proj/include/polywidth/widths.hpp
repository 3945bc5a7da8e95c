#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <polywidth/disk.hpp>
#include <polywidth/eig.hpp>
#include <polywidth/errors.hpp>
#include <polywidth/matrix.hpp>
#include <polywidth/rng.hpp>

namespace polywidth {

// Finite-coordinate model of the smoothness class in its principal-axes
// frame: a cylinder along n_free unconstrained axes crossed with the
// ellipsoid sum_j lambda_j f_j^2 <= 1 on the K bound axes. Coordinates are
// ordered [cylinder axes | bound axes], bound axes aligned with lambdas.
struct TruncatedEllipsoid {
  Vec lambdas;             // strictly positive, ascending, length K >= 1
  std::size_t n_free = 0;  // retained cylinder (zero-eigenvalue) axes
};

inline void validate_ellipsoid(const TruncatedEllipsoid& ell) {
  if (ell.lambdas.empty())
    throw size_error("truncated ellipsoid: needs at least one bound axis");
  for (std::size_t j = 0; j < ell.lambdas.size(); ++j) {
    if (!(ell.lambdas[j] > 0.0))
      throw size_error("truncated ellipsoid: eigenvalue at position " + std::to_string(j) +
                       " is not strictly positive");
    if (j > 0 && ell.lambdas[j] < ell.lambdas[j - 1])
      throw size_error("truncated ellipsoid: eigenvalues not ascending at position " +
                       std::to_string(j));
  }
}

inline std::size_t ambient_dim(const TruncatedEllipsoid& ell) {
  return ell.n_free + ell.lambdas.size();
}

// Candidate approximation subspace: an orthonormal column basis in the
// ambient coordinate space, plus a label for report rows.
struct Subspace {
  Matrix basis;    // rows = ambient coordinates, columns = subspace dimension
  std::string id;  // witness label used in width reports
};

// Orthonormality is a precondition of the projector formula below, so every
// distance computation re-checks it (cheap at desk scale).
inline void validate_subspace(const Subspace& sub) {
  const Matrix& b = sub.basis;
  for (std::size_t a = 0; a < b.cols(); ++a)
    for (std::size_t c = a; c < b.cols(); ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < b.rows(); ++r) acc += b(r, a) * b(r, c);
      const double target = a == c ? 1.0 : 0.0;
      if (std::abs(acc - target) > 1e-12)
        throw shape_error("subspace basis is not orthonormal: (B^T B)(" + std::to_string(a) +
                          ", " + std::to_string(c) + ") = " + std::to_string(acc));
    }
}

// Distance from a point to the subspace: the orthogonal-projection residual
// ||(I - B B^T) y||, evaluated by sequential coefficient subtraction (exact
// for an orthonormal basis up to roundoff).
inline double dist_to_subspace(const Vec& y, const Subspace& sub) {
  if (y.size() != sub.basis.rows())
    throw shape_error("dist_to_subspace: point dimension " + std::to_string(y.size()) +
                      " != subspace ambient dimension " + std::to_string(sub.basis.rows()));
  validate_subspace(sub);
  Vec residual = y;
  for (std::size_t c = 0; c < sub.basis.cols(); ++c) {
    double coef = 0.0;
    for (std::size_t r = 0; r < residual.size(); ++r) coef += sub.basis(r, c) * residual[r];
    for (std::size_t r = 0; r < residual.size(); ++r) residual[r] -= coef * sub.basis(r, c);
  }
  return norm2(residual);
}

// Largest distance from the class to the subspace (the quantity the widths
// minimize). Structural rule first: the class is unbounded along every
// cylinder axis, so a cylinder axis whose unit vector projects outside
// span(B) by more than 1e-9 makes the supremum infinite -- this is the only
// source of infinity here, never overflow. Otherwise the cylinder
// coordinates contribute nothing and the supremum over the bound ellipsoid
// is the largest eigenvalue mu of the pencil P x = mu Lambda x, where P is
// the bound-axes block of the projector I - B B^T (idempotent and symmetric,
// so the residual norm squared IS the quadratic form f^T P f) and
// Lambda = diag(lambda); the distance is sqrt(mu_max).
inline double dist_subspace_to_ellipsoid(const Subspace& sub, const TruncatedEllipsoid& ell) {
  validate_ellipsoid(ell);
  validate_subspace(sub);
  const std::size_t k = ell.lambdas.size();
  const std::size_t dim = ambient_dim(ell);
  if (sub.basis.rows() != dim)
    throw shape_error("dist_subspace_to_ellipsoid: subspace ambient dimension " +
                      std::to_string(sub.basis.rows()) + " != coordinate dimension " +
                      std::to_string(dim));

  for (std::size_t axis = 0; axis < ell.n_free; ++axis) {
    Vec e(dim, 0.0);
    e[axis] = 1.0;
    if (dist_to_subspace(e, sub) > 1e-9) return std::numeric_limits<double>::infinity();
  }

  GalerkinPair pencil;
  pencil.dim = k;
  pencil.stiffness = Matrix(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double acc = i == j ? 1.0 : 0.0;
      for (std::size_t c = 0; c < sub.basis.cols(); ++c)
        acc -= sub.basis(ell.n_free + i, c) * sub.basis(ell.n_free + j, c);
      pencil.stiffness(i, j) = acc;
    }
  pencil.stiffness = symmetrize(pencil.stiffness);
  pencil.mass = Matrix(k, k);
  for (std::size_t i = 0; i < k; ++i) pencil.mass(i, i) = ell.lambdas[i];

  const EigenDecomposition eig = sym_generalized_eig(pencil);
  const double mu = eig.values.back();
  return mu > 0.0 ? std::sqrt(mu) : 0.0;
}

// Width of the class over candidates that contain the cylinder: infinite
// while the candidate cannot cover the cylinder axes, 1/sqrt(lambda_{N+1})
// once it spans them plus the first N bound axes. N counts bound-axes
// dimensions only; the cylinder axes are always included on top.
inline double width_formula(const TruncatedEllipsoid& ell, std::size_t n) {
  validate_ellipsoid(ell);
  if (n >= ell.lambdas.size())
    throw std::out_of_range("width_formula: N beyond the truncated spectrum");
  return 1.0 / std::sqrt(ell.lambdas[n]);
}

// The axis-aligned candidate: all cylinder axes plus the first n bound axes.
inline Subspace extremal_subspace(const TruncatedEllipsoid& ell, std::size_t n) {
  validate_ellipsoid(ell);
  if (n > ell.lambdas.size())
    throw size_error("extremal_subspace: more bound axes requested than the truncation holds");
  Subspace sub;
  sub.id = "axes";
  sub.basis = Matrix(ambient_dim(ell), ell.n_free + n);
  for (std::size_t c = 0; c < sub.basis.cols(); ++c) sub.basis(c, c) = 1.0;
  return sub;
}

struct WidthRow {
  std::size_t n = 0;    // N: bound-axes dimension beyond the cylinder
  double value = 0.0;   // width estimate
  std::string method;   // "formula" or "search"
  std::string witness;  // subspace id the value belongs to
};

struct WidthReport {
  std::vector<WidthRow> rows;
  double formula_value = 0.0;
  double searched_min = 0.0;
  std::string argmin_id;
  std::string note;
};

namespace detail {

// Orthonormalize the columns of a (tall) matrix in place by modified
// Gram-Schmidt, two passes per column. Gaussian draws are independent with
// probability one; a degenerate draw is rejected loudly rather than patched.
inline void orthonormalize_columns(Matrix& m) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t prev = 0; prev < c; ++prev) {
        double coef = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) coef += m(r, prev) * m(r, c);
        for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) -= coef * m(r, prev);
      }
    double nrm = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) nrm += m(r, c) * m(r, c);
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12)
      throw shape_error("orthonormalize_columns: column " + std::to_string(c) +
                        " is linearly dependent on the previous ones");
    for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) /= nrm;
  }
}

}  // namespace detail

// A seeded random candidate: an N-dimensional orthonormalized-Gaussian
// subspace of the bound-axes space, augmented with all cylinder axes (no
// claim of exact Haar measure; the draw is reproducible for a fixed seed).
inline Subspace random_candidate_subspace(const TruncatedEllipsoid& ell, std::size_t n,
                                          Rng& rng, const std::string& id) {
  validate_ellipsoid(ell);
  const std::size_t k = ell.lambdas.size();
  if (n > k)
    throw size_error("random_candidate_subspace: dimension exceeds the bound-axes space");
  Matrix g(k, n);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < n; ++c) g(r, c) = rng.gaussian();
  detail::orthonormalize_columns(g);

  Subspace sub;
  sub.id = id;
  sub.basis = Matrix(ambient_dim(ell), ell.n_free + n);
  for (std::size_t c = 0; c < ell.n_free; ++c) sub.basis(c, c) = 1.0;
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < n; ++c) sub.basis(ell.n_free + r, ell.n_free + c) = g(r, c);
  return sub;
}

// Randomized confirmation that the axis-aligned candidate is extremal: every
// seeded random candidate must stay at distance >= 1/sqrt(lambda_{N+1}) - 1e-9
// (a violation is reported as a counterexample and fails the experiment), and
// the axis-aligned candidate must attain the formula value to 1e-9. The
// report carries one formula row, one search row for the axis-aligned
// candidate, and one search row for the best random trial.
inline WidthReport extremality_experiment(const TruncatedEllipsoid& ell, std::size_t n,
                                          std::size_t trials, std::uint64_t seed) {
  validate_ellipsoid(ell);
  if (n >= ell.lambdas.size())
    throw size_error("extremality_experiment: N must be smaller than the truncation length");
  if (trials < 1) throw size_error("extremality_experiment: needs at least one trial");

  WidthReport report;
  report.note =
      "search scope: random linear subspaces plus the cylinder axes; "
      "minimization over operator coefficients is not searchable and is "
      "probed separately by the constant-scaling check";
  report.formula_value = width_formula(ell, n);

  const Subspace axes = extremal_subspace(ell, n);
  const double axes_dist = dist_subspace_to_ellipsoid(axes, ell);
  report.rows.push_back({n, report.formula_value, "formula", axes.id});
  report.rows.push_back({n, axes_dist, "search", axes.id});
  if (std::abs(axes_dist - report.formula_value) > 1e-9)
    throw counterexample_error(
        "extremality_experiment: the axis-aligned candidate does not attain the width "
        "formula (distance " +
        std::to_string(axes_dist) + ", formula " + std::to_string(report.formula_value) + ")");

  Rng rng(seed);
  double best = axes_dist;
  std::string best_id = axes.id;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::string id = "trial-" + std::to_string(t);
    const Subspace sub = random_candidate_subspace(ell, n, rng, id);
    const double d = dist_subspace_to_ellipsoid(sub, ell);
    if (d < report.formula_value - 1e-9)
      throw counterexample_error("extremality_experiment: " + id + " reached distance " +
                                 std::to_string(d) + " below the width formula " +
                                 std::to_string(report.formula_value));
    if (d < best) {
      best = d;
      best_id = id;
    }
  }
  report.searched_min = best;
  report.argmin_id = best_id;
  report.rows.push_back({n, best, "search", best_id});
  return report;
}

struct DemoRow {
  double t = 0.0;
  double dist = 0.0;
};

struct UnboundedDemo {
  int p = 0;
  int m_low = 0;  // order of the too-small smoothness class
  int l = 0;      // angular mode carrying the witness
  double witness_residual = 0.0;
  std::vector<DemoRow> table;
  double slope = 0.0;      // least-squares affine fit of dist over t
  double intercept = 0.0;  // expected ~0
  std::string conclusion;
};

// Demonstration that a lower-order candidate misses the class by an
// unbounded amount. The witness is the (M+1)-th radial kernel monomial
// r^(l+2M) of mode l: it is annihilated by the order-p operator, hence lies
// in the class at every scaling t, but it is NOT in the order-M kernel. The
// proxy candidate is the order-M kernel of the same mode plus a few of the
// lowest eigenfunctions, orthonormalized in the L2(disk) inner product of
// the mode. The table records dist(t * witness, proxy); the distances grow
// linearly in t (reported as a fitted slope and intercept, not a claimed
// infinite value), which is the desk-scale form of the unboundedness
// statement. The eigenfunction part of the proxy never helps: positive-mode
// eigenfunctions are L2-orthogonal to the whole kernel, so the distance is
// governed by the kernel gap alone.
inline UnboundedDemo unbounded_distance_demo(const DiskSpectrum& spectrum, int m_low, int l,
                                             const Vec& t_values,
                                             std::size_t n_eigenfunctions = 3) {
  if (spectrum.problem.variant != Variant::free)
    throw shape_error("unbounded_distance_demo: needs the free (unconstrained) spectrum");
  const int p = spectrum.problem.p;
  if (m_low < 0 || m_low >= p)
    throw size_error("unbounded_distance_demo: the low order M = " + std::to_string(m_low) +
                     " must satisfy 0 <= M < p = " + std::to_string(p));
  if (l < 0 || l > spectrum.problem.l_max)
    throw size_error("unbounded_distance_demo: mode " + std::to_string(l) +
                     " outside [0, l_max]");
  if (t_values.size() < 2)
    throw size_error("unbounded_distance_demo: needs at least two scalings for the fit");
  const std::size_t nrad = static_cast<std::size_t>(spectrum.problem.radial_size);

  const Matrix mass = radial_mass_matrix(l, spectrum.problem.radial_size);
  auto m_dot = [&](const Vec& x, const Vec& y) { return dot(x, matvec(mass, y)); };

  // Radial coefficients of the monomials s^m; the witness is s^M.
  const Matrix s = multiplication_by_s_matrix(spectrum.problem.radial_size);
  std::vector<Vec> monomial;
  monomial.emplace_back(nrad, 0.0);
  monomial.back()[0] = 1.0;
  for (int m = 1; m <= m_low; ++m) monomial.push_back(matvec(s, monomial.back()));
  const Vec witness = monomial.back();

  // Proxy family: order-M kernel monomials s^0 .. s^(M-1), then the lowest
  // positive eigenfunctions of the mode.
  std::vector<Vec> proxy(monomial.begin(), monomial.end() - 1);
  const ModeSpectrum& mode = spectrum.modes[static_cast<std::size_t>(l)];
  for (std::size_t j = 0; j < n_eigenfunctions; ++j) {
    const std::size_t idx = static_cast<std::size_t>(mode.null_dim) + j;
    if (idx >= mode.eigenvalues.size())
      throw size_error("unbounded_distance_demo: mode " + std::to_string(l) +
                       " has fewer than " + std::to_string(n_eigenfunctions) +
                       " positive eigenfunctions");
    Vec column(nrad);
    for (std::size_t i = 0; i < nrad; ++i)
      column[i] = mode.eigenvectors(i, idx);
    proxy.push_back(std::move(column));
  }

  // Orthonormalize the proxy in the mass inner product (modified
  // Gram-Schmidt, two passes).
  std::vector<Vec> q;
  for (Vec v : proxy) {
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& prev : q) {
        const double coef = m_dot(prev, v);
        for (std::size_t i = 0; i < nrad; ++i) v[i] -= coef * prev[i];
      }
    const double nrm = std::sqrt(m_dot(v, v));
    if (nrm < 1e-12)
      throw shape_error("unbounded_distance_demo: proxy family is linearly dependent");
    for (double& x : v) x /= nrm;
    q.push_back(std::move(v));
  }

  auto residual_of = [&](const Vec& y) {
    Vec r = y;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& prev : q) {
        const double coef = m_dot(prev, r);
        for (std::size_t i = 0; i < nrad; ++i) r[i] -= coef * prev[i];
      }
    return r;
  };

  UnboundedDemo demo;
  demo.p = p;
  demo.m_low = m_low;
  demo.l = l;
  const Vec res = residual_of(witness);
  demo.witness_residual = std::sqrt(m_dot(res, res));
  if (demo.witness_residual < 1e-10)
    throw witness_error("unbounded_distance_demo: the witness lies inside the proxy "
                        "subspace (residual " +
                        std::to_string(demo.witness_residual) + ")");

  for (double t : t_values) {
    Vec scaled(nrad);
    for (std::size_t i = 0; i < nrad; ++i) scaled[i] = t * witness[i];
    const Vec r = residual_of(scaled);
    demo.table.push_back({t, std::sqrt(m_dot(r, r))});
  }

  // Least-squares affine fit dist = slope * t + intercept.
  const double count = static_cast<double>(demo.table.size());
  double st = 0.0, sd = 0.0, stt = 0.0, std_ = 0.0;
  for (const DemoRow& row : demo.table) {
    st += row.t;
    sd += row.dist;
    stt += row.t * row.t;
    std_ += row.t * row.dist;
  }
  const double denom = count * stt - st * st;
  if (std::abs(denom) < 1e-30)
    throw size_error("unbounded_distance_demo: scaling values do not determine a line");
  demo.slope = (count * std_ - st * sd) / denom;
  demo.intercept = (sd * stt - st * std_) / denom;
  demo.conclusion =
      "distance grows linearly in the scaling (positive fitted slope), so its "
      "supremum over the ray is infinite; only the fixed proxy candidate is "
      "searched, not all candidates of the lower order";
  return demo;
}

namespace detail {

// Tiny dense bivariate polynomial for the symbolic derivative table:
// coefficient of x1^a * x2^b stored at c[a][b], degrees below 4.
struct Poly2 {
  double c[4][4] = {};
};

inline Poly2 d_x1(const Poly2& u) {
  Poly2 d;
  for (int a = 0; a + 1 < 4; ++a)
    for (int b = 0; b < 4; ++b) d.c[a][b] = (a + 1) * u.c[a + 1][b];
  return d;
}

inline Poly2 d_x2(const Poly2& u) {
  Poly2 d;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b + 1 < 4; ++b) d.c[a][b] = (b + 1) * u.c[a][b + 1];
  return d;
}

inline bool poly_is_zero(const Poly2& u) {
  for (const auto& row : u.c)
    for (double v : row)
      if (v != 0.0) return false;
  return true;
}

// Cofactor-expansion determinant; intended for tiny matrices only.
inline double small_determinant(const Matrix& a) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw shape_error("small_determinant: matrix is not square");
  if (n == 1) return a(0, 0);
  double det = 0.0;
  double sign = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    Matrix minor(n - 1, n - 1);
    for (std::size_t i = 1; i < n; ++i) {
      std::size_t mc = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == c) continue;
        minor(i - 1, mc++) = a(i, j);
      }
    }
    det += sign * a(0, c) * small_determinant(minor);
    sign = -sign;
  }
  return det;
}

}  // namespace detail

struct JacobiCheck {
  Matrix jacobian;    // rows: the five harmonic polynomials; columns below
  Matrix reference;   // the expected derivative table
  double determinant = 0.0;
  bool matches_reference = false;
  bool all_harmonic = false;
  bool nondegenerate = false;
};

// Derivative table of the five harmonic polynomials 1, x1, x2, x1^2 - x2^2,
// x1*x2 at the origin, with columns (u_x1x1, u_x1x2, u_x1, u_x2, u). The
// table is built by symbolic differentiation, compared entry-for-entry with
// the expected constant matrix, its determinant computed by cofactor
// expansion (|det| = 2 certifies nondegeneracy), and each polynomial is
// verified harmonic symbolically. All entries are small integers, so the
// comparisons are exact. A sixth function is sometimes expected in this
// family by off-by-one miscounting; the checked family is exactly the five
// functions listed, which already span the required jet components.
inline JacobiCheck jacobi_matrix_check() {
  using detail::Poly2;
  Poly2 u[5];
  u[0].c[0][0] = 1.0;                      // 1
  u[1].c[1][0] = 1.0;                      // x1
  u[2].c[0][1] = 1.0;                      // x2
  u[3].c[2][0] = 1.0;
  u[3].c[0][2] = -1.0;                     // x1^2 - x2^2
  u[4].c[1][1] = 1.0;                      // x1 * x2

  JacobiCheck check;
  check.reference = Matrix(5, 5);
  const double expected[5][5] = {{0, 0, 0, 0, 1},
                                 {0, 0, 1, 0, 0},
                                 {0, 0, 0, 1, 0},
                                 {2, 0, 0, 0, 0},
                                 {0, 1, 0, 0, 0}};
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) check.reference(i, j) = expected[i][j];

  check.jacobian = Matrix(5, 5);
  check.all_harmonic = true;
  for (std::size_t i = 0; i < 5; ++i) {
    const Poly2 dx = detail::d_x1(u[i]);
    const Poly2 dy = detail::d_x2(u[i]);
    const Poly2 dxx = detail::d_x1(dx);
    const Poly2 dxy = detail::d_x2(dx);
    const Poly2 dyy = detail::d_x2(dy);
    check.jacobian(i, 0) = dxx.c[0][0];
    check.jacobian(i, 1) = dxy.c[0][0];
    check.jacobian(i, 2) = dx.c[0][0];
    check.jacobian(i, 3) = dy.c[0][0];
    check.jacobian(i, 4) = u[i].c[0][0];
    Poly2 laplacian;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) laplacian.c[a][b] = dxx.c[a][b] + dyy.c[a][b];
    if (!detail::poly_is_zero(laplacian)) check.all_harmonic = false;
  }

  check.matches_reference = check.jacobian == check.reference;
  check.determinant = detail::small_determinant(check.jacobian);
  check.nondegenerate = std::abs(check.determinant) > 0.5;
  return check;
}

struct PerturbationProbe {
  double c = 0.0;
  std::size_t n = 0;
  double base_width = 0.0;
  double scaled_width = 0.0;
  double expected_scaled = 0.0;  // base_width / c
  bool kernel_unchanged = false;
  bool subspace_invariant = false;
};

// Probe of the constant-coefficient operator family: multiplying the
// operator by c > 0 multiplies every constraint eigenvalue by c^2, leaves
// the kernel (the cylinder axes) untouched, and rescales every width by 1/c
// -- while the minimizing subspace stays the same axis-aligned candidate,
// because a uniform scaling preserves the eigenvalue order. Only this
// constant family is probed; spatially varying coefficients are out of
// scope.
inline PerturbationProbe diagonal_perturbation_probe(const TruncatedEllipsoid& ell,
                                                     std::size_t n, double c) {
  validate_ellipsoid(ell);
  if (!(c > 0.0))
    throw size_error("diagonal_perturbation_probe: the scale must be positive");
  if (n >= ell.lambdas.size())
    throw size_error("diagonal_perturbation_probe: N must be smaller than the truncation");

  TruncatedEllipsoid scaled = ell;
  for (double& v : scaled.lambdas) v *= c * c;

  const Subspace base_axes = extremal_subspace(ell, n);
  const Subspace scaled_axes = extremal_subspace(scaled, n);

  PerturbationProbe probe;
  probe.c = c;
  probe.n = n;
  probe.base_width = dist_subspace_to_ellipsoid(base_axes, ell);
  probe.scaled_width = dist_subspace_to_ellipsoid(scaled_axes, scaled);
  probe.expected_scaled = probe.base_width / c;
  probe.kernel_unchanged = scaled.n_free == ell.n_free;
  probe.subspace_invariant = base_axes.basis == scaled_axes.basis;
  return probe;
}

}  // namespace polywidth

// Tests for the width machinery: point-to-subspace distances against
// grid-search oracles, class-to-subspace distances against a brute-force
// boundary maximization, the width formula and its extremality experiment,
// the unbounded-distance demonstration, the derivative-table check, and the
// constant-scaling probe.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <polywidth/rng.hpp>
#include <polywidth/widths.hpp>

using namespace polywidth;

namespace {

Subspace axis_subspace(std::size_t dim, const std::vector<std::size_t>& axes,
                       const std::string& id = "axis-picked") {
  Subspace sub;
  sub.id = id;
  sub.basis = Matrix(dim, axes.size());
  for (std::size_t c = 0; c < axes.size(); ++c) sub.basis(axes[c], c) = 1.0;
  return sub;
}

}  // namespace

TEST_CASE("ellipsoid validation rejects malformed coordinate models") {
  CHECK_THROWS_AS(validate_ellipsoid({{}, 2}), size_error);
  CHECK_THROWS_AS(validate_ellipsoid({{1.0, -2.0}, 0}), size_error);
  CHECK_THROWS_AS(validate_ellipsoid({{1.0, 0.0}, 0}), size_error);
  CHECK_THROWS_AS(validate_ellipsoid({{4.0, 1.0}, 0}), size_error);
  CHECK_NOTHROW(validate_ellipsoid({{1.0, 1.0, 2.0}, 3}));
}

TEST_CASE("distance to a subspace is the orthogonal projection residual") {
  SECTION("a member of the subspace has distance zero") {
    Subspace sub = axis_subspace(3, {0, 2});
    CHECK(dist_to_subspace({2.5, 0.0, -1.0}, sub) == 0.0);
  }

  SECTION("coordinate projection in the plane") {
    Subspace sub = axis_subspace(2, {0});
    CHECK(dist_to_subspace({3.0, 4.0}, sub) == 4.0);
  }

  SECTION("grid-search oracle in the plane, one basis column") {
    Rng rng(11u);
    for (int trial = 0; trial < 3; ++trial) {
      double b0 = rng.gaussian();
      double b1 = rng.gaussian();
      const double nrm = std::sqrt(b0 * b0 + b1 * b1);
      b0 /= nrm;
      b1 /= nrm;
      Subspace sub;
      sub.id = "line";
      sub.basis = Matrix(2, 1);
      sub.basis(0, 0) = b0;
      sub.basis(1, 0) = b1;
      const Vec y = {2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0};

      double best = std::numeric_limits<double>::infinity();
      for (int i = -400000; i <= 400000; ++i) {
        const double c = 1e-5 * i;
        const double r0 = y[0] - c * b0;
        const double r1 = y[1] - c * b1;
        best = std::min(best, std::sqrt(r0 * r0 + r1 * r1));
      }
      CHECK(std::abs(dist_to_subspace(y, sub) - best) < 1e-6);
    }
  }

  SECTION("grid-search oracle in three dimensions, two basis columns") {
    Rng rng(12u);
    Matrix g(3, 2);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 2; ++c) g(r, c) = rng.gaussian();
    detail::orthonormalize_columns(g);
    Subspace sub{g, "plane"};
    const Vec y = {2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0,
                   2.0 * rng.uniform01() - 1.0};

    double best = std::numeric_limits<double>::infinity();
    for (int i = -2000; i <= 2000; ++i)
      for (int j = -2000; j <= 2000; ++j) {
        const double c0 = 1e-3 * i;
        const double c1 = 1e-3 * j;
        double acc = 0.0;
        for (std::size_t r = 0; r < 3; ++r) {
          const double res = y[r] - c0 * g(r, 0) - c1 * g(r, 1);
          acc += res * res;
        }
        best = std::min(best, acc);
      }
    CHECK(std::abs(dist_to_subspace(y, sub) - std::sqrt(best)) < 1e-6);
  }

  SECTION("projection idempotence") {
    Rng rng(13u);
    Matrix g(5, 2);
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t c = 0; c < 2; ++c) g(r, c) = rng.gaussian();
    detail::orthonormalize_columns(g);
    Subspace sub{g, "plane"};
    Vec y(5);
    for (double& v : y) v = rng.gaussian();

    Vec projected = y;
    for (std::size_t c = 0; c < 2; ++c) {
      double coef = 0.0;
      for (std::size_t r = 0; r < 5; ++r) coef += g(r, c) * projected[r];
      for (std::size_t r = 0; r < 5; ++r) projected[r] -= coef * g(r, c);
    }
    CHECK(std::abs(dist_to_subspace(projected, sub) - dist_to_subspace(y, sub)) <= 1e-12);
  }

  SECTION("shape and orthonormality violations are rejected") {
    Subspace sub = axis_subspace(3, {0});
    CHECK_THROWS_AS(dist_to_subspace({1.0, 2.0}, sub), shape_error);
    Subspace skew;
    skew.id = "skew";
    skew.basis = Matrix(2, 2);
    skew.basis(0, 0) = 1.0;
    skew.basis(0, 1) = 1.0;  // repeated column: B^T B != I
    skew.basis(1, 1) = 1e-7;
    CHECK_THROWS_AS(dist_to_subspace({1.0, 2.0}, skew), shape_error);
  }
}

TEST_CASE("distance from the class to a subspace") {
  const TruncatedEllipsoid ell{{1.0, 4.0, 9.0, 16.0}, 2};
  const std::size_t dim = ambient_dim(ell);
  REQUIRE(dim == 6);

  SECTION("the axis-aligned candidate realizes the width formula") {
    for (std::size_t n = 0; n < 4; ++n) {
      const Subspace sub = extremal_subspace(ell, n);
      const double d = dist_subspace_to_ellipsoid(sub, ell);
      CHECK(std::abs(d - 1.0 / std::sqrt(ell.lambdas[n])) <= 1e-12);
    }
  }

  SECTION("omitting any cylinder axis makes the distance infinite") {
    for (std::size_t drop = 0; drop < ell.n_free; ++drop) {
      std::vector<std::size_t> axes;
      for (std::size_t a = 0; a < dim; ++a)
        if (a != drop) axes.push_back(a);
      const Subspace sub = axis_subspace(dim, axes, "missing-cylinder");
      CHECK(dist_subspace_to_ellipsoid(sub, ell) ==
            std::numeric_limits<double>::infinity());
    }
  }

  SECTION("the full space has distance zero") {
    std::vector<std::size_t> all;
    for (std::size_t a = 0; a < dim; ++a) all.push_back(a);
    CHECK(dist_subspace_to_ellipsoid(axis_subspace(dim, all, "full"), ell) == 0.0);
  }

  SECTION("ambient dimension mismatch is rejected") {
    CHECK_THROWS_AS(dist_subspace_to_ellipsoid(axis_subspace(4, {0}), ell), shape_error);
  }
}

TEST_CASE("brute-force boundary maximization matches the pencil computation") {
  // One cylinder axis plus a skew bound direction; K = 3 keeps the boundary
  // enumerable. The brute-force scan can only undershoot the supremum, so it
  // must sit slightly below the pencil value and within the coarse tolerance.
  const TruncatedEllipsoid ell{{1.0, 3.0, 7.0}, 1};
  Subspace sub;
  sub.id = "skew";
  sub.basis = Matrix(4, 2);
  sub.basis(0, 0) = 1.0;
  sub.basis(1, 1) = 0.6;
  sub.basis(2, 1) = 0.64;
  sub.basis(3, 1) = 0.48;
  const double computed = dist_subspace_to_ellipsoid(sub, ell);
  REQUIRE(std::isfinite(computed));

  double best = 0.0;
  const int n_theta = 1000;
  const int n_phi = 1000;
  for (int i = 0; i < n_theta; ++i) {
    const double theta = M_PI * (i + 0.5) / n_theta;
    const double st = std::sin(theta);
    const double ct = std::cos(theta);
    for (int j = 0; j < n_phi; ++j) {
      const double phi = 2.0 * M_PI * (j + 0.5) / n_phi;
      Vec y(4, 0.0);
      y[1] = st * std::cos(phi) / std::sqrt(ell.lambdas[0]);
      y[2] = st * std::sin(phi) / std::sqrt(ell.lambdas[1]);
      y[3] = ct / std::sqrt(ell.lambdas[2]);
      best = std::max(best, dist_to_subspace(y, sub));
    }
  }
  CHECK(best <= computed + 1e-12);
  CHECK(std::abs(best - computed) < 2e-3);
}

TEST_CASE("width formula and extremal subspace preconditions") {
  const TruncatedEllipsoid ell{{2.0, 5.0}, 1};
  CHECK(std::abs(width_formula(ell, 0) - 1.0 / std::sqrt(2.0)) <= 1e-15);
  CHECK(std::abs(width_formula(ell, 1) - 1.0 / std::sqrt(5.0)) <= 1e-15);
  CHECK_THROWS_AS(width_formula(ell, 2), std::out_of_range);
  CHECK_THROWS_AS(extremal_subspace(ell, 3), size_error);
}

TEST_CASE("extremality experiment: random candidates never beat the axes") {
  SECTION("the documented desk case") {
    const TruncatedEllipsoid ell{{1.0, 4.0, 9.0}, 1};
    const WidthReport report = extremality_experiment(ell, 1, 200, 7u);
    CHECK(report.formula_value == 0.5);
    CHECK(report.searched_min >= 0.5 - 1e-9);
    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[0].method == "formula");
    CHECK(report.rows[1].method == "search");
    CHECK(report.rows[1].witness == "axes");
    CHECK(std::abs(report.rows[1].value - report.formula_value) <= 1e-9);
    CHECK(report.rows[2].method == "search");
    CHECK(!report.note.empty());
  }

  SECTION("N = 0 candidates are all the cylinder-only subspace") {
    const TruncatedEllipsoid ell{{2.0, 3.0, 11.0}, 2};
    const WidthReport report = extremality_experiment(ell, 0, 25, 3u);
    CHECK(std::abs(report.searched_min - 1.0 / std::sqrt(2.0)) <= 1e-12);
    CHECK(std::abs(report.formula_value - 1.0 / std::sqrt(2.0)) <= 1e-15);
  }

  SECTION("every search row respects the lower bound at a larger truncation") {
    Vec lambdas(12);
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
      const double f = M_PI * static_cast<double>(j + 1);
      lambdas[j] = f * f;
    }
    const TruncatedEllipsoid ell{lambdas, 3};
    for (std::size_t n = 1; n <= 6; ++n) {
      const WidthReport report = extremality_experiment(ell, n, 30, 17u + n);
      for (const WidthRow& row : report.rows)
        if (row.method == "search")
          CHECK(row.value >= report.formula_value - 1e-9);
    }
  }

  SECTION("fixed seeds reproduce the report exactly") {
    const TruncatedEllipsoid ell{{1.0, 4.0, 9.0, 25.0}, 1};
    const WidthReport a = extremality_experiment(ell, 2, 40, 99u);
    const WidthReport b = extremality_experiment(ell, 2, 40, 99u);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].value == b.rows[i].value);
      CHECK(a.rows[i].witness == b.rows[i].witness);
    }
    CHECK(a.searched_min == b.searched_min);
  }

  SECTION("parameter violations are rejected") {
    const TruncatedEllipsoid ell{{1.0, 2.0}, 0};
    CHECK_THROWS_AS(extremality_experiment(ell, 2, 10, 1u), size_error);
    CHECK_THROWS_AS(extremality_experiment(ell, 1, 0, 1u), size_error);
  }
}

TEST_CASE("unbounded distance demonstration") {
  DiskProblem problem{2, 0, 16, Variant::free};
  const DiskSpectrum spectrum = solve_disk_spectrum(problem);
  const Vec t_values = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0};

  SECTION("the documented case: slope sqrt(pi/12), zero intercept") {
    const UnboundedDemo demo = unbounded_distance_demo(spectrum, 1, 0, t_values);
    const double expected_slope = std::sqrt(M_PI / 12.0);
    CHECK(std::abs(demo.slope - expected_slope) <= 1e-8);
    CHECK(std::abs(demo.intercept) <= 1e-10);
    CHECK(std::abs(demo.witness_residual - expected_slope) <= 1e-12);
    CHECK(demo.slope > 0.1 * demo.witness_residual);
    CHECK(!demo.conclusion.empty());
  }

  SECTION("zero scaling gives zero distance and doubling doubles it") {
    const UnboundedDemo demo = unbounded_distance_demo(spectrum, 1, 0, t_values);
    REQUIRE(demo.table.size() == t_values.size());
    CHECK(demo.table[0].dist == 0.0);
    CHECK(std::abs(demo.table[3].dist - 2.0 * demo.table[2].dist) <= 1e-10);
    CHECK(std::abs(demo.table[4].dist - 2.0 * demo.table[3].dist) <= 1e-10);
  }

  SECTION("a proxy that swallows the witness is rejected") {
    DiskSpectrum doctored = spectrum;
    ModeSpectrum& mode = doctored.modes[0];
    // Overwrite the first positive eigenfunction with the witness direction
    // r^2 (normalized in the mode mass inner product) so the proxy contains
    // the witness exactly.
    const Matrix mass = radial_mass_matrix(0, problem.radial_size);
    Vec e0(static_cast<std::size_t>(problem.radial_size), 0.0);
    e0[0] = 1.0;
    const Vec witness = matvec(multiplication_by_s_matrix(problem.radial_size), e0);
    const double nrm = std::sqrt(dot(witness, matvec(mass, witness)));
    for (std::size_t i = 0; i < witness.size(); ++i)
      mode.eigenvectors(i, static_cast<std::size_t>(mode.null_dim)) = witness[i] / nrm;
    CHECK_THROWS_AS(unbounded_distance_demo(doctored, 1, 0, t_values), witness_error);
  }

  SECTION("parameter violations are rejected") {
    CHECK_THROWS_AS(unbounded_distance_demo(spectrum, 2, 0, t_values), size_error);
    CHECK_THROWS_AS(unbounded_distance_demo(spectrum, -1, 0, t_values), size_error);
    CHECK_THROWS_AS(unbounded_distance_demo(spectrum, 1, 1, t_values), size_error);
    CHECK_THROWS_AS(unbounded_distance_demo(spectrum, 1, 0, {1.0}), size_error);
    DiskProblem clamped{2, 0, 16, Variant::clamped};
    const DiskSpectrum clamped_spectrum = solve_disk_spectrum(clamped);
    CHECK_THROWS_AS(unbounded_distance_demo(clamped_spectrum, 1, 0, t_values), shape_error);
  }
}

TEST_CASE("derivative table of the five harmonic polynomials") {
  const JacobiCheck check = jacobi_matrix_check();
  CHECK(check.matches_reference);
  CHECK(check.all_harmonic);
  CHECK(check.nondegenerate);
  CHECK(std::abs(check.determinant) == 2.0);

  // The row for x1^2 - x2^2 carries the second derivative in its first column.
  CHECK(check.jacobian(3, 0) == 2.0);
  for (std::size_t j = 1; j < 5; ++j) CHECK(check.jacobian(3, j) == 0.0);
  // The constant function only contributes the value column.
  CHECK(check.jacobian(0, 4) == 1.0);
}

TEST_CASE("constant-scaling probe leaves the candidate fixed and rescales widths") {
  const TruncatedEllipsoid ell{{1.0, 4.0, 9.0, 16.0}, 2};

  SECTION("unit scale is the identity") {
    const PerturbationProbe probe = diagonal_perturbation_probe(ell, 1, 1.0);
    CHECK(probe.base_width == probe.scaled_width);
    CHECK(probe.kernel_unchanged);
    CHECK(probe.subspace_invariant);
  }

  SECTION("doubling the operator halves the widths") {
    for (std::size_t n = 0; n < 4; ++n) {
      const PerturbationProbe probe = diagonal_perturbation_probe(ell, n, 2.0);
      CHECK(std::abs(probe.scaled_width - probe.base_width / 2.0) <= 1e-12);
      CHECK(probe.kernel_unchanged);
      CHECK(probe.subspace_invariant);
    }
  }

  SECTION("a generic scale reproduces the ratio") {
    const PerturbationProbe probe = diagonal_perturbation_probe(ell, 2, 3.7);
    CHECK(std::abs(probe.base_width / probe.scaled_width - 3.7) <= 1e-10);
    CHECK(std::abs(probe.scaled_width - probe.expected_scaled) <= 1e-12);
  }

  SECTION("non-positive scales are rejected") {
    CHECK_THROWS_AS(diagonal_perturbation_probe(ell, 1, 0.0), size_error);
    CHECK_THROWS_AS(diagonal_perturbation_probe(ell, 1, -2.0), size_error);
    CHECK_THROWS_AS(diagonal_perturbation_probe(ell, 4, 2.0), size_error);
  }
}

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace polywidth {

// Invalid size / parameter-range request.
struct size_error : std::invalid_argument {
  explicit size_error(const std::string& what) : std::invalid_argument(what) {}
};

// Root bracketing failed (no sign change on the given interval).
struct bracket_error : std::invalid_argument {
  explicit bracket_error(const std::string& what) : std::invalid_argument(what) {}
};

// Matrix factorization failed; carries the pivot index at which it broke down.
struct decomposition_error : std::runtime_error {
  std::size_t pivot;
  decomposition_error(const std::string& what, std::size_t pivot_index)
      : std::runtime_error(what), pivot(pivot_index) {}
};

// Iterative eigensolver failed to converge within its sweep budget.
struct convergence_error : std::runtime_error {
  explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

// Computed null-space dimension does not match the analytic multiplicity:
// the basis is too small or the zero threshold is misconfigured.
struct discretization_error : std::runtime_error {
  explicit discretization_error(const std::string& what) : std::runtime_error(what) {}
};

// Constraint assembly failed (rank-deficient constraint matrix).
struct assembly_error : std::runtime_error {
  explicit assembly_error(const std::string& what) : std::runtime_error(what) {}
};

// Mapped eigenfunction failed a postcondition check; names (l, k).
struct construction_error : std::runtime_error {
  explicit construction_error(const std::string& what) : std::runtime_error(what) {}
};

// Coordinates are not inside the ellipsoid; carries the quadratic-form value.
struct membership_error : std::runtime_error {
  double value;
  membership_error(const std::string& what, double quadratic_value)
      : std::runtime_error(what), value(quadratic_value) {}
};

// Witness direction for the unbounded-distance demo lies inside the proxy
// subspace (residual below threshold), so it cannot demonstrate anything.
struct witness_error : std::runtime_error {
  explicit witness_error(const std::string& what) : std::runtime_error(what) {}
};

// A randomized trial produced a value below a proven lower bound.
struct counterexample_error : std::runtime_error {
  explicit counterexample_error(const std::string& what) : std::runtime_error(what) {}
};

// Incompatible matrix/vector shapes.
struct shape_error : std::invalid_argument {
  explicit shape_error(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace polywidth

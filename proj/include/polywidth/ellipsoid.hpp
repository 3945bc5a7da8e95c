#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <polywidth/errors.hpp>
#include <polywidth/matrix.hpp>

namespace polywidth {

// Coordinates of a function in the principal-axes frame of the class
// {sum_j lambda_j f_j^2 <= 1}: free_coeffs lie along the zero-eigenvalue
// (cylinder) axes, bound_coeffs along the positive axes, and eigenvalues is
// the positive sequence aligned with bound_coeffs.
struct EllipsoidCoords {
  Vec free_coeffs;
  Vec bound_coeffs;
  Vec eigenvalues;
};

struct MembershipReport {
  double value = 0.0;  // sum_j lambda_j f_j^2 (free axes never contribute)
  bool inside = false;
};

struct JacksonReport {
  double tail_error = 0.0;
  double bound = 0.0;
  bool satisfied = false;
};

// The set is a cylinder along the free axes: only bound coordinates are
// weighted by their eigenvalues.
inline MembershipReport ellipsoid_membership(const EllipsoidCoords& coords) {
  if (coords.bound_coeffs.size() > coords.eigenvalues.size())
    throw shape_error("ellipsoid_membership: more bound coefficients than eigenvalues");
  MembershipReport report;
  for (std::size_t j = 0; j < coords.bound_coeffs.size(); ++j)
    report.value += coords.eigenvalues[j] * coords.bound_coeffs[j] * coords.bound_coeffs[j];
  report.inside = report.value <= 1.0 + 1e-12;
  return report;
}

namespace detail {

// Shared tail computation: keep the first `keep` positive-axis coefficients,
// bound the remainder by 1/sqrt(lambda_{keep+1}).
inline JacksonReport jackson_tail(const EllipsoidCoords& coords, std::size_t keep) {
  const auto membership = ellipsoid_membership(coords);
  if (!membership.inside)
    throw membership_error(
        "jackson check: coordinates outside the ellipsoid (value " +
            std::to_string(membership.value) + ")",
        membership.value);
  if (keep >= coords.eigenvalues.size())
    throw std::out_of_range("jackson check: truncation index beyond computed spectrum");
  JacksonReport report;
  double tail2 = 0.0;
  for (std::size_t j = keep; j < coords.bound_coeffs.size(); ++j)
    tail2 += coords.bound_coeffs[j] * coords.bound_coeffs[j];
  report.tail_error = std::sqrt(tail2);
  report.bound = 1.0 / std::sqrt(coords.eigenvalues[keep]);
  report.satisfied = report.tail_error <= report.bound + 1e-12;
  return report;
}

}  // namespace detail

// 1D convention: N counts the null axes first, so a projection onto N
// dimensions keeps the free part plus the first N - n_null bound axes.
inline JacksonReport jackson_check_1d(const EllipsoidCoords& coords, std::size_t n_dim) {
  if (n_dim < coords.free_coeffs.size())
    throw std::out_of_range(
        "jackson_check_1d: projection dimension smaller than the null space");
  return detail::jackson_tail(coords, n_dim - coords.free_coeffs.size());
}

// Disk convention: the whole (truncated) null family is always subtracted and
// N counts positive axes only.
inline JacksonReport jackson_check_disk(const EllipsoidCoords& coords, std::size_t n_positive) {
  return detail::jackson_tail(coords, n_positive);
}

}  // namespace polywidth

#pragma once

// Sampling direction sets u_1..u_N, stored as the rows of an N x n matrix.

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include "ndfo/core.hpp"

namespace ndfo {

enum class DirectionKind { coordinate, gaussian, orthonormal };

inline std::string_view to_string(DirectionKind kind) {
  switch (kind) {
    case DirectionKind::coordinate: return "coordinate";
    case DirectionKind::gaussian: return "gaussian";
    case DirectionKind::orthonormal: return "orthonormal";
  }
  return "?";
}

struct DirectionSet {
  Matrix Q;  // rows are directions
  DirectionKind kind = DirectionKind::coordinate;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t count() const noexcept { return static_cast<std::size_t>(Q.rows()); }
  [[nodiscard]] std::size_t dimension() const noexcept { return static_cast<std::size_t>(Q.cols()); }
  [[nodiscard]] Vector direction(std::size_t i) const { return Q.row(static_cast<Eigen::Index>(i)).transpose(); }
};

/// Rows e_1..e_n.
inline DirectionSet coordinate_directions(std::size_t n) {
  if (n == 0) throw UsageError("dimension must be >= 1");
  const auto dim = static_cast<Eigen::Index>(n);
  return {Matrix::Identity(dim, dim), DirectionKind::coordinate, 0};
}

/// N x n matrix of i.i.d. standard normal entries, filled row by row.
inline DirectionSet gaussian_directions(std::size_t n, std::size_t count, RngStream& rng) {
  if (n == 0 || count == 0) throw UsageError("gaussian directions need n >= 1 and N >= 1");
  Matrix Q(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < Q.rows(); ++i)
    for (Eigen::Index j = 0; j < Q.cols(); ++j) Q(i, j) = rng.normal();
  return {std::move(Q), DirectionKind::gaussian, rng.seed()};
}

namespace detail {

/// Pivot norm below which a projected row counts as linearly dependent.
inline constexpr double kGramSchmidtPivotFloor = 1e-8;

}  // namespace detail

/// Orthonormalized Gaussian rows (classical Gram-Schmidt, applied twice).
///
/// A row whose norm after projection drops below 1e-8 (relative to its norm
/// before projection) is redrawn from the same stream, so the result is a
/// deterministic function of the stream state.
inline DirectionSet orthonormal_directions(std::size_t n, std::size_t count, RngStream& rng) {
  if (n == 0 || count == 0) throw UsageError("orthonormal directions need n >= 1 and N >= 1");
  if (count > n)
    throw UsageError("orthonormal directions need N <= n (got N=" + std::to_string(count) +
                     ", n=" + std::to_string(n) + ")");
  const auto cols = static_cast<Eigen::Index>(n);
  Matrix Q(static_cast<Eigen::Index>(count), cols);
  Vector row(cols);
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    for (;;) {
      for (Eigen::Index j = 0; j < cols; ++j) row(j) = rng.normal();
      const double original = row.norm();
      for (int pass = 0; pass < 2; ++pass) {
        if (i > 0) {
          const Vector coeffs = Q.topRows(i) * row;
          row.noalias() -= Q.topRows(i).transpose() * coeffs;
        }
      }
      const double pivot = row.norm();
      if (original > 0.0 && pivot > detail::kGramSchmidtPivotFloor * original) {
        Q.row(i) = (row / pivot).transpose();
        break;
      }
    }
  }
  return {std::move(Q), DirectionKind::orthonormal, rng.seed()};
}

/// Frobenius norm of Q Q^T - I.
inline double orthonormality_defect(const DirectionSet& dirs) {
  const auto N = dirs.Q.rows();
  return (dirs.Q * dirs.Q.transpose() - Matrix::Identity(N, N)).norm();
}

}  // namespace ndfo

#pragma once

// Gradient approximations built from function values only.
//
//   GSG   g = 1/N   sum_i (f(x + s u_i) - f(x)) / s * u_i
//   cGSG  g = 1/2N  sum_i (f(x + s u_i) - f(x - s u_i)) / s * u_i
//   LI*   solve s Q g = F,  F_i = f(x + s u_i) - f(x)   (N = n)
//
// Linear interpolation covers forward differences (coordinate rows, FD),
// orthonormal rows (LIOD, solved through Q^T) and Gaussian rows (LIGD, LU).

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ndfo/core.hpp"
#include "ndfo/directions.hpp"

namespace ndfo {

enum class EstimatorKind { GSG, cGSG, LIOD, LIGD, FD };

inline std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::GSG: return "GSG";
    case EstimatorKind::cGSG: return "cGSG";
    case EstimatorKind::LIOD: return "LIOD";
    case EstimatorKind::LIGD: return "LIGD";
    case EstimatorKind::FD: return "FD";
  }
  return "?";
}

inline EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "GSG") return EstimatorKind::GSG;
  if (name == "cGSG") return EstimatorKind::cGSG;
  if (name == "LIOD") return EstimatorKind::LIOD;
  if (name == "LIGD") return EstimatorKind::LIGD;
  if (name == "FD") return EstimatorKind::FD;
  throw UsageError("unknown estimator '" + std::string(name) + "'");
}

inline bool is_interpolation(EstimatorKind kind) {
  return kind == EstimatorKind::LIOD || kind == EstimatorKind::LIGD || kind == EstimatorKind::FD;
}

struct GradientEstimate {
  Vector g;
  double sigma = 0.0;
  DirectionSet directions;
  std::size_t evals_used = 0;
  EstimatorKind kind = EstimatorKind::GSG;
  /// f(x) as measured during the estimate (absent for cGSG).
  std::optional<double> f_center;
};

/// Largest tolerated condition number of Q for the general interpolation solve.
inline constexpr double kMaxInterpolationCondition = 1e8;

namespace detail {

inline void check_estimator_inputs(const Oracle& oracle, const Vector& x, double sigma,
                                   const DirectionSet& dirs) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw UsageError("sigma must be finite and > 0");
  if (dirs.count() == 0) throw UsageError("direction set is empty");
  if (dirs.dimension() != oracle.dimension() || static_cast<std::size_t>(x.size()) != oracle.dimension())
    throw UsageError("direction/point dimension does not match the oracle");
}

/// Evaluates a batch, re-labelling failures with the estimator sample index.
/// `offset` is subtracted from the batch index (1 when f(x) leads the batch).
inline std::vector<double> evaluate_samples(Oracle& oracle, const std::vector<Vector>& points,
                                            std::size_t offset) {
  try {
    return oracle.evaluate_batch(points);
  } catch (const NumericError& e) {
    if (e.sample() == NumericError::npos || e.sample() < offset)
      throw NumericError("non-finite function value at the center point", e.where());
    const std::size_t sample = e.sample() - offset;
    throw NumericError("non-finite function value at sample " + std::to_string(sample), e.where(),
                       sample);
  }
}

}  // namespace detail

/// Gaussian smoothed gradient (forward differences, 1/N scaling).
inline GradientEstimate gsg(Oracle& oracle, const Vector& x, double sigma, const DirectionSet& dirs) {
  detail::check_estimator_inputs(oracle, x, sigma, dirs);
  const std::size_t N = dirs.count();
  std::vector<Vector> points;
  points.reserve(N + 1);
  points.push_back(x);
  for (std::size_t i = 0; i < N; ++i) points.push_back(x + sigma * dirs.direction(i));
  const auto values = detail::evaluate_samples(oracle, points, 1);

  const double f0 = values[0];
  Vector g = Vector::Zero(x.size());
  for (std::size_t i = 0; i < N; ++i)
    g += ((values[i + 1] - f0) / sigma) * dirs.Q.row(static_cast<Eigen::Index>(i)).transpose();
  g /= static_cast<double>(N);
  return {std::move(g), sigma, dirs, N + 1, EstimatorKind::GSG, f0};
}

/// Central-difference Gaussian smoothed gradient; 2N evaluations, no f(x).
inline GradientEstimate cgsg(Oracle& oracle, const Vector& x, double sigma, const DirectionSet& dirs) {
  detail::check_estimator_inputs(oracle, x, sigma, dirs);
  const std::size_t N = dirs.count();
  std::vector<Vector> points;
  points.reserve(2 * N);
  for (std::size_t i = 0; i < N; ++i) {
    const Vector step = sigma * dirs.direction(i);
    points.push_back(x + step);
    points.push_back(x - step);
  }
  std::vector<double> values;
  try {
    values = oracle.evaluate_batch(points);
  } catch (const NumericError& e) {
    const std::size_t sample = e.sample() == NumericError::npos ? e.sample() : e.sample() / 2;
    throw NumericError("non-finite function value at sample " + std::to_string(sample), e.where(),
                       sample);
  }

  Vector g = Vector::Zero(x.size());
  for (std::size_t i = 0; i < N; ++i)
    g += ((values[2 * i] - values[2 * i + 1]) / sigma) *
         dirs.Q.row(static_cast<Eigen::Index>(i)).transpose();
  g /= 2.0 * static_cast<double>(N);
  return {std::move(g), sigma, dirs, 2 * N, EstimatorKind::cGSG, std::nullopt};
}

/// Linear-interpolation gradient: solves sigma * Q g = F with N = n.
///
/// Orthonormal and coordinate rows use g = sum_i (F_i / sigma) u_i directly;
/// Gaussian rows go through an LU solve after a conditioning check that runs
/// before any function evaluation.
inline GradientEstimate interpolation_gradient(Oracle& oracle, const Vector& x, double sigma,
                                               const DirectionSet& dirs) {
  detail::check_estimator_inputs(oracle, x, sigma, dirs);
  const std::size_t n = dirs.dimension();
  if (dirs.count() != n)
    throw UsageError("interpolation needs exactly n directions (got " + std::to_string(dirs.count()) +
                     ", n=" + std::to_string(n) + ")");

  const bool transpose_solve = dirs.kind != DirectionKind::gaussian;
  std::optional<Eigen::PartialPivLU<Matrix>> lu;
  if (!transpose_solve) {
    lu.emplace(dirs.Q);
    const double rcond = lu->rcond();
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(cond < kMaxInterpolationCondition))
      throw ConditioningError("direction matrix is ill-conditioned (cond ~ " + std::to_string(cond) + ")",
                              cond);
  }

  std::vector<Vector> points;
  points.reserve(n + 1);
  points.push_back(x);
  for (std::size_t i = 0; i < n; ++i) points.push_back(x + sigma * dirs.direction(i));
  const auto values = detail::evaluate_samples(oracle, points, 1);

  const double f0 = values[0];
  Vector scaled(static_cast<Eigen::Index>(n));  // F / sigma
  for (std::size_t i = 0; i < n; ++i) scaled(static_cast<Eigen::Index>(i)) = (values[i + 1] - f0) / sigma;

  Vector g;
  EstimatorKind kind = EstimatorKind::LIGD;
  if (transpose_solve) {
    g = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      g += scaled(static_cast<Eigen::Index>(i)) * dirs.Q.row(static_cast<Eigen::Index>(i)).transpose();
    kind = dirs.kind == DirectionKind::coordinate ? EstimatorKind::FD : EstimatorKind::LIOD;
  } else {
    g = lu->solve(scaled);
  }
  if (!g.allFinite()) throw NumericError("interpolation solve produced non-finite entries", x);
  return {std::move(g), sigma, dirs, n + 1, kind, f0};
}

/// theta = ||g - grad|| / ||grad||.
inline double relative_error(const Vector& g, const Vector& grad_true) {
  if (g.size() != grad_true.size()) throw UsageError("relative_error: dimension mismatch");
  if (!grad_true.allFinite()) throw UsageError("relative_error: true gradient is not finite");
  const double denom = grad_true.norm();
  if (denom == 0.0) throw UndefinedMetric("relative error undefined at a zero gradient");
  return (g - grad_true).norm() / denom;
}

// ---------------------------------------------------------------------------
// Configured estimation: draws a fresh direction set and dispatches.
// ---------------------------------------------------------------------------

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::LIOD;
  double sigma = 1e-2;
  /// Number of directions; 0 means n. Interpolation kinds require n.
  std::size_t samples = 0;
};

inline std::size_t resolved_samples(const EstimatorConfig& cfg, std::size_t n) {
  const std::size_t N = cfg.samples == 0 ? n : cfg.samples;
  if (is_interpolation(cfg.kind) && N != n)
    throw UsageError(std::string(to_string(cfg.kind)) + " requires N = n");
  return N;
}

/// Evaluations consumed by one estimate in dimension n.
inline std::size_t evals_per_estimate(const EstimatorConfig& cfg, std::size_t n) {
  const std::size_t N = resolved_samples(cfg, n);
  return cfg.kind == EstimatorKind::cGSG ? 2 * N : N + 1;
}

inline DirectionSet draw_directions(EstimatorKind kind, std::size_t n, std::size_t N, RngStream& rng) {
  switch (kind) {
    case EstimatorKind::FD: return coordinate_directions(n);
    case EstimatorKind::LIOD: return orthonormal_directions(n, N, rng);
    case EstimatorKind::LIGD:
    case EstimatorKind::GSG:
    case EstimatorKind::cGSG: return gaussian_directions(n, N, rng);
  }
  throw UsageError("unknown estimator kind");
}

/// Draws directions from `rng` and runs the configured estimator. LIGD gets
/// one automatic redraw on a conditioning failure; a second failure throws.
inline GradientEstimate estimate_gradient(Oracle& oracle, const Vector& x, const EstimatorConfig& cfg,
                                          RngStream& rng) {
  const std::size_t n = oracle.dimension();
  const std::size_t N = resolved_samples(cfg, n);
  switch (cfg.kind) {
    case EstimatorKind::GSG: return gsg(oracle, x, cfg.sigma, draw_directions(cfg.kind, n, N, rng));
    case EstimatorKind::cGSG: return cgsg(oracle, x, cfg.sigma, draw_directions(cfg.kind, n, N, rng));
    case EstimatorKind::FD:
    case EstimatorKind::LIOD:
      return interpolation_gradient(oracle, x, cfg.sigma, draw_directions(cfg.kind, n, N, rng));
    case EstimatorKind::LIGD:
      try {
        return interpolation_gradient(oracle, x, cfg.sigma, draw_directions(cfg.kind, n, N, rng));
      } catch (const ConditioningError&) {
        return interpolation_gradient(oracle, x, cfg.sigma, draw_directions(cfg.kind, n, N, rng));
      }
  }
  throw UsageError("unknown estimator kind");
}

}  // namespace ndfo

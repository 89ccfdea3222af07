#pragma once

// Closed-form guarantees: line-search step threshold and rate certificates,
// the interpolation error bound with its admissible sampling radii, and the
// variance / sample-size bounds for Gaussian smoothed gradients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "ndfo/core.hpp"

namespace ndfo {

/// Problem constants. Optional members are only required by the bounds that
/// use them; a missing one is reported as a usage error at the call site.
struct ProblemConstants {
  std::optional<double> L;         // gradient Lipschitz constant of phi
  std::optional<double> L_f;       // Lipschitz constant of f
  std::optional<double> mu;        // strong convexity modulus
  std::optional<double> D;         // level-set radius around the minimizer
  double eps_f = 0.0;              // noise bound
  std::optional<double> phi_hat;   // lower bound on phi
  std::optional<double> phi_star;  // optimal value

  void validate() const {
    auto nonneg = [](const std::optional<double>& v, const char* name) {
      if (v && !(*v >= 0.0)) throw UsageError(std::string(name) + " must be >= 0");
    };
    nonneg(L, "L");
    nonneg(L_f, "L_f");
    nonneg(mu, "mu");
    nonneg(D, "D");
    if (!(eps_f >= 0.0)) throw UsageError("eps_f must be >= 0");
    if (mu && L && *mu > *L) throw UsageError("mu must not exceed L");
  }

  [[nodiscard]] double require_L() const {
    if (!L) throw UsageError("bound needs the gradient Lipschitz constant L");
    return *L;
  }
};

struct LineSearchConstants {
  double c1 = 0.2;
  double tau = 0.3;
  double theta = 0.0;  // norm-condition accuracy, in [0, 1/2)
  double gamma = 0.5;  // regime split for the convex rate

  /// Ranges of every constant, plus c1 < (1 - 2 theta) / (1 - theta).
  void validate() const {
    if (!(c1 > 0.0 && c1 < 1.0)) throw UsageError("c1 must lie in (0, 1)");
    if (!(tau > 0.0 && tau < 1.0)) throw UsageError("tau must lie in (0, 1)");
    if (!(theta >= 0.0 && theta < 0.5)) throw UsageError("theta must lie in [0, 1/2)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw UsageError("gamma must lie in (0, 1)");
    if (!(c1 < (1.0 - 2.0 * theta) / (1.0 - theta)))
      throw InfeasibleConstants("c1 >= (1 - 2 theta)/(1 - theta): no positive step threshold");
  }
};

/// Step threshold below which the relaxed Armijo test always passes:
/// 2((1 - 2 theta) - c1 (1 - theta)) / (L (1 - theta)).
inline double alpha_bar(const LineSearchConstants& c, double L) {
  c.validate();
  if (!(L > 0.0)) throw UsageError("alpha_bar needs L > 0");
  return 2.0 * ((1.0 - 2.0 * c.theta) - c.c1 * (1.0 - c.theta)) / (L * (1.0 - c.theta));
}

/// Guaranteed per-iteration decrease coefficient c1 tau alpha_bar (1 - theta)^2.
inline double eta(const LineSearchConstants& c, double L) {
  const double one_minus = 1.0 - c.theta;
  return c.c1 * c.tau * alpha_bar(c, L) * one_minus * one_minus;
}

/// Convex optimality-gap bound after k iterations:
/// max{ D^2 / (k (1 - gamma) eta),  2 D sqrt(eps_f) / sqrt(gamma eta) + 4 eps_f }.
inline double convex_gap_bound(const ProblemConstants& p, const LineSearchConstants& c, std::size_t k) {
  p.validate();
  if (!p.D) throw UsageError("convex_gap_bound needs the level-set radius D");
  if (k < 1) throw UsageError("convex_gap_bound needs k >= 1");
  const double e = eta(c, p.require_L());
  const double D = *p.D;
  const double rate = D * D / (static_cast<double>(k) * (1.0 - c.gamma) * e);
  const double floor = 2.0 * D * std::sqrt(p.eps_f) / std::sqrt(c.gamma * e) + 4.0 * p.eps_f;
  return std::max(rate, floor);
}

struct StrongConvexityCertificate {
  double rho = 0.0;
  double bound = 0.0;
};

/// Linear-rate certificate: rho = 1 - 2 mu eta and
/// gap(k) <= rho^k (gap0 - 4 eps_f/(1 - rho)) + 4 eps_f/(1 - rho).
inline StrongConvexityCertificate strongly_convex_certificate(const ProblemConstants& p,
                                                              const LineSearchConstants& c,
                                                              std::size_t k, double gap0) {
  p.validate();
  if (!p.mu) throw UsageError("strongly_convex_certificate needs mu");
  if (!(gap0 >= 0.0)) throw UsageError("initial gap must be >= 0");
  const double rho = 1.0 - 2.0 * (*p.mu) * eta(c, p.require_L());
  if (!(rho > 0.0 && rho < 1.0))
    throw InfeasibleConstants("contraction factor rho = " + std::to_string(rho) + " is outside (0, 1)");
  const double floor = 4.0 * p.eps_f / (1.0 - rho);
  return {rho, std::pow(rho, static_cast<double>(k)) * (gap0 - floor) + floor};
}

/// Bound on the average squared true-gradient norm over T iterations:
/// (phi0 - phi_hat) / (eta T) + 4 eps_f / eta.
inline double nonconvex_avg_bound(const ProblemConstants& p, const LineSearchConstants& c,
                                  std::size_t T, double phi0) {
  p.validate();
  if (!p.phi_hat) throw UsageError("nonconvex_avg_bound needs the lower bound phi_hat");
  if (T < 1) throw UsageError("nonconvex_avg_bound needs T >= 1");
  const double e = eta(c, p.require_L());
  return (phi0 - *p.phi_hat) / (e * static_cast<double>(T)) + 4.0 * p.eps_f / e;
}

/// ||g - grad phi|| bound for linear interpolation with max ||u_i|| <= 1:
/// ||Q^-1|| sqrt(n) sigma L / 2 + 2 ||Q^-1|| sqrt(n) eps_f / sigma.
inline double interpolation_error_bound(double sigma, std::size_t n, const ProblemConstants& p,
                                        double q_inverse_norm = 1.0) {
  if (!(sigma > 0.0)) throw UsageError("sigma must be > 0");
  if (n == 0) throw UsageError("dimension must be >= 1");
  if (!(q_inverse_norm >= 1.0)) throw UsageError("||Q^-1|| is at least 1 for unit-bounded rows");
  p.validate();
  const double root_n = std::sqrt(static_cast<double>(n));
  return q_inverse_norm * root_n * sigma * p.require_L() / 2.0 +
         2.0 * q_inverse_norm * root_n * p.eps_f / sigma;
}

struct SigmaRange {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] double midpoint() const noexcept { return 0.5 * (lo + hi); }
};

/// Radii for which the orthonormal interpolation bound is <= theta ||grad||.
/// Requires theta ||grad|| >= 2 sqrt(L n eps_f).
inline SigmaRange sigma_range(double theta, double grad_norm, std::size_t n, const ProblemConstants& p) {
  if (!(grad_norm >= 0.0)) throw UsageError("gradient norm must be >= 0");
  if (!(theta >= 0.0)) throw UsageError("theta must be >= 0");
  if (n == 0) throw UsageError("dimension must be >= 1");
  p.validate();
  const double L = p.require_L();
  if (!(L > 0.0)) throw UsageError("sigma_range needs L > 0");
  const double target = theta * grad_norm;
  const double disc = target * target - 4.0 * L * static_cast<double>(n) * p.eps_f;
  if (disc < 0.0 || target <= 0.0)
    throw NoFeasibleSigma("theta * ||grad|| = " + std::to_string(target) +
                          " is below 2 sqrt(L n eps_f); no sampling radius meets the norm condition");
  const double root = std::sqrt(disc);
  const double scale = std::sqrt(static_cast<double>(n)) * L;
  return {(target - root) / scale, (target + root) / scale};
}

namespace detail {

/// L_f^2 (n(n+2)(n+4) + 8n(n+2) + 16n).
inline double gsg_lipschitz_term(double L_f, std::size_t n) {
  const double dn = static_cast<double>(n);
  return L_f * L_f * (dn * (dn + 2.0) * (dn + 4.0) + 8.0 * dn * (dn + 2.0) + 16.0 * dn);
}

}  // namespace detail

/// kappa with Var[g] <= kappa I for GSG on an L_f-Lipschitz f, using the
/// substitutions L = sqrt(n) L_f / sigma and eps_f = sqrt(n) L_f sigma:
/// (8 ||grad||^2 + L_f^2 (n(n+2)(n+4) + 8 n (n+2) + 16 n)) / (4 N).
inline double gsg_variance_bound(double grad_norm, double L_f, std::size_t n, std::size_t N) {
  if (N < 1) throw UsageError("N must be >= 1");
  const double lipschitz_part = detail::gsg_lipschitz_term(L_f, n);
  return (8.0 * grad_norm * grad_norm + lipschitz_part) / (4.0 * static_cast<double>(N));
}

/// Chebyshev tail bound on P(||g - grad|| > r) for a GSG with N samples:
/// 2 n ||grad||^2 / (N r^2) + L_f^2 (n(n+2)(n+4) + 8n(n+2) + 16n) / (4 N r^2).
inline double gsg_tail_probability_bound(double grad_norm, double L_f, std::size_t n, std::size_t N,
                                         double r) {
  if (N < 1) throw UsageError("N must be >= 1");
  if (!(r > 0.0)) throw UsageError("r must be > 0");
  const double dn = static_cast<double>(n);
  const double dN = static_cast<double>(N);
  const double lipschitz_part = detail::gsg_lipschitz_term(L_f, n);
  return 2.0 * dn * grad_norm * grad_norm / (dN * r * r) + lipschitz_part / (4.0 * dN * r * r);
}

/// Smallest N >= 1 whose tail bound is <= delta.
inline std::size_t gsg_sample_size(double grad_norm, double L_f, std::size_t n, double delta, double r) {
  if (!(delta > 0.0 && delta < 1.0)) throw UsageError("delta must lie in (0, 1)");
  if (!(r > 0.0)) throw UsageError("r must be > 0");
  const double dn = static_cast<double>(n);
  const double lipschitz_part = detail::gsg_lipschitz_term(L_f, n);
  const double exact = 2.0 * dn * grad_norm * grad_norm / (delta * r * r) + lipschitz_part / (4.0 * delta * r * r);
  if (!std::isfinite(exact)) throw NumericError("sample size overflows", Vector());
  auto N = static_cast<std::size_t>(std::max(1.0, std::ceil(exact)));
  // ceil() of a rounded quotient can land one above the true minimum.
  while (N > 1 && gsg_tail_probability_bound(grad_norm, L_f, n, N - 1, r) <= delta) --N;
  while (gsg_tail_probability_bound(grad_norm, L_f, n, N, r) > delta) ++N;
  return N;
}

/// Leading-order sample count 2n / (delta theta^2) for the norm condition.
inline double gsg_sample_size_leading(std::size_t n, double delta, double theta) {
  if (!(delta > 0.0 && delta < 1.0)) throw UsageError("delta must lie in (0, 1)");
  if (!(theta > 0.0)) throw UsageError("theta must be > 0");
  return 2.0 * static_cast<double>(n) / (delta * theta * theta);
}

struct SmoothingConstants {
  double eps_f = 0.0;
  double L = 0.0;
};

/// Constants of the Gaussian smoothing of an L_f-Lipschitz f at radius sigma.
inline SmoothingConstants gaussian_smoothing_constants(double sigma, double L_f, std::size_t n) {
  if (!(sigma > 0.0)) throw UsageError("sigma must be > 0");
  const double root_n = std::sqrt(static_cast<double>(n));
  return {sigma * root_n * L_f, root_n * L_f / sigma};
}

// ---------------------------------------------------------------------------
// Gaussian moment identities, u ~ N(0, I_n), a fixed:
//   1  E[u u^T]                   = I
//   2  E[(u^T u) u u^T]           = (n+2) I
//   3  E[(a^T u)^2 u u^T]         = a^T a I + 2 a a^T
//   4  E[a^T u (u^T u) u u^T]     = 0
//   5  E[(u^T u)^2 u u^T]         = (n+2)(n+4) I
//   6  E[a^T u ||u||^3]           = 0            (scalar)
//   7  E[(u^T u)^3 u u^T]         = (n+2)(n+4)(n+6) I
// ---------------------------------------------------------------------------

inline constexpr int kMomentIdentityCount = 7;

struct MomentCheck {
  int identity = 0;
  Matrix empirical;
  Matrix exact;
  Matrix standard_error;  // per entry
  double max_deviation = 0.0;
  double max_standard_error = 0.0;

  /// max |empirical - exact| <= k * (largest per-entry standard error).
  [[nodiscard]] bool within(double k_standard_errors) const {
    return max_deviation <= k_standard_errors * max_standard_error;
  }
};

inline Matrix moment_identity_exact(int identity, const Vector& a) {
  const auto n = a.size();
  const double dn = static_cast<double>(n);
  const Matrix I = Matrix::Identity(n, n);
  switch (identity) {
    case 1: return I;
    case 2: return (dn + 2.0) * I;
    case 3: return a.squaredNorm() * I + 2.0 * a * a.transpose();
    case 4: return Matrix::Zero(n, n);
    case 5: return (dn + 2.0) * (dn + 4.0) * I;
    case 6: return Matrix::Zero(1, 1);
    case 7: return (dn + 2.0) * (dn + 4.0) * (dn + 6.0) * I;
    default: throw UsageError("unknown moment identity " + std::to_string(identity) + " (expected 1..7)");
  }
}

/// Monte Carlo estimate of one moment identity with per-entry standard errors.
inline MomentCheck moment_identity_check(int identity, std::size_t n, const Vector& a, std::size_t samples,
                                         RngStream& rng) {
  if (identity < 1 || identity > kMomentIdentityCount)
    throw UsageError("unknown moment identity " + std::to_string(identity) + " (expected 1..7)");
  if (n == 0 || static_cast<std::size_t>(a.size()) != n) throw UsageError("a must have dimension n >= 1");
  if (samples < 10000) throw UsageError("moment checks need at least 1e4 samples");

  const auto dim = static_cast<Eigen::Index>(n);
  const bool scalar = identity == 6;
  const Eigen::Index rows = scalar ? 1 : dim;
  Matrix sum = Matrix::Zero(rows, rows);
  Matrix sum_sq = Matrix::Zero(rows, rows);
  Vector u(dim);
  Matrix term(rows, rows);

  for (std::size_t s = 0; s < samples; ++s) {
    for (Eigen::Index j = 0; j < dim; ++j) u(j) = rng.normal();
    const double uu = u.squaredNorm();
    const double au = a.dot(u);
    double weight = 1.0;
    switch (identity) {
      case 1: weight = 1.0; break;
      case 2: weight = uu; break;
      case 3: weight = au * au; break;
      case 4: weight = au * uu; break;
      case 5: weight = uu * uu; break;
      case 6: weight = au * uu * std::sqrt(uu); break;
      case 7: weight = uu * uu * uu; break;
    }
    if (scalar)
      term(0, 0) = weight;
    else
      term.noalias() = weight * (u * u.transpose());
    sum += term;
    sum_sq += term.cwiseProduct(term);
  }

  const double S = static_cast<double>(samples);
  MomentCheck out;
  out.identity = identity;
  out.empirical = sum / S;
  out.exact = moment_identity_exact(identity, a);
  const Matrix variance = (sum_sq / S - out.empirical.cwiseProduct(out.empirical)).cwiseMax(0.0);
  out.standard_error = (variance * (S / (S - 1.0)) / S).cwiseSqrt();
  out.max_deviation = (out.empirical - out.exact).cwiseAbs().maxCoeff();
  out.max_standard_error = out.standard_error.maxCoeff();
  return out;
}

}  // namespace ndfo

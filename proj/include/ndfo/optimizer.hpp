#pragma once

// x_{k+1} = x_k - alpha_k g(x_k) with a noise-relaxed Armijo backtracking line
// search, plus fixed-step and Adam steppers for comparison.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ndfo/bounds.hpp"
#include "ndfo/core.hpp"
#include "ndfo/estimators.hpp"
#include "ndfo/testfns.hpp"

namespace ndfo {

// ---------------------------------------------------------------------------
// Relaxed Armijo backtracking
// ---------------------------------------------------------------------------

/// f_trial <= f_curr - c1 alpha ||g||^2 + 2 eps_f.
inline bool armijo_holds(double f_curr, double f_trial, double alpha, double g_norm_sq, double c1,
                         double eps_f) {
  return f_trial <= f_curr - c1 * alpha * g_norm_sq + 2.0 * eps_f;
}

struct LineSearchState {
  double alpha = 1.0;  // next trial start
  std::size_t backtracks_this_iter = 0;
  double alpha0 = 1.0;
  double alpha_min = 1e-12;
  double alpha_max = 1e3;
};

struct BacktrackResult {
  Vector x_next;
  double alpha = 0.0;
  double f_trial = 0.0;
  std::size_t trials = 0;
};

/// Tries alpha = state.alpha, tau * state.alpha, ... (never below alpha_min)
/// and returns the first step passing the relaxed Armijo test.
///
/// Throws StallError when alpha_min is crossed without acceptance and
/// BudgetExhausted when `max_trials` evaluations were spent.
inline BacktrackResult backtracking_step(Oracle& oracle, const Vector& x, const Vector& g, double f_curr,
                                         LineSearchState& state, double c1, double tau, double eps_f,
                                         std::size_t max_trials = std::numeric_limits<std::size_t>::max()) {
  if (!(tau > 0.0 && tau < 1.0)) throw UsageError("tau must lie in (0, 1)");
  if (!(c1 > 0.0 && c1 < 1.0)) throw UsageError("c1 must lie in (0, 1)");
  const double g_norm_sq = g.squaredNorm();
  if (!(g_norm_sq > 0.0)) throw UsageError("backtracking needs a nonzero search direction");

  state.backtracks_this_iter = 0;
  std::size_t trials = 0;
  for (double alpha = state.alpha; alpha >= state.alpha_min; alpha *= tau) {
    if (trials == max_trials) throw BudgetExhausted("evaluation budget exhausted during backtracking");
    Vector trial = x - alpha * g;
    const double f_trial = oracle.evaluate(trial);
    ++trials;
    if (armijo_holds(f_curr, f_trial, alpha, g_norm_sq, c1, eps_f)) {
      state.alpha = alpha;
      return {std::move(trial), alpha, f_trial, trials};
    }
    ++state.backtracks_this_iter;
  }
  throw StallError("relaxed Armijo condition not met above alpha_min", state.alpha_min, trials);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
  Vector m;
  Vector v;
  std::size_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;

  static AdamState zeros(std::size_t n) {
    AdamState s;
    s.m = Vector::Zero(static_cast<Eigen::Index>(n));
    s.v = Vector::Zero(static_cast<Eigen::Index>(n));
    return s;
  }
};

struct AdamUpdate {
  AdamState state;
  Vector step;
};

/// Bias-corrected Adam update; step = -alpha m_hat / (sqrt(v_hat) + eps_hat).
inline AdamUpdate adam_step(const AdamState& state, const Vector& g, double alpha) {
  if (state.m.size() != g.size() || state.v.size() != g.size())
    throw UsageError("adam state dimension does not match the gradient");
  AdamUpdate out{state, Vector()};
  AdamState& s = out.state;
  s.t += 1;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * g;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * g.cwiseProduct(g);
  const double t = static_cast<double>(s.t);
  const Vector m_hat = s.m / (1.0 - std::pow(s.beta1, t));
  const Vector v_hat = s.v / (1.0 - std::pow(s.beta2, t));
  out.step = -alpha * m_hat.cwiseQuotient((v_hat.array().sqrt() + s.eps_hat).matrix());
  return out;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

enum class StepperKind { line_search, fixed_step, adam };

inline std::string_view to_string(StepperKind kind) {
  switch (kind) {
    case StepperKind::line_search: return "line_search";
    case StepperKind::fixed_step: return "fixed_step";
    case StepperKind::adam: return "adam";
  }
  return "?";
}

inline StepperKind parse_stepper_kind(std::string_view name) {
  if (name == "line_search") return StepperKind::line_search;
  if (name == "fixed_step") return StepperKind::fixed_step;
  if (name == "adam") return StepperKind::adam;
  throw UsageError("unknown stepper '" + std::string(name) + "'");
}

struct StepperConfig {
  StepperKind kind = StepperKind::line_search;
  // line search
  double c1 = 0.2;
  double tau = 0.3;
  double alpha0 = 1.0;
  double alpha_min = 1e-12;
  double alpha_max = 1e3;
  double eps_f = 0.0;  // noise bound used in the relaxed Armijo test
  // fixed step and adam
  double alpha = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

/// Sets sigma each iteration to the midpoint of the admissible radius range
/// computed from the true gradient norm. Test functions only.
struct AdaptiveSigma {
  double theta = 0.25;
  ProblemConstants constants;
};

struct GroundTruth {
  ScalarFunction value;
  GradientFunction gradient;

  static GroundTruth of(const TestFunction& fn) { return {fn.value, fn.gradient}; }
};

struct MinimizeOptions {
  std::uint64_t budget = 0;  // max oracle evaluations for the run
  std::size_t max_iterations = std::numeric_limits<std::size_t>::max();
  double g_tolerance = 1e-12;
  std::optional<AdaptiveSigma> adaptive_sigma;
  std::optional<GroundTruth> truth;
};

enum class TerminationStatus { running, budget_exhausted, noise_floor, gradient_tolerance, max_iterations, error };

inline std::string_view to_string(TerminationStatus status) {
  switch (status) {
    case TerminationStatus::running: return "ok";
    case TerminationStatus::budget_exhausted: return "budget_exhausted";
    case TerminationStatus::noise_floor: return "noise_floor_reached";
    case TerminationStatus::gradient_tolerance: return "gradient_tolerance";
    case TerminationStatus::max_iterations: return "max_iterations";
    case TerminationStatus::error: return "error";
  }
  return "?";
}

inline constexpr double kUnknown = std::numeric_limits<double>::quiet_NaN();

/// One row per iterate x_k. Fields not measurable for a row are NaN.
struct TraceRecord {
  std::size_t k = 0;
  std::uint64_t evals = 0;          // cumulative, when the row was recorded
  double f = kUnknown;              // measured f(x_k)
  double phi = kUnknown;            // true phi(x_k)
  double grad_norm_true = kUnknown;
  double g_norm = kUnknown;
  double alpha = kUnknown;          // step taken from x_k
  double theta = kUnknown;          // ||g - grad|| / ||grad||
  double sigma = kUnknown;
  TerminationStatus status = TerminationStatus::running;
};

struct OptimizationTrace {
  std::vector<TraceRecord> records;
  TerminationStatus status = TerminationStatus::running;
  std::string message;
  Vector x_final;

  [[nodiscard]] std::size_t iterations() const noexcept { return records.empty() ? 0 : records.size() - 1; }
  [[nodiscard]] std::uint64_t evals() const noexcept { return records.empty() ? 0 : records.back().evals; }
};

/// Runs the iteration from x0 until the budget, a stall, a tiny estimate or
/// max_iterations ends it. A fresh direction set is drawn every iteration.
inline OptimizationTrace minimize(Oracle& oracle, const Vector& x0, const EstimatorConfig& estimator,
                                  const StepperConfig& stepper, const MinimizeOptions& options, RngStream& rng) {
  const std::size_t n = oracle.dimension();
  if (static_cast<std::size_t>(x0.size()) != n) throw UsageError("x0 dimension does not match the oracle");
  if (options.adaptive_sigma && !options.truth)
    throw UsageError("adaptive sigma needs the true gradient");
  const bool line_search = stepper.kind == StepperKind::line_search;
  const std::size_t per_estimate = evals_per_estimate(estimator, n);
  const std::size_t per_iteration =
      per_estimate + (line_search ? 1 : 0) + (line_search && estimator.kind == EstimatorKind::cGSG ? 1 : 0);
  if (options.budget < per_estimate + 1)
    throw UsageError("budget " + std::to_string(options.budget) + " is smaller than one estimator call plus one");
  if (line_search) {
    LineSearchConstants{stepper.c1, stepper.tau, 0.0, 0.5}.validate();
    if (!(stepper.alpha_min > 0.0 && stepper.alpha0 >= stepper.alpha_min && stepper.alpha_max >= stepper.alpha0))
      throw UsageError("line search needs 0 < alpha_min <= alpha0 <= alpha_max");
  }

  const std::uint64_t base = oracle.eval_count();
  auto used = [&] { return oracle.eval_count() - base; };

  OptimizationTrace trace;
  Vector x = x0;
  double f_known = kUnknown;
  LineSearchState ls{stepper.alpha0, 0, stepper.alpha0, stepper.alpha_min, stepper.alpha_max};
  std::optional<double> last_accepted;
  AdamState adam = AdamState::zeros(n);
  adam.beta1 = stepper.beta1;
  adam.beta2 = stepper.beta2;
  adam.eps_hat = stepper.eps_hat;

  auto finish = [&](TraceRecord rec, TerminationStatus status, std::string message = {}) {
    rec.status = status;
    rec.evals = used();
    trace.records.push_back(rec);
    trace.status = status;
    trace.message = std::move(message);
    trace.x_final = x;
  };

  for (std::size_t k = 0;; ++k) {
    TraceRecord rec;
    rec.k = k;
    rec.evals = used();
    rec.f = f_known;
    Vector true_grad;
    if (options.truth) {
      rec.phi = options.truth->value(x);
      true_grad = options.truth->gradient(x);
      rec.grad_norm_true = true_grad.norm();
    }

    if (k >= options.max_iterations) {
      finish(rec, TerminationStatus::max_iterations);
      break;
    }
    if (options.budget - used() < per_iteration) {
      finish(rec, TerminationStatus::budget_exhausted);
      break;
    }

    EstimatorConfig cfg = estimator;
    if (options.adaptive_sigma) {
      try {
        cfg.sigma = sigma_range(options.adaptive_sigma->theta, rec.grad_norm_true, n,
                                options.adaptive_sigma->constants)
                        .midpoint();
      } catch (const NoFeasibleSigma& e) {
        finish(rec, TerminationStatus::noise_floor, e.what());
        break;
      }
    }
    rec.sigma = cfg.sigma;

    GradientEstimate est;
    try {
      est = estimate_gradient(oracle, x, cfg, rng);
    } catch (const Error& e) {
      finish(rec, TerminationStatus::error, e.what());
      break;
    }
    if (est.f_center) rec.f = *est.f_center;
    rec.g_norm = est.g.norm();
    if (options.truth && rec.grad_norm_true > 0.0) rec.theta = relative_error(est.g, true_grad);

    if (!(rec.g_norm >= options.g_tolerance)) {
      finish(rec, TerminationStatus::gradient_tolerance);
      break;
    }

    Vector x_next;
    switch (stepper.kind) {
      case StepperKind::line_search: {
        try {
          if (std::isnan(rec.f)) rec.f = oracle.evaluate(x);
          ls.alpha = last_accepted ? std::min(stepper.alpha_max, *last_accepted / stepper.tau) : stepper.alpha0;
          auto step = backtracking_step(oracle, x, est.g, rec.f, ls, stepper.c1, stepper.tau, stepper.eps_f,
                                        options.budget - used());
          last_accepted = step.alpha;
          rec.alpha = step.alpha;
          x_next = std::move(step.x_next);
          f_known = step.f_trial;
        } catch (const StallError& e) {
          finish(rec, TerminationStatus::noise_floor, e.what());
        } catch (const BudgetExhausted& e) {
          finish(rec, TerminationStatus::budget_exhausted, e.what());
        } catch (const Error& e) {
          finish(rec, TerminationStatus::error, e.what());
        }
        break;
      }
      case StepperKind::fixed_step:
        rec.alpha = stepper.alpha;
        x_next = x - stepper.alpha * est.g;
        f_known = kUnknown;
        break;
      case StepperKind::adam: {
        auto update = adam_step(adam, est.g, stepper.alpha);
        adam = std::move(update.state);
        rec.alpha = stepper.alpha;
        x_next = x + update.step;
        f_known = kUnknown;
        break;
      }
    }
    if (trace.status != TerminationStatus::running) break;

    rec.evals = used();
    trace.records.push_back(rec);
    x = std::move(x_next);
  }
  return trace;
}

}  // namespace ndfo

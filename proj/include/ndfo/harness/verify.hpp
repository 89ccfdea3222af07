#pragma once

// Empirical checks of the closed-form bounds. Every check reports its measured
// value, the limit it is held to and pass/fail; hard-bound failures carry the
// instance that broke them.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ndfo/bounds.hpp"
#include "ndfo/directions.hpp"
#include "ndfo/estimators.hpp"
#include "ndfo/harness/config.hpp"
#include "ndfo/harness/csv.hpp"
#include "ndfo/optimizer.hpp"
#include "ndfo/testfns.hpp"

namespace ndfo::harness {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = kUnknown;
  double limit = kUnknown;
  std::size_t trials = 0;
  std::size_t violations = 0;
  std::string detail;
  json witness;  // null unless a violation was seen

  /// limit - measured; positive means room to spare.
  [[nodiscard]] double margin() const { return limit - measured; }
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  std::vector<std::string> files;

  [[nodiscard]] bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
  [[nodiscard]] const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector random_box_point(std::size_t n, double radius, RngStream& rng) {
  Vector x(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(-radius, radius);
  return x;
}

inline Vector random_unit(std::size_t n, RngStream& rng) {
  Vector w(static_cast<Eigen::Index>(n));
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.normal();
    norm = w.norm();
  } while (norm == 0.0);
  return w / norm;
}

/// |f - phi| <= eps_f for every noise kind.
inline CheckResult check_noise_bound(const VerifySpec& spec, std::uint64_t seed) {
  CheckResult out;
  out.name = "noise_bound";
  out.limit = spec.eps_f;
  out.measured = 0.0;
  const NoiseKind kinds[] = {NoiseKind::uniform, NoiseKind::sinusoidal, NoiseKind::adversarial_sign};
  constexpr std::size_t dim = 3;
  for (const auto kind : kinds) {
    NoiseModel noise{kind, spec.eps_f, detail::mix(seed, static_cast<std::uint64_t>(kind))};
    Oracle oracle([](const Vector&) { return 0.0; }, dim, noise);
    RngStream rng(seed, 100 + static_cast<std::uint64_t>(kind));
    for (std::size_t s = 0; s < spec.noise_samples; ++s) {
      const Vector x = random_box_point(dim, 10.0, rng);
      const double e = std::abs(oracle.evaluate(x));
      ++out.trials;
      out.measured = std::max(out.measured, e);
      if (e > spec.eps_f) {
        if (out.violations++ == 0)
          out.witness = {{"noise", std::string(to_string(kind))}, {"x", to_json(x)}, {"call_index", s},
                         {"noise_seed", noise.seed}, {"abs_noise", e}};
      }
    }
  }
  out.passed = out.violations == 0;
  out.detail = "max |f - phi| over uniform, sinusoidal and adversarial_sign noise";
  return out;
}

/// ||g - grad phi|| <= sqrt(n) sigma L / 2 + 2 sqrt(n) eps_f / sigma for
/// orthonormal and coordinate interpolation. The bound uses the declared
/// noise level; the oracle injects spec.eps_f.
inline CheckResult check_interpolation_bound(const VerifySpec& spec, std::uint64_t seed) {
  CheckResult out;
  out.name = "interpolation_bound";
  const double declared = spec.declared_eps_f.value_or(spec.eps_f);
  const std::vector<TestFunction> functions{make_function("sin_n10_m2"), make_function("quad_n10")};
  const double sigmas[] = {1e-2, 1e-4};
  const EstimatorKind kinds[] = {EstimatorKind::LIOD, EstimatorKind::FD};
  const NoiseKind noises[] = {NoiseKind::uniform, NoiseKind::adversarial_sign};
  constexpr double kRelativeSlack = 1e-9;

  double worst_ratio = 0.0;
  for (std::size_t t = 0; t < spec.interpolation_trials; ++t) {
    const auto& fn = functions[t % 2];
    const double sigma = sigmas[(t / 2) % 2];
    const auto kind = kinds[(t / 4) % 2];
    const auto noise_kind = noises[(t / 8) % 2];
    const std::uint64_t trial_seed = detail::mix(seed, t);
    RngStream rng(trial_seed, 0);
    const Vector x = random_box_point(fn.n, 2.0, rng);
    Oracle oracle(fn.value, fn.n, NoiseModel{noise_kind, spec.eps_f, detail::mix(trial_seed, 1)});
    const auto est = estimate_gradient(oracle, x, EstimatorConfig{kind, sigma, fn.n}, rng);
    const Vector grad = fn.gradient(x);
    const double err = (est.g - grad).norm();
    ProblemConstants p = fn.constants;
    p.eps_f = declared;
    const double bound = interpolation_error_bound(sigma, fn.n, p);
    ++out.trials;
    worst_ratio = std::max(worst_ratio, err / bound);
    if (err > bound * (1.0 + kRelativeSlack)) {
      if (out.violations++ == 0)
        out.witness = {{"function", fn.name},
                       {"estimator", std::string(to_string(kind))},
                       {"noise", std::string(to_string(noise_kind))},
                       {"injected_eps_f", spec.eps_f},
                       {"declared_eps_f", declared},
                       {"sigma", sigma},
                       {"trial", t},
                       {"seed", trial_seed},
                       {"x", to_json(x)},
                       {"g", to_json(est.g)},
                       {"grad", to_json(grad)},
                       {"error", err},
                       {"bound", bound}};
    }
  }
  out.measured = worst_ratio;
  out.limit = 1.0 + kRelativeSlack;
  out.passed = out.violations == 0;
  out.detail = "max ||g - grad|| / bound over trials";
  return out;
}

/// Largest eigenvalue of the sample covariance of GSG <= kappa.
inline CheckResult check_variance_domination(const VerifySpec& spec, std::uint64_t seed) {
  CheckResult out;
  out.name = "variance_domination";
  const std::size_t dims[] = {2, 4};
  const std::size_t counts[] = {1, 4};
  constexpr double sigma = 0.5;
  double worst_ratio = 0.0;
  json cases = json::array();
  for (const auto n : dims) {
    const auto fn = sine_sum(n);
    const double L_f = *fn.constants.L_f;
    for (const auto N : counts) {
      RngStream rng(seed, detail::mix(n, N));
      const Vector x = random_box_point(n, 2.0, rng);
      Oracle oracle(fn.value, n);
      const auto dim = static_cast<Eigen::Index>(n);
      Vector mean = Vector::Zero(dim);
      Matrix second = Matrix::Zero(dim, dim);
      for (std::size_t r = 0; r < spec.variance_replications; ++r) {
        const Vector g = gsg(oracle, x, sigma, gaussian_directions(n, N, rng)).g;
        mean += g;
        second += g * g.transpose();
      }
      const double R = static_cast<double>(spec.variance_replications);
      mean /= R;
      const Matrix cov = (second - R * mean * mean.transpose()) / (R - 1.0);
      const double top = Eigen::SelfAdjointEigenSolver<Matrix>(cov).eigenvalues().maxCoeff();
      const double kappa = gsg_variance_bound(fn.gradient(x).norm(), L_f, n, N);
      ++out.trials;
      worst_ratio = std::max(worst_ratio, top / kappa);
      cases.push_back({{"n", n}, {"N", N}, {"max_eigenvalue", top}, {"kappa", kappa}});
      if (top > kappa && out.violations++ == 0)
        out.witness = {{"n", n}, {"N", N}, {"x", to_json(x)}, {"max_eigenvalue", top}, {"kappa", kappa}};
    }
  }
  out.measured = worst_ratio;
  out.limit = 1.0;
  out.passed = out.violations == 0;
  out.detail = "max over (n, N) of lambda_max(cov) / kappa; cases " + cases.dump();
  return out;
}

/// With N from the sample-size formula, P(||g - grad|| > theta ||grad||) <= delta.
inline CheckResult check_sample_size(const VerifySpec& spec, std::uint64_t seed) {
  CheckResult out;
  out.name = "sample_size";
  constexpr std::size_t n = 4;
  constexpr double sigma = 1e-3;
  const auto fn = sine_sum(n);
  const Vector x = Vector::Zero(n);
  const Vector grad = fn.gradient(x);
  const double r = spec.theta * grad.norm();
  const std::size_t N = gsg_sample_size(grad.norm(), *fn.constants.L_f, n, spec.delta, r);
  Oracle oracle(fn.value, n);
  RngStream rng(seed, 7);
  for (std::size_t t = 0; t < spec.sample_size_trials; ++t) {
    const Vector g = gsg(oracle, x, sigma, gaussian_directions(n, N, rng)).g;
    ++out.trials;
    if ((g - grad).norm() > r) ++out.violations;
  }
  out.measured = static_cast<double>(out.violations) / static_cast<double>(out.trials);
  out.limit = spec.delta;
  out.passed = out.measured <= out.limit;
  out.detail = "violation frequency with N = " + std::to_string(N) + " on sine_sum(n=4) at the origin";
  return out;
}

/// The seven Gaussian moment identities at 3 standard errors.
inline CheckResult check_moment_identities(const VerifySpec& spec, std::uint64_t seed) {
  CheckResult out;
  out.name = "moment_identities";
  constexpr double kStandardErrors = 3.0;
  double worst = 0.0;
  for (const auto n : spec.moment_dims) {
    RngStream a_rng(seed, 1000 + n);
    Vector a(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = a_rng.normal();
    for (int id = 1; id <= kMomentIdentityCount; ++id) {
      RngStream rng(seed, detail::mix(n, static_cast<std::uint64_t>(id)));
      const auto check = moment_identity_check(id, n, a, spec.moment_samples, rng);
      const double ratio = check.max_deviation / check.max_standard_error;
      ++out.trials;
      worst = std::max(worst, ratio);
      if (!check.within(kStandardErrors) && out.violations++ == 0)
        out.witness = {{"identity", id}, {"n", n}, {"a", to_json(a)}, {"max_deviation", check.max_deviation},
                       {"max_standard_error", check.max_standard_error}};
    }
  }
  out.measured = worst;
  out.limit = kStandardErrors;
  out.passed = out.violations == 0;
  out.detail = "max |empirical - exact| in units of the largest standard error";
  return out;
}

/// Under the norm condition: every alpha <= alpha_bar passes the relaxed
/// Armijo test, the backtracking search accepts alpha > tau alpha_bar, and
/// phi decreases by at least eta ||grad||^2 - 4 eps_f.
inline CheckResult check_decrease_guarantee(const VerifySpec& spec, std::uint64_t seed) {
  CheckResult out;
  out.name = "decrease_guarantee";
  const auto fn = make_function("quad_n10");
  const double L = *fn.constants.L;
  const LineSearchConstants c{0.2, 0.3, spec.theta, 0.5};
  c.validate();
  const double abar = alpha_bar(c, L);
  const double eta_value = eta(c, L);
  const double eps = spec.eps_f;
  double worst_slack = std::numeric_limits<double>::infinity();

  auto violate = [&](const char* what, std::size_t t, const Vector& x, const Vector& g, double alpha) {
    if (out.violations++ == 0)
      out.witness = {{"condition", what}, {"trial", t}, {"x", to_json(x)}, {"g", to_json(g)}, {"alpha", alpha},
                     {"alpha_bar", abar}};
  };

  for (std::size_t t = 0; t < spec.decrease_trials; ++t) {
    RngStream rng(seed, detail::mix(77, t));
    Oracle oracle(fn.value, fn.n, NoiseModel{NoiseKind::uniform, eps, detail::mix(seed, t)});
    const Vector x = random_box_point(fn.n, 2.0, rng);
    const Vector grad = fn.gradient(x);
    const Vector g = grad + spec.theta * grad.norm() * rng.uniform() * random_unit(fn.n, rng);
    const double f_x = oracle.evaluate(x);
    ++out.trials;

    const double alpha = abar * (1.0 - rng.uniform());  // (0, alpha_bar]
    const double f_trial = oracle.evaluate(x - alpha * g);
    if (!armijo_holds(f_x, f_trial, alpha, g.squaredNorm(), c.c1, eps)) violate("armijo_below_alpha_bar", t, x, g, alpha);

    LineSearchState state{1.0, 0, 1.0, 1e-12, 1e3};
    const auto step = backtracking_step(oracle, x, g, f_x, state, c.c1, c.tau, eps);
    if (!(step.alpha > c.tau * abar)) violate("accepted_alpha_above_tau_alpha_bar", t, x, g, step.alpha);

    const double required = fn.value(x) - eta_value * grad.squaredNorm() + 4.0 * eps;
    const double slack = required - fn.value(step.x_next);
    worst_slack = std::min(worst_slack, slack);
    if (slack < 0.0) violate("phi_decrease", t, x, g, step.alpha);
  }
  out.measured = -worst_slack;
  out.limit = 0.0;
  out.passed = out.violations == 0;
  out.detail = "alpha_bar = " + format_double(abar) + ", eta = " + format_double(eta_value) +
               "; measured is -(smallest decrease slack)";
  return out;
}

inline const std::vector<std::pair<std::string, std::function<CheckResult(const VerifySpec&, std::uint64_t)>>>&
verify_checks() {
  static const std::vector<std::pair<std::string, std::function<CheckResult(const VerifySpec&, std::uint64_t)>>>
      checks{{"noise_bound", check_noise_bound},
             {"interpolation_bound", check_interpolation_bound},
             {"variance_domination", check_variance_domination},
             {"sample_size", check_sample_size},
             {"moment_identities", check_moment_identities},
             {"decrease_guarantee", check_decrease_guarantee}};
  return checks;
}

inline json to_json(const CheckResult& c) {
  json out = {{"name", c.name},          {"passed", c.passed},         {"measured", c.measured},
              {"limit", c.limit},        {"margin", c.margin()},       {"trials", c.trials},
              {"violations", c.violations}, {"detail", c.detail}};
  if (!c.witness.is_null()) out["witness"] = c.witness;
  return out;
}

/// Seed a check receives under a given experiment seed.
inline std::uint64_t check_seed(std::uint64_t seed, const std::string& name) {
  return detail::mix(seed, detail::fnv1a64(name));
}

/// Runs the selected checks (all when the list is empty) in a fixed order.
inline VerifyReport run_verify_bounds(const ExperimentConfig& cfg, const std::string& out_dir = {}) {
  const auto& wanted = cfg.verify.checks;
  std::vector<std::size_t> selected;
  const auto& all = verify_checks();
  for (std::size_t i = 0; i < all.size(); ++i)
    if (wanted.empty() || std::find(wanted.begin(), wanted.end(), all[i].first) != wanted.end()) selected.push_back(i);

  VerifyReport report;
  report.checks.resize(selected.size());
  parallel_for(selected.size(), cfg.jobs, [&](std::size_t i) {
    const auto& [name, fn] = all[selected[i]];
    report.checks[i] = fn(cfg.verify, check_seed(cfg.seed, name));
  });

  if (out_dir.empty()) return report;
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);

  json doc = {{"config_hash", hex64(cfg.hash())}, {"experiment_id", cfg.experiment_id}, {"seed", cfg.seed},
              {"passed", report.passed()}, {"checks", json::array()}};
  for (const auto& c : report.checks) doc["checks"].push_back(to_json(c));
  const auto json_file = (dir / "verify_report.json").string();
  {
    std::ofstream file(json_file, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot open '" + json_file + "' for writing");
    file << doc.dump(2) << '\n';
  }
  CsvDocument summary(cfg.provenance(), {"experiment_id", "check", "passed", "measured", "limit", "margin",
                                         "trials", "violations"});
  for (const auto& c : report.checks)
    summary.row() << cfg.experiment_id << c.name << (c.passed ? "pass" : "fail") << c.measured << c.limit
                  << c.margin() << c.trials << c.violations;
  const auto csv_file = (dir / "verify_summary.csv").string();
  summary.write(csv_file);
  report.files = {json_file, csv_file};
  return report;
}

}  // namespace ndfo::harness

// Acceptance gate. One PASS/FAIL line per criterion; exit status is the
// number of failures. Tolerances and runtime limits are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ndfo/harness.hpp"
#include "ndfo/ndfo.hpp"

using namespace ndfo;
using namespace ndfo::harness;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double mean_log10(const AccuracyResult& r, EstimatorKind kind, std::size_t factor, std::size_t n_of_record = 0) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& rec : r.records) {
    if (rec.estimator != kind || rec.status != "ok") continue;
    if (factor && rec.N != factor * rec.n) continue;
    if (n_of_record && rec.n != n_of_record) continue;
    sum += rec.log10_theta();
    ++count;
  }
  return count ? sum / static_cast<double>(count) : NAN;
}

// Checks run under the seed `ndfo verify-bounds` uses with its default config.
std::uint64_t default_seed(const std::string& check) { return check_seed(0, check); }

// Points are standard normal: with |f(x)| large, cancellation in
// f(x + sigma u) - f(x) alone reaches 1e-12 at n = 100.
Outcome exactness() {
  constexpr double kTol = 1e-12;
  double worst = 0.0;
  for (std::size_t n : {2, 10, 100}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      RngStream rng(seed, n);
      Vector a(static_cast<Eigen::Index>(n)), x(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.normal();
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
      const auto fn = linear(a);
      Oracle oracle(fn.value, n);
      const auto est = estimate_gradient(oracle, x, EstimatorConfig{EstimatorKind::LIOD, 1e-2, n}, rng);
      worst = std::max(worst, relative_error(est.g, fn.gradient(x)));
    }
  }
  return {worst <= kTol, "max theta=" + fmt(worst) + " limit=" + fmt(kTol) + " over n in {2,10,100} x 100 seeds"};
}

Outcome interpolation_bound() {
  VerifySpec spec;
  spec.interpolation_trials = 1000;
  spec.eps_f = 1e-3;
  const auto c = check_interpolation_bound(spec, default_seed("interpolation_bound"));
  return {c.passed && c.trials == 1000, "worst error/bound=" + fmt(c.measured) + " limit=" + fmt(c.limit) +
                                            " violations=" + std::to_string(c.violations) + "/" +
                                            std::to_string(c.trials)};
}

Outcome corpus_trend() {
  constexpr double kLiodMax = -2.0, kGsgMin = -1.0, kGap = 1.5;
  const auto cfg = parse_config(json::parse(R"({"functions":["corpus"],"estimators":["LIOD","GSG"],
      "sigmas":[1e-5],"trials":20,"seed":2024})"),
                                ExperimentKind::grad_accuracy);
  const auto r = run_gradient_accuracy(cfg);
  const double liod = mean_log10(r, EstimatorKind::LIOD, 1);
  const double gsg_mean = mean_log10(r, EstimatorKind::GSG, 1);
  const bool ok = liod <= kLiodMax && gsg_mean >= kGsgMin && gsg_mean - liod >= kGap;
  return {ok, "mean log10 theta LIOD=" + fmt(liod) + " GSG=" + fmt(gsg_mean) + " gap=" + fmt(gsg_mean - liod) +
                  " limits LIOD<=" + fmt(kLiodMax) + " GSG>=" + fmt(kGsgMin) + " gap>=" + fmt(kGap)};
}

Outcome sample_scaling() {
  constexpr double kLo = 1.2, kHi = 1.7;
  const auto cfg = parse_config(json::parse(R"({"functions":["sin_n20"],"estimators":["GSG"],"sigmas":[1e-5],
      "sample_factors":[1,2],"trials":200,"seed":7})"),
                                ExperimentKind::grad_accuracy);
  const auto r = run_gradient_accuracy(cfg);
  double med1 = NAN, med2 = NAN;
  for (const auto& s : r.summaries) (s.N == 20 ? med1 : med2) = s.median_theta;
  const double ratio = med1 / med2;
  return {ratio >= kLo && ratio <= kHi, "median theta N=n " + fmt(med1) + " N=2n " + fmt(med2) + " ratio=" +
                                            fmt(ratio) + " range [" + fmt(kLo) + ", " + fmt(kHi) + "]"};
}

Outcome variance_domination() {
  VerifySpec spec;
  spec.variance_replications = 100000;
  const auto c = check_variance_domination(spec, default_seed("variance_domination"));
  return {c.passed, "max lambda_max/kappa=" + fmt(c.measured) + " limit=1 cases=" + std::to_string(c.trials)};
}

Outcome sample_size() {
  VerifySpec spec;
  spec.sample_size_trials = 1000;
  spec.delta = 0.1;
  spec.theta = 0.4;
  const auto c = check_sample_size(spec, default_seed("sample_size"));
  return {c.passed && c.trials == 1000,
          "violation frequency=" + fmt(c.measured) + " limit=" + fmt(c.limit) + " (" + c.detail + ")"};
}

// Adaptive sigma keeps theta_k <= theta at every iterate, which is the
// hypothesis of the certificate.
Outcome strong_convexity() {
  constexpr double kTheta = 0.25;
  const auto fn = quadratic(10, 1.0, 10.0);
  const LineSearchConstants c{0.2, 0.3, kTheta, 0.5};
  double worst = -INFINITY;
  std::size_t iterations = 0;
  double worst_theta = 0.0;
  for (double eps : {0.0, 1e-4}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      Oracle oracle(fn.value, 10, NoiseModel{NoiseKind::uniform, eps, detail::mix(seed, 1)});
      RngStream rng(seed, 3);
      Vector x0(10);
      for (Eigen::Index i = 0; i < 10; ++i) x0(i) = rng.normal();
      StepperConfig sc;
      sc.eps_f = eps;
      MinimizeOptions options;
      options.budget = 12000;
      options.truth = GroundTruth::of(fn);
      ProblemConstants p = fn.constants;
      p.eps_f = eps;
      options.adaptive_sigma = AdaptiveSigma{kTheta, p};
      const auto trace = minimize(oracle, x0, EstimatorConfig{EstimatorKind::LIOD, 1.0, 10}, sc, options, rng);
      const double gap0 = trace.records.front().phi;
      for (const auto& rec : trace.records) {
        const auto cert = strongly_convex_certificate(p, c, 0, gap0);
        const double bound = std::pow(cert.rho, static_cast<double>(rec.k)) * gap0 + 4.0 * eps / (1.0 - cert.rho);
        worst = std::max(worst, rec.phi / bound);
        if (!std::isnan(rec.theta)) worst_theta = std::max(worst_theta, rec.theta);
      }
      iterations += trace.iterations();
    }
  }
  return {worst <= 1.0 && worst_theta <= kTheta,
          "max gap/bound=" + fmt(worst) + " limit=1 max theta_k=" + fmt(worst_theta) + " iterations=" +
              std::to_string(iterations)};
}

Outcome nonconvex() {
  constexpr double kTheta = 0.25;
  const auto fn = rosenbrock(4);
  const LineSearchConstants c{0.2, 0.3, kTheta, 0.5};
  Vector x0(4);
  x0 << -1.2, 1, -1.2, 1;
  Oracle oracle(fn.value, 4);
  RngStream rng(8, 1);
  MinimizeOptions options;
  options.budget = 100000;
  options.max_iterations = 100;
  options.truth = GroundTruth::of(fn);
  options.adaptive_sigma = AdaptiveSigma{kTheta, fn.constants};
  const auto trace = minimize(oracle, x0, EstimatorConfig{EstimatorKind::LIOD, 1.0, 4}, StepperConfig{}, options, rng);
  if (trace.iterations() < 100) return {false, "run stopped after " + std::to_string(trace.iterations()) + " iterations"};
  double worst_theta = 0.0, box = 0.0;
  for (const auto& rec : trace.records)
    if (!std::isnan(rec.theta)) worst_theta = std::max(worst_theta, rec.theta);
  box = trace.x_final.cwiseAbs().maxCoeff();
  std::string detail;
  bool ok = worst_theta <= kTheta;
  for (std::size_t T : {10, 100}) {
    double sum = 0.0;
    for (std::size_t k = 0; k < T; ++k) sum += std::pow(trace.records[k].grad_norm_true, 2);
    const double avg = sum / static_cast<double>(T);
    const double bound = nonconvex_avg_bound(fn.constants, c, T, trace.records.front().phi);
    ok = ok && avg <= bound;
    detail += "T=" + std::to_string(T) + " avg=" + fmt(avg) + " bound=" + fmt(bound) + " ";
  }
  return {ok, detail + "max theta_k=" + fmt(worst_theta) + " |x_final|_inf=" + fmt(box)};
}

Outcome moments() {
  VerifySpec spec;
  spec.moment_samples = 1000000;
  spec.moment_dims = {1, 3, 5};
  const auto c = check_moment_identities(spec, default_seed("moment_identities"));
  return {c.passed && c.trials == 21,
          "worst deviation=" + fmt(c.measured) + " SE limit=" + fmt(c.limit) + " checks=" + std::to_string(c.trials)};
}

Outcome anchor() {
  constexpr double kTol = 1e-9;
  const double norm = synthetic_sin(100, 1.0, 8.0).gradient(Vector::Zero(100)).norm();
  const double err = std::abs(norm - std::sqrt(50.0));
  return {err <= kTol, "||grad(0)||=" + fmt(norm) + " |diff|=" + fmt(err) + " limit=" + fmt(kTol)};
}

Outcome determinism() {
  const auto cfg = parse_config(json::parse(R"({"functions":["corpus"],"estimators":["GSG","cGSG","LIOD","FD"],
      "sigmas":[1e-3],"trials":5,"seed":31,"noise":{"kind":"uniform","bound":1e-6}})"),
                                ExperimentKind::grad_accuracy);
  const auto base = fs::temp_directory_path() / "ndfo_acceptance_determinism";
  fs::remove_all(base);
  run_gradient_accuracy(cfg, (base / "a").string());
  run_gradient_accuracy(cfg, (base / "b").string());
  bool same = true;
  std::size_t bytes = 0;
  for (const char* f : {"accuracy.csv", "accuracy_summary.csv"}) {
    const auto a = slurp(base / "a" / f);
    same = same && !a.empty() && a == slurp(base / "b" / f);
    bytes += a.size();
  }
  fs::remove_all(base);
  return {same, std::string(same ? "identical" : "different") + " outputs, " + std::to_string(bytes) + " bytes"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "interpolation exact on linear functions", 5, exactness},
      {2, "interpolation error bound holds", 30, interpolation_bound},
      {3, "corpus accuracy trend LIOD vs GSG", 60, corpus_trend},
      {4, "GSG error shrinks with 2n samples", 30, sample_scaling},
      {5, "GSG covariance dominated by kappa", 60, variance_domination},
      {6, "sample size meets tail probability", 60, sample_size},
      {7, "strongly convex certificate", 10, strong_convexity},
      {8, "nonconvex average gradient certificate", 10, nonconvex},
      {9, "Gaussian moment identities", 60, moments},
      {10, "synthetic_sin gradient anchor", 1, anchor},
      {11, "grad-accuracy output determinism", 10, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.time_limit_s;
    const bool passed = out.passed && in_time;
    failures += !passed;
    std::printf("%s AC%d %s: %s time=%.2fs limit=%.0fs%s\n", passed ? "PASS" : "FAIL", c.id, c.name.c_str(),
                out.detail.c_str(), secs, c.time_limit_s, in_time ? "" : " (too slow)");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures;
}

#pragma once

// Optimization runs: one trace per (function, method, seed) plus an aggregate
// with the mean and min/max envelope of phi per iteration.

#include <algorithm>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "ndfo/harness/config.hpp"
#include "ndfo/harness/csv.hpp"
#include "ndfo/optimizer.hpp"
#include "ndfo/testfns.hpp"

namespace ndfo::harness {

struct RunSpec {
  std::size_t function = 0;
  std::size_t method = 0;
  std::uint64_t seed = 0;
};

struct OptimizationRun {
  std::string function;
  std::string method;
  std::uint64_t seed = 0;
  OptimizationTrace trace;
  std::string file;
};

struct OptimizationResult {
  std::vector<OptimizationRun> runs;
  std::vector<std::string> files;  // traces in run order, aggregate last
};

inline const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols{"k", "evals", "f", "phi", "grad_norm_true",
                                             "g_norm", "alpha", "theta_k", "status"};
  return cols;
}

inline const std::vector<std::string>& aggregate_columns() {
  static const std::vector<std::string> cols{"experiment_id", "function", "method",  "k",       "runs",
                                             "active",        "evals_mean", "phi_mean", "phi_min", "phi_max"};
  return cols;
}

inline std::uint64_t default_budget(std::size_t n) { return 1000 * (static_cast<std::uint64_t>(n) + 2); }

inline std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  std::replace(text.begin(), text.end(), '\r', ' ');
  return text;
}

/// Everything needed to run one method on one function.
struct MethodSetup {
  EstimatorConfig estimator;
  StepperConfig stepper;
  MinimizeOptions options;
};

inline MethodSetup method_setup(const ExperimentConfig& cfg, const MethodSpec& m, const TestFunction& fn) {
  MethodSetup s;
  s.estimator = EstimatorConfig{m.estimator, m.sigma, m.sample_factor * fn.n};
  s.stepper = cfg.stepper;
  s.stepper.kind = m.stepper;
  if (m.alpha) s.stepper.alpha = *m.alpha;
  s.options.budget = cfg.budget ? cfg.budget : default_budget(fn.n);
  if (cfg.max_iterations) s.options.max_iterations = cfg.max_iterations;
  s.options.truth = GroundTruth::of(fn);
  if (m.adaptive_theta) {
    ProblemConstants constants = fn.constants;
    constants.eps_f = cfg.noise.bound;
    s.options.adaptive_sigma = AdaptiveSigma{*m.adaptive_theta, constants};
  }
  return s;
}

/// Stream layout for one run: x0 and noise depend on (seed, function) so all
/// methods start from the same point under the same noise realization;
/// directions also depend on the method.
inline std::uint64_t run_base_seed(std::uint64_t seed, const std::string& function) {
  return detail::mix(seed, detail::fnv1a64(function));
}

inline OptimizationTrace run_one(const ExperimentConfig& cfg, const MethodSpec& m, const TestFunction& fn,
                                 std::uint64_t seed) {
  const auto setup = method_setup(cfg, m, fn);
  const std::uint64_t base = run_base_seed(seed, fn.name);
  RngStream x0_rng(base, 0);
  const Vector x0 = make_point(cfg.x0, fn.n, x0_rng);
  NoiseModel noise = cfg.noise;
  noise.seed = detail::mix(base, 1);
  Oracle oracle(fn.value, fn.n, noise);
  RngStream dir_rng(base, detail::fnv1a64(m.name));
  return minimize(oracle, x0, setup.estimator, setup.stepper, setup.options, dir_rng);
}

inline std::string trace_file_name(const std::string& function, const std::string& method, std::uint64_t seed) {
  return "trace_" + function + "_" + method + "_seed" + std::to_string(seed) + ".csv";
}

inline OptimizationResult run_optimization(const ExperimentConfig& cfg, const std::string& out_dir = {}) {
  if (cfg.functions.empty() || cfg.methods.empty() || cfg.seeds.empty())
    throw ConfigError("optimize needs non-empty functions, methods and seeds");
  std::vector<TestFunction> functions;
  for (const auto& name : cfg.functions) functions.push_back(make_function(name));

  // Budget feasibility is a config property; check it before running anything.
  for (const auto& fn : functions) {
    for (const auto& m : cfg.methods) {
      const auto setup = method_setup(cfg, m, fn);
      const std::size_t need = evals_per_estimate(setup.estimator, fn.n) + 1;
      if (setup.options.budget < need)
        throw ConfigError("budget " + std::to_string(setup.options.budget) + " cannot cover one iteration of '" +
                          m.name + "' on " + fn.name + " (needs " + std::to_string(need) + ")");
    }
  }

  std::vector<RunSpec> specs;
  for (std::size_t f = 0; f < functions.size(); ++f)
    for (std::size_t m = 0; m < cfg.methods.size(); ++m)
      for (const auto seed : cfg.seeds) specs.push_back({f, m, seed});

  OptimizationResult result;
  result.runs.resize(specs.size());
  parallel_for(specs.size(), cfg.jobs, [&](std::size_t i) {
    const auto& s = specs[i];
    auto& run = result.runs[i];
    run.function = functions[s.function].name;
    run.method = cfg.methods[s.method].name;
    run.seed = s.seed;
    run.trace = run_one(cfg, cfg.methods[s.method], functions[s.function], s.seed);
  });

  if (out_dir.empty()) return result;
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);

  for (auto& run : result.runs) {
    CsvDocument doc(cfg.provenance() + " function=" + run.function + " method=" + run.method +
                        " seed=" + std::to_string(run.seed) + " termination=" +
                        std::string(to_string(run.trace.status)) +
                        (run.trace.message.empty() ? "" : " message=" + one_line(run.trace.message)),
                    trace_columns());
    for (const auto& r : run.trace.records)
      doc.row() << r.k << r.evals << r.f << r.phi << r.grad_norm_true << r.g_norm << r.alpha << r.theta
                << to_string(r.status);
    run.file = (dir / trace_file_name(run.function, run.method, run.seed)).string();
    doc.write(run.file);
    result.files.push_back(run.file);
  }

  // Finished runs carry their last value forward so the envelope spans the
  // longest run.
  CsvDocument aggregate(cfg.provenance(), aggregate_columns());
  for (std::size_t f = 0; f < functions.size(); ++f) {
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      std::vector<const OptimizationTrace*> traces;
      for (std::size_t i = 0; i < specs.size(); ++i)
        if (specs[i].function == f && specs[i].method == m) traces.push_back(&result.runs[i].trace);
      std::size_t longest = 0;
      for (const auto* t : traces) longest = std::max(longest, t->records.size());
      for (std::size_t k = 0; k < longest; ++k) {
        double sum = 0.0;
        double evals = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        std::size_t active = 0;
        for (const auto* t : traces) {
          const auto& r = t->records[std::min(k, t->records.size() - 1)];
          if (k < t->records.size()) ++active;
          sum += r.phi;
          evals += static_cast<double>(r.evals);
          lo = std::min(lo, r.phi);
          hi = std::max(hi, r.phi);
        }
        const double count = static_cast<double>(traces.size());
        aggregate.row() << cfg.experiment_id << functions[f].name << cfg.methods[m].name << k << traces.size()
                        << active << evals / count << sum / count << lo << hi;
      }
    }
  }
  const auto aggregate_file = (dir / "aggregate.csv").string();
  aggregate.write(aggregate_file);
  result.files.push_back(aggregate_file);
  return result;
}

}  // namespace ndfo::harness

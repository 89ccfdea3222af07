#pragma once

// Gradient-accuracy sweep: relative error of each estimator over functions,
// radii, sample counts and trials.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ndfo/estimators.hpp"
#include "ndfo/harness/config.hpp"
#include "ndfo/harness/csv.hpp"
#include "ndfo/testfns.hpp"

namespace ndfo::harness {

struct AccuracyRecord {
  std::string function;
  std::size_t n = 0;
  EstimatorKind estimator = EstimatorKind::GSG;
  std::string method;
  std::size_t N = 0;
  double sigma = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double theta = kUnknown;
  std::uint64_t evals = 0;
  std::string status = "ok";  // ok | skipped | error

  [[nodiscard]] double log10_theta() const { return theta > 0.0 ? std::log10(theta) : kUnknown; }
};

struct AccuracySummary {
  std::string function;
  std::size_t n = 0;
  EstimatorKind estimator = EstimatorKind::GSG;
  std::string method;
  std::size_t N = 0;
  double sigma = 0.0;
  std::size_t records = 0;
  std::size_t skipped = 0;
  std::size_t errors = 0;
  double mean_log10_theta = kUnknown;
  double q1_log10_theta = kUnknown;
  double median_log10_theta = kUnknown;
  double q3_log10_theta = kUnknown;
  double median_theta = kUnknown;
};

struct AccuracyResult {
  std::vector<AccuracyRecord> records;
  std::vector<AccuracySummary> summaries;
  std::vector<std::string> files;
};

inline const std::vector<std::string>& accuracy_columns() {
  static const std::vector<std::string> cols{"experiment_id", "function", "n",     "estimator", "method",
                                             "N",             "sigma",    "trial", "seed",      "theta",
                                             "log10_theta",   "evals",    "status"};
  return cols;
}

inline const std::vector<std::string>& accuracy_summary_columns() {
  static const std::vector<std::string> cols{
      "experiment_id",  "function",       "n",
      "estimator",      "method",         "N",
      "sigma",          "records",        "skipped",
      "errors",         "mean_log10_theta", "q1_log10_theta",
      "median_log10_theta", "q3_log10_theta", "median_theta"};
  return cols;
}

/// Quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) return kUnknown;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

/// Seed of one (function, trial) cell; the evaluation point depends on it alone.
inline std::uint64_t accuracy_trial_seed(std::uint64_t base, const std::string& function, std::size_t trial) {
  return detail::mix(detail::mix(base, detail::fnv1a64(function)), trial);
}

inline std::uint64_t accuracy_group_key(EstimatorKind kind, double sigma, std::size_t N) {
  return detail::fnv1a64(std::string(to_string(kind)) + "|" + format_double(sigma) + "|" + std::to_string(N));
}

/// Reruns one accuracy record from its identifying fields.
inline AccuracyRecord accuracy_trial(const TestFunction& fn, EstimatorKind kind, double sigma, std::size_t N,
                                     std::size_t trial, std::uint64_t seed, const PointSpec& point,
                                     const NoiseModel& noise_template) {
  AccuracyRecord rec;
  rec.function = fn.name;
  rec.n = fn.n;
  rec.estimator = kind;
  rec.N = N;
  rec.sigma = sigma;
  rec.trial = trial;
  rec.seed = seed;
  rec.method = std::string(to_string(kind)) + "_N" + std::to_string(N);

  const std::uint64_t group = accuracy_group_key(kind, sigma, N);
  RngStream point_rng(seed, 0);
  const Vector x = make_point(point, fn.n, point_rng);
  NoiseModel noise = noise_template;
  noise.seed = detail::mix(seed, group);
  Oracle oracle(fn.value, fn.n, noise);
  RngStream dir_rng(seed, group);
  try {
    const auto est = estimate_gradient(oracle, x, EstimatorConfig{kind, sigma, N}, dir_rng);
    rec.evals = oracle.eval_count();
    rec.theta = relative_error(est.g, fn.gradient(x));
  } catch (const UndefinedMetric&) {
    rec.evals = oracle.eval_count();
    rec.status = "skipped";
  } catch (const UsageError&) {
    throw;
  } catch (const Error&) {
    rec.evals = oracle.eval_count();
    rec.status = "error";
  }
  return rec;
}

inline AccuracySummary summarize(const std::vector<AccuracyRecord>& group) {
  AccuracySummary s;
  const auto& first = group.front();
  s.function = first.function;
  s.n = first.n;
  s.estimator = first.estimator;
  s.method = first.method;
  s.N = first.N;
  s.sigma = first.sigma;
  s.records = group.size();
  std::vector<double> logs;
  std::vector<double> thetas;
  for (const auto& r : group) {
    if (r.status == "skipped") ++s.skipped;
    if (r.status == "error") ++s.errors;
    if (r.status != "ok") continue;
    thetas.push_back(r.theta);
    // log10(0) = -inf keeps exact estimates in the statistics.
    logs.push_back(r.theta > 0.0 ? std::log10(r.theta) : -std::numeric_limits<double>::infinity());
  }
  if (!logs.empty()) {
    double total = 0.0;
    for (double v : logs) total += v;
    s.mean_log10_theta = total / static_cast<double>(logs.size());
    s.q1_log10_theta = quantile(logs, 0.25);
    s.median_log10_theta = quantile(logs, 0.5);
    s.q3_log10_theta = quantile(logs, 0.75);
    s.median_theta = quantile(thetas, 0.5);
  }
  return s;
}

/// Runs every (function, estimator, sigma, N, trial) cell. Interpolation
/// estimators only take N = n, so other sample factors are not run for them.
/// Writes accuracy.csv and accuracy_summary.csv to `out_dir` when non-empty.
inline AccuracyResult run_gradient_accuracy(const ExperimentConfig& cfg, const std::string& out_dir = {}) {
  if (cfg.functions.empty() || cfg.estimators.empty() || cfg.sigmas.empty() || cfg.sample_factors.empty() ||
      cfg.trials < 1)
    throw ConfigError("grad-accuracy needs non-empty functions, estimators, sigmas, sample_factors and trials >= 1");

  struct Cell {
    std::size_t function;
    EstimatorKind kind;
    double sigma;
    std::size_t N;
    std::size_t trial;
  };
  std::vector<TestFunction> functions;
  for (const auto& name : cfg.functions) functions.push_back(make_function(name));

  std::vector<Cell> cells;
  std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end) into cells
  for (std::size_t f = 0; f < functions.size(); ++f) {
    for (const auto kind : cfg.estimators) {
      for (const double sigma : cfg.sigmas) {
        std::vector<std::size_t> counts;
        for (const auto factor : cfg.sample_factors) {
          if (is_interpolation(kind) && factor != 1) continue;
          const std::size_t N = factor * functions[f].n;
          if (std::find(counts.begin(), counts.end(), N) == counts.end()) counts.push_back(N);
        }
        for (const auto N : counts) {
          const std::size_t begin = cells.size();
          for (std::size_t t = 0; t < cfg.trials; ++t) cells.push_back({f, kind, sigma, N, t});
          groups.emplace_back(begin, cells.size());
        }
      }
    }
  }

  AccuracyResult result;
  result.records.resize(cells.size());
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
    const Cell& c = cells[i];
    const auto& fn = functions[c.function];
    const std::uint64_t seed = accuracy_trial_seed(cfg.seed, fn.name, c.trial);
    result.records[i] = accuracy_trial(fn, c.kind, c.sigma, c.N, c.trial, seed, cfg.point, cfg.noise);
  });
  for (const auto& [begin, end] : groups)
    result.summaries.push_back(summarize(
        std::vector<AccuracyRecord>(result.records.begin() + static_cast<std::ptrdiff_t>(begin),
                                    result.records.begin() + static_cast<std::ptrdiff_t>(end))));

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    CsvDocument records(cfg.provenance(), accuracy_columns());
    for (const auto& r : result.records)
      records.row() << cfg.experiment_id << r.function << r.n << to_string(r.estimator) << r.method << r.N
                    << r.sigma << r.trial << r.seed << r.theta << r.log10_theta() << r.evals << r.status;
    CsvDocument summary(cfg.provenance(), accuracy_summary_columns());
    for (const auto& s : result.summaries)
      summary.row() << cfg.experiment_id << s.function << s.n << to_string(s.estimator) << s.method << s.N
                    << s.sigma << s.records << s.skipped << s.errors << s.mean_log10_theta << s.q1_log10_theta
                    << s.median_log10_theta << s.q3_log10_theta << s.median_theta;
    const auto dir = std::filesystem::path(out_dir);
    result.files.push_back((dir / "accuracy.csv").string());
    result.files.push_back((dir / "accuracy_summary.csv").string());
    records.write(result.files[0]);
    summary.write(result.files[1]);
  }
  return result;
}

}  // namespace ndfo::harness

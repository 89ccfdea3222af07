#pragma once

// Experiment configuration: a JSON document validated against a fixed key set
// before anything runs. Unknown keys, wrong types and empty lists are errors.

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ndfo/core.hpp"
#include "ndfo/estimators.hpp"
#include "ndfo/harness/csv.hpp"
#include "ndfo/optimizer.hpp"
#include "ndfo/testfns.hpp"

namespace ndfo::harness {

using json = nlohmann::json;

class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
};

enum class ExperimentKind { grad_accuracy, optimize, verify_bounds };

inline std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::grad_accuracy: return "grad-accuracy";
    case ExperimentKind::optimize: return "optimize";
    case ExperimentKind::verify_bounds: return "verify-bounds";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(std::string_view name) {
  if (name == "grad-accuracy") return ExperimentKind::grad_accuracy;
  if (name == "optimize") return ExperimentKind::optimize;
  if (name == "verify-bounds") return ExperimentKind::verify_bounds;
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

/// Where to place evaluation points (grad-accuracy) or starting points (optimize).
///   origin         x = 0
///   constant       x = value * ones
///   random_box     uniform on [-radius, radius]^n
///   random_sphere  uniform direction, ||x|| = radius
struct PointSpec {
  std::string kind = "random_box";
  double radius = 1.0;
  double value = 0.0;
};

struct MethodSpec {
  std::string name;
  EstimatorKind estimator = EstimatorKind::LIOD;
  StepperKind stepper = StepperKind::line_search;
  double sigma = 0.1;
  std::size_t sample_factor = 1;
  std::optional<double> alpha;           // fixed_step / adam step size override
  std::optional<double> adaptive_theta;  // sigma from the admissible range
};

struct VerifySpec {
  std::vector<std::string> checks;  // empty: all
  double eps_f = 1e-3;               // noise injected into the oracles
  std::optional<double> declared_eps_f;  // noise bound the bounds are told about
  std::size_t noise_samples = 100000;
  std::size_t interpolation_trials = 1000;
  std::size_t variance_replications = 100000;
  std::size_t sample_size_trials = 1000;
  double delta = 0.1;
  double theta = 0.4;
  std::size_t moment_samples = 1000000;
  std::vector<std::size_t> moment_dims{1, 2, 3, 5};
  std::size_t decrease_trials = 500;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::grad_accuracy;
  std::string experiment_id = "experiment";
  std::vector<std::string> functions;
  std::vector<EstimatorKind> estimators;
  std::vector<double> sigmas;
  std::vector<std::size_t> sample_factors{1};
  std::size_t trials = 1;
  PointSpec point;
  NoiseModel noise;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds{0};
  unsigned jobs = 1;
  std::vector<MethodSpec> methods;
  std::uint64_t budget = 0;  // 0: 1000 (n + 2)
  std::size_t max_iterations = 0;  // 0: unlimited
  PointSpec x0{"random_sphere", 1.0, 0.0};
  StepperConfig stepper;  // line-search / fixed-step / adam defaults
  VerifySpec verify;

  /// Canonical form of the effective configuration (after overrides).
  json canonical;

  [[nodiscard]] std::uint64_t hash() const { return detail::fnv1a64(canonical.dump()); }
  [[nodiscard]] std::string provenance() const {
    return "config_hash=" + hex64(hash()) + " experiment=" + std::string(to_string(kind)) +
           " experiment_id=" + experiment_id;
  }
};

namespace parsing {

inline void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || item.key() == a;
    if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

inline double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where + " must be finite");
  return d;
}

inline double get_positive(const json& v, const std::string& where) {
  const double d = get_number(v, where);
  if (!(d > 0.0)) throw ConfigError(where + " must be > 0");
  return d;
}

inline std::uint64_t get_unsigned(const json& v, const std::string& where) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError(where + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

inline std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + " must be a string");
  return v.get<std::string>();
}

inline const json& get_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + " must be an array");
  if (v.empty()) throw ConfigError(where + " must not be empty");
  return v;
}

template <class F>
auto translate(F&& f, const std::string& where) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const UsageError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

inline PointSpec parse_point(const json& v, const std::string& where) {
  check_keys(v, {"kind", "radius", "value"}, where);
  PointSpec p;
  if (v.contains("kind")) p.kind = get_string(v["kind"], where + ".kind");
  if (p.kind != "origin" && p.kind != "constant" && p.kind != "random_box" && p.kind != "random_sphere")
    throw ConfigError(where + ".kind must be origin, constant, random_box or random_sphere");
  if (v.contains("radius")) p.radius = get_positive(v["radius"], where + ".radius");
  if (v.contains("value")) p.value = get_number(v["value"], where + ".value");
  return p;
}

}  // namespace parsing

inline Vector make_point(const PointSpec& spec, std::size_t n, RngStream& rng) {
  const auto dim = static_cast<Eigen::Index>(n);
  if (spec.kind == "origin") return Vector::Zero(dim);
  if (spec.kind == "constant") return Vector::Constant(dim, spec.value);
  Vector x(dim);
  if (spec.kind == "random_box") {
    for (Eigen::Index i = 0; i < dim; ++i) x(i) = rng.uniform(-spec.radius, spec.radius);
    return x;
  }
  if (spec.kind == "random_sphere") {
    double norm = 0.0;
    do {
      for (Eigen::Index i = 0; i < dim; ++i) x(i) = rng.normal();
      norm = x.norm();
    } while (norm == 0.0);
    return x * (spec.radius / norm);
  }
  throw UsageError("unknown point kind '" + spec.kind + "'");
}

/// Validates and converts a JSON document. `expected` is the subcommand the
/// document is run under; a conflicting "experiment" field is an error.
inline ExperimentConfig parse_config(const json& doc, std::optional<ExperimentKind> expected = std::nullopt) {
  using namespace parsing;
  check_keys(doc,
             {"experiment", "experiment_id", "functions", "estimators", "sigmas", "sample_factors", "trials",
              "point", "noise", "seed", "seeds", "jobs", "methods", "budget", "max_iterations", "x0",
              "line_search", "fixed_step", "adam", "verify"},
             "config");
  ExperimentConfig cfg;
  if (doc.contains("experiment")) {
    cfg.kind = parse_experiment_kind(get_string(doc["experiment"], "experiment"));
    if (expected && *expected != cfg.kind)
      throw ConfigError("config is for '" + std::string(to_string(cfg.kind)) + "' but was run as '" +
                        std::string(to_string(*expected)) + "'");
  } else if (expected) {
    cfg.kind = *expected;
  } else {
    throw ConfigError("config needs an \"experiment\" field");
  }
  if (doc.contains("experiment_id")) {
    cfg.experiment_id = get_string(doc["experiment_id"], "experiment_id");
    if (cfg.experiment_id.empty() || cfg.experiment_id.find_first_of(",\n\r/\\ ") != std::string::npos)
      throw ConfigError("experiment_id must be non-empty without commas, slashes or whitespace");
  }

  if (doc.contains("functions")) {
    for (const auto& f : get_array(doc["functions"], "functions")) {
      const auto name = get_string(f, "functions[]");
      if (name == "corpus") {
        for (const auto& c : corpus_names()) cfg.functions.push_back(c);
      } else {
        translate([&] { return find_preset(name).name; }, "functions");
        cfg.functions.push_back(name);
      }
    }
  }
  if (doc.contains("estimators")) {
    for (const auto& e : get_array(doc["estimators"], "estimators"))
      cfg.estimators.push_back(translate([&] { return parse_estimator_kind(get_string(e, "estimators[]")); }, "estimators"));
  }
  if (doc.contains("sigmas")) {
    for (const auto& s : get_array(doc["sigmas"], "sigmas")) cfg.sigmas.push_back(get_positive(s, "sigmas[]"));
  }
  if (doc.contains("sample_factors")) {
    cfg.sample_factors.clear();
    for (const auto& s : get_array(doc["sample_factors"], "sample_factors")) {
      const auto f = get_unsigned(s, "sample_factors[]");
      if (f == 0) throw ConfigError("sample_factors entries must be >= 1");
      cfg.sample_factors.push_back(static_cast<std::size_t>(f));
    }
  }
  if (doc.contains("trials")) {
    cfg.trials = static_cast<std::size_t>(get_unsigned(doc["trials"], "trials"));
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  }
  if (doc.contains("point")) cfg.point = parse_point(doc["point"], "point");
  if (doc.contains("noise")) {
    const json& v = doc["noise"];
    check_keys(v, {"kind", "bound", "frequency"}, "noise");
    if (v.contains("kind"))
      cfg.noise.kind = translate([&] { return parse_noise_kind(get_string(v["kind"], "noise.kind")); }, "noise");
    if (v.contains("bound")) {
      cfg.noise.bound = get_number(v["bound"], "noise.bound");
      if (cfg.noise.bound < 0.0) throw ConfigError("noise.bound must be >= 0");
    }
    if (v.contains("frequency")) cfg.noise.frequency = get_positive(v["frequency"], "noise.frequency");
  }
  if (doc.contains("seed")) cfg.seed = get_unsigned(doc["seed"], "seed");
  if (doc.contains("seeds")) {
    cfg.seeds.clear();
    for (const auto& s : get_array(doc["seeds"], "seeds")) cfg.seeds.push_back(get_unsigned(s, "seeds[]"));
  }
  if (doc.contains("jobs")) {
    cfg.jobs = static_cast<unsigned>(get_unsigned(doc["jobs"], "jobs"));
    if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  }
  if (doc.contains("methods")) {
    std::set<std::string> names;
    for (const auto& m : get_array(doc["methods"], "methods")) {
      check_keys(m, {"name", "estimator", "stepper", "sigma", "sample_factor", "alpha", "adaptive_theta"}, "methods[]");
      MethodSpec spec;
      if (!m.contains("name") || !m.contains("estimator") || !m.contains("stepper"))
        throw ConfigError("methods[] entries need name, estimator and stepper");
      spec.name = get_string(m["name"], "methods[].name");
      if (spec.name.empty() || spec.name.find_first_of(",\n\r/\\ ") != std::string::npos)
        throw ConfigError("method names must be non-empty without commas, slashes or whitespace");
      if (!names.insert(spec.name).second) throw ConfigError("duplicate method name '" + spec.name + "'");
      spec.estimator = translate([&] { return parse_estimator_kind(get_string(m["estimator"], "methods[].estimator")); }, "methods[]");
      spec.stepper = translate([&] { return parse_stepper_kind(get_string(m["stepper"], "methods[].stepper")); }, "methods[]");
      if (m.contains("sigma")) spec.sigma = get_positive(m["sigma"], "methods[].sigma");
      if (m.contains("sample_factor")) {
        spec.sample_factor = static_cast<std::size_t>(get_unsigned(m["sample_factor"], "methods[].sample_factor"));
        if (spec.sample_factor < 1) throw ConfigError("methods[].sample_factor must be >= 1");
        if (is_interpolation(spec.estimator) && spec.sample_factor != 1)
          throw ConfigError("interpolation estimators use exactly n directions (sample_factor 1)");
      }
      if (m.contains("alpha")) spec.alpha = get_positive(m["alpha"], "methods[].alpha");
      if (m.contains("adaptive_theta")) {
        spec.adaptive_theta = get_number(m["adaptive_theta"], "methods[].adaptive_theta");
        if (!(*spec.adaptive_theta > 0.0 && *spec.adaptive_theta < 0.5))
          throw ConfigError("methods[].adaptive_theta must lie in (0, 1/2)");
      }
      cfg.methods.push_back(std::move(spec));
    }
  }
  if (doc.contains("budget")) cfg.budget = get_unsigned(doc["budget"], "budget");
  if (doc.contains("max_iterations"))
    cfg.max_iterations = static_cast<std::size_t>(get_unsigned(doc["max_iterations"], "max_iterations"));
  if (doc.contains("x0")) cfg.x0 = parse_point(doc["x0"], "x0");

  cfg.stepper.eps_f = cfg.noise.bound;
  if (doc.contains("line_search")) {
    const json& v = doc["line_search"];
    check_keys(v, {"c1", "tau", "alpha0", "alpha_min", "alpha_max", "eps_f"}, "line_search");
    if (v.contains("c1")) cfg.stepper.c1 = get_number(v["c1"], "line_search.c1");
    if (v.contains("tau")) cfg.stepper.tau = get_number(v["tau"], "line_search.tau");
    if (v.contains("alpha0")) cfg.stepper.alpha0 = get_positive(v["alpha0"], "line_search.alpha0");
    if (v.contains("alpha_min")) cfg.stepper.alpha_min = get_positive(v["alpha_min"], "line_search.alpha_min");
    if (v.contains("alpha_max")) cfg.stepper.alpha_max = get_positive(v["alpha_max"], "line_search.alpha_max");
    if (v.contains("eps_f")) {
      cfg.stepper.eps_f = get_number(v["eps_f"], "line_search.eps_f");
      if (cfg.stepper.eps_f < 0.0) throw ConfigError("line_search.eps_f must be >= 0");
    }
    if (!(cfg.stepper.c1 > 0.0 && cfg.stepper.c1 < 1.0)) throw ConfigError("line_search.c1 must lie in (0, 1)");
    if (!(cfg.stepper.tau > 0.0 && cfg.stepper.tau < 1.0)) throw ConfigError("line_search.tau must lie in (0, 1)");
    if (!(cfg.stepper.alpha_min <= cfg.stepper.alpha0 && cfg.stepper.alpha0 <= cfg.stepper.alpha_max))
      throw ConfigError("line_search needs alpha_min <= alpha0 <= alpha_max");
  }
  if (doc.contains("fixed_step")) {
    const json& v = doc["fixed_step"];
    check_keys(v, {"alpha"}, "fixed_step");
    if (v.contains("alpha")) cfg.stepper.alpha = get_positive(v["alpha"], "fixed_step.alpha");
  }
  if (doc.contains("adam")) {
    const json& v = doc["adam"];
    check_keys(v, {"beta1", "beta2", "eps_hat"}, "adam");
    if (v.contains("beta1")) cfg.stepper.beta1 = get_number(v["beta1"], "adam.beta1");
    if (v.contains("beta2")) cfg.stepper.beta2 = get_number(v["beta2"], "adam.beta2");
    if (v.contains("eps_hat")) cfg.stepper.eps_hat = get_positive(v["eps_hat"], "adam.eps_hat");
    if (!(cfg.stepper.beta1 >= 0.0 && cfg.stepper.beta1 < 1.0 && cfg.stepper.beta2 >= 0.0 && cfg.stepper.beta2 < 1.0))
      throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (doc.contains("verify")) {
    const json& v = doc["verify"];
    check_keys(v,
               {"checks", "eps_f", "declared_eps_f", "noise_samples", "interpolation_trials", "variance_replications",
                "sample_size_trials", "delta", "theta", "moment_samples", "moment_dims", "decrease_trials"},
               "verify");
    VerifySpec& s = cfg.verify;
    if (v.contains("checks"))
      for (const auto& c : get_array(v["checks"], "verify.checks")) s.checks.push_back(get_string(c, "verify.checks[]"));
    if (v.contains("eps_f")) {
      s.eps_f = get_number(v["eps_f"], "verify.eps_f");
      if (s.eps_f < 0.0) throw ConfigError("verify.eps_f must be >= 0");
    }
    if (v.contains("declared_eps_f")) {
      s.declared_eps_f = get_number(v["declared_eps_f"], "verify.declared_eps_f");
      if (*s.declared_eps_f < 0.0) throw ConfigError("verify.declared_eps_f must be >= 0");
    }
    auto count = [&](const char* key, std::size_t& out, std::size_t minimum) {
      if (!v.contains(key)) return;
      out = static_cast<std::size_t>(get_unsigned(v[key], std::string("verify.") + key));
      if (out < minimum) throw ConfigError(std::string("verify.") + key + " must be >= " + std::to_string(minimum));
    };
    count("noise_samples", s.noise_samples, 1);
    count("interpolation_trials", s.interpolation_trials, 1);
    count("variance_replications", s.variance_replications, 2);
    count("sample_size_trials", s.sample_size_trials, 1);
    count("moment_samples", s.moment_samples, 10000);
    count("decrease_trials", s.decrease_trials, 1);
    if (v.contains("delta")) {
      s.delta = get_number(v["delta"], "verify.delta");
      if (!(s.delta > 0.0 && s.delta < 1.0)) throw ConfigError("verify.delta must lie in (0, 1)");
    }
    if (v.contains("theta")) {
      s.theta = get_number(v["theta"], "verify.theta");
      if (!(s.theta > 0.0 && s.theta < 0.5)) throw ConfigError("verify.theta must lie in (0, 1/2)");
    }
    if (v.contains("moment_dims")) {
      s.moment_dims.clear();
      for (const auto& d : get_array(v["moment_dims"], "verify.moment_dims")) {
        const auto n = get_unsigned(d, "verify.moment_dims[]");
        if (n < 1) throw ConfigError("verify.moment_dims entries must be >= 1");
        s.moment_dims.push_back(static_cast<std::size_t>(n));
      }
    }
  }

  // Per-experiment requirements.
  switch (cfg.kind) {
    case ExperimentKind::grad_accuracy:
      if (cfg.functions.empty()) throw ConfigError("grad-accuracy needs a non-empty \"functions\" list");
      if (cfg.estimators.empty()) throw ConfigError("grad-accuracy needs a non-empty \"estimators\" list");
      if (cfg.sigmas.empty()) throw ConfigError("grad-accuracy needs a non-empty \"sigmas\" list");
      break;
    case ExperimentKind::optimize:
      if (cfg.functions.empty()) throw ConfigError("optimize needs a non-empty \"functions\" list");
      if (cfg.methods.empty()) throw ConfigError("optimize needs a non-empty \"methods\" list");
      break;
    case ExperimentKind::verify_bounds: {
      static const std::set<std::string> known{"noise_bound",  "interpolation_bound", "variance_domination",
                                               "sample_size",  "moment_identities",   "decrease_guarantee"};
      for (const auto& c : cfg.verify.checks)
        if (!known.count(c)) throw ConfigError("unknown verify check '" + c + "'");
      break;
    }
  }

  // Worker count never changes results, so it stays out of the hash.
  cfg.canonical = doc;
  cfg.canonical.erase("jobs");
  cfg.canonical["experiment"] = std::string(to_string(cfg.kind));
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path, std::optional<ExperimentKind> expected = std::nullopt) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot read config '" + path + "'");
  json doc;
  try {
    doc = json::parse(file);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, expected);
}

/// Applies CLI overrides and refreshes the canonical document so the hash
/// reflects what actually ran.
inline void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed, std::optional<unsigned> jobs) {
  if (seed) {
    cfg.seed = *seed;
    cfg.canonical["seed"] = *seed;
    // Optimization runs keep their count: seeds become S, S+1, ...
    if (cfg.kind == ExperimentKind::optimize) {
      for (std::size_t i = 0; i < cfg.seeds.size(); ++i) cfg.seeds[i] = *seed + i;
      cfg.canonical["seeds"] = cfg.seeds;
    }
  }
  if (jobs) {
    if (*jobs < 1) throw ConfigError("--jobs must be >= 1");
    cfg.jobs = *jobs;
  }
}

}  // namespace ndfo::harness

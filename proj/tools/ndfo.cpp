// ndfo: command-line driver for the experiment runners.
//
//   ndfo grad-accuracy  --config PATH [--out DIR] [--seed U64] [--jobs K]
//   ndfo optimize       --config PATH [--out DIR] [--seed U64] [--jobs K]
//   ndfo verify-bounds [--config PATH] [--out DIR] [--seed U64] [--jobs K]
//   ndfo list-functions
//
// Exit codes: 0 success, 1 runtime failure, 2 config error, 3 bound violation.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ndfo/harness.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitViolation = 3;

struct CommonFlags {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* opt = cmd->add_option("--config", flags.config, "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--out", flags.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber);
}

ndfo::harness::ExperimentConfig load(const CommonFlags& flags, ndfo::harness::ExperimentKind kind) {
  using namespace ndfo::harness;
  ExperimentConfig cfg =
      flags.config.empty() ? parse_config(json::object(), kind) : load_config(flags.config, kind);
  apply_overrides(cfg, flags.seed, flags.jobs);
  return cfg;
}

int list_functions() {
  for (const auto& preset : ndfo::function_presets()) {
    const auto fn = preset.make();
    std::cout << preset.name << "  n=" << fn.n << "  class=" << ndfo::to_string(fn.cls);
    if (fn.constants.L) std::cout << "  L=" << ndfo::harness::format_double(*fn.constants.L);
    if (fn.constants.mu) std::cout << "  mu=" << ndfo::harness::format_double(*fn.constants.mu);
    if (fn.constants.L_f) std::cout << "  L_f=" << ndfo::harness::format_double(*fn.constants.L_f);
    std::cout << (preset.in_corpus ? "  corpus" : "") << "  (" << fn.name << ")\n";
  }
  return 0;
}

int grad_accuracy(const CommonFlags& flags) {
  using namespace ndfo::harness;
  const auto cfg = load(flags, ExperimentKind::grad_accuracy);
  const auto result = run_gradient_accuracy(cfg, flags.out);
  std::size_t skipped = 0;
  for (const auto& r : result.records) skipped += r.status == "skipped";
  std::cout << result.records.size() << " records (" << skipped << " skipped), " << result.summaries.size()
            << " summaries\n";
  for (const auto& f : result.files) std::cout << "wrote " << f << "\n";
  return 0;
}

int optimize(const CommonFlags& flags) {
  using namespace ndfo::harness;
  const auto cfg = load(flags, ExperimentKind::optimize);
  const auto result = run_optimization(cfg, flags.out);
  for (const auto& run : result.runs)
    std::cout << run.function << " " << run.method << " seed=" << run.seed << " iterations=" << run.trace.iterations()
              << " evals=" << run.trace.evals() << " status=" << ndfo::to_string(run.trace.status) << "\n";
  std::cout << "wrote " << result.files.size() << " files to " << flags.out << "\n";
  return 0;
}

int verify_bounds(const CommonFlags& flags) {
  using namespace ndfo::harness;
  const auto cfg = load(flags, ExperimentKind::verify_bounds);
  const auto report = run_verify_bounds(cfg, flags.out);
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  measured=" << format_double(c.measured)
              << " limit=" << format_double(c.limit) << " margin=" << format_double(c.margin())
              << " trials=" << c.trials << " violations=" << c.violations << "\n";
    if (!c.witness.is_null()) std::cout << "  witness " << c.witness.dump() << "\n";
  }
  for (const auto& f : report.files) std::cout << "wrote " << f << "\n";
  return report.passed() ? 0 : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy derivative-free optimization experiments"};
  app.require_subcommand(1);
  CommonFlags accuracy_flags, optimize_flags, verify_flags;
  auto* accuracy_cmd = app.add_subcommand("grad-accuracy", "relative error of gradient estimators");
  add_common(accuracy_cmd, accuracy_flags, true);
  auto* optimize_cmd = app.add_subcommand("optimize", "optimization traces per function, method and seed");
  add_common(optimize_cmd, optimize_flags, true);
  auto* verify_cmd = app.add_subcommand("verify-bounds", "empirical checks of the theoretical bounds");
  add_common(verify_cmd, verify_flags, false);
  auto* list_cmd = app.add_subcommand("list-functions", "print the built-in function presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*accuracy_cmd) return grad_accuracy(accuracy_flags);
    if (*optimize_cmd) return optimize(optimize_flags);
    if (*verify_cmd) return verify_bounds(verify_flags);
    if (*list_cmd) return list_functions();
  } catch (const ndfo::harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}

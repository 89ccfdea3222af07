#pragma once

// Benchmark functions with analytic gradients and known constants.

#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ndfo/bounds.hpp"
#include "ndfo/core.hpp"

namespace ndfo {

enum class FunctionClass { convex, strongly_convex, nonconvex };

inline std::string_view to_string(FunctionClass cls) {
  switch (cls) {
    case FunctionClass::convex: return "convex";
    case FunctionClass::strongly_convex: return "strongly_convex";
    case FunctionClass::nonconvex: return "nonconvex";
  }
  return "?";
}

struct TestFunction {
  std::string name;
  std::size_t n = 0;
  ScalarFunction value;
  GradientFunction gradient;
  ProblemConstants constants;
  FunctionClass cls = FunctionClass::nonconvex;
  /// Half-width of the box [-box, box]^n on which the constants hold.
  double box = 10.0;
};

struct GradientCheck {
  double worst_relative_error = 0.0;
  Vector worst_point;
};

/// Compares the analytic gradient with central differences at random points
/// of the test box. Errors are relative to max(1, ||grad||).
inline GradientCheck gradient_self_test(const TestFunction& fn, std::size_t points, RngStream& rng) {
  GradientCheck out;
  const auto n = static_cast<Eigen::Index>(fn.n);
  Vector x(n);
  for (std::size_t p = 0; p < points; ++p) {
    for (Eigen::Index j = 0; j < n; ++j) x(j) = rng.uniform(-fn.box, fn.box);
    const Vector g = fn.gradient(x);
    Vector fd(n);
    Vector probe = x;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(x(j)));
      probe(j) = x(j) + h;
      const double up = fn.value(probe);
      probe(j) = x(j) - h;
      const double down = fn.value(probe);
      probe(j) = x(j);
      fd(j) = (up - down) / (2.0 * h);
    }
    const double err = (fd - g).norm() / std::max(1.0, g.norm());
    if (err > out.worst_relative_error) {
      out.worst_relative_error = err;
      out.worst_point = x;
    }
  }
  return out;
}

inline constexpr double kGradientSelfTestTolerance = 1e-6;

namespace detail {

inline TestFunction checked(TestFunction fn) {
  RngStream rng(detail::mix(0x7e57f00dULL, detail::fnv1a64(fn.name)));
  const auto check = gradient_self_test(fn, 100, rng);
  if (!(check.worst_relative_error <= kGradientSelfTestTolerance))
    throw NumericError(fn.name + ": analytic gradient disagrees with finite differences (rel " +
                           std::to_string(check.worst_relative_error) + ")",
                       check.worst_point);
  return fn;
}

}  // namespace detail

/// sum_{i<n/2} [M sin(x_{2i}) + cos(x_{2i+1})] + (L - M)/(2n) * (sum_j x_j)^2.
///
/// The Hessian is diag(-M sin, -cos) plus (L - M)/n * ones, so the declared
/// gradient Lipschitz constant is (L - M) + max(M, 1), which is L for M >= 1.
inline TestFunction synthetic_sin(std::size_t n, double M, double L) {
  if (n == 0 || n % 2 != 0) throw UsageError("synthetic_sin needs an even dimension");
  if (!(M > 0.0 && L > M)) throw UsageError("synthetic_sin needs L > M > 0");
  const double coupling = (L - M) / static_cast<double>(n);

  TestFunction fn;
  fn.name = "synthetic_sin(n=" + std::to_string(n) + ",M=" + std::to_string(M) + ",L=" + std::to_string(L) + ")";
  fn.n = n;
  fn.value = [M, coupling](const Vector& x) {
    double periodic = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); i += 2) periodic += M * std::sin(x(i)) + std::cos(x(i + 1));
    const double s = x.sum();
    return periodic + 0.5 * coupling * s * s;
  };
  fn.gradient = [M, coupling](const Vector& x) {
    const double shared = coupling * x.sum();
    Vector g(x.size());
    for (Eigen::Index i = 0; i + 1 < x.size(); i += 2) {
      g(i) = M * std::cos(x(i)) + shared;
      g(i + 1) = -std::sin(x(i + 1)) + shared;
    }
    return g;
  };
  fn.constants.L = (L - M) + std::max(M, 1.0);
  fn.constants.phi_hat = -0.5 * static_cast<double>(n) * (M + 1.0);
  fn.cls = FunctionClass::nonconvex;
  return detail::checked(std::move(fn));
}

/// 1/2 x^T A x, A diagonal with eigenvalues evenly spaced on [mu, L].
inline TestFunction quadratic(std::size_t n, double mu, double L) {
  if (n == 0) throw UsageError("quadratic needs n >= 1");
  if (!(mu > 0.0 && L >= mu)) throw UsageError("quadratic needs 0 < mu <= L");
  Vector diag(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    diag(static_cast<Eigen::Index>(i)) = n == 1 ? mu : mu + (L - mu) * static_cast<double>(i) / static_cast<double>(n - 1);

  TestFunction fn;
  fn.name = "quadratic(n=" + std::to_string(n) + ",mu=" + std::to_string(mu) + ",L=" + std::to_string(L) + ")";
  fn.n = n;
  fn.value = [diag](const Vector& x) { return 0.5 * x.dot(diag.cwiseProduct(x)); };
  fn.gradient = [diag](const Vector& x) -> Vector { return diag.cwiseProduct(x); };
  fn.constants.L = L;
  fn.constants.mu = mu;
  fn.constants.phi_hat = 0.0;
  fn.constants.phi_star = 0.0;
  fn.cls = FunctionClass::strongly_convex;
  return detail::checked(std::move(fn));
}

/// Chained Rosenbrock, sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2.
///
/// L is a Gershgorin bound on the Hessian over [-10, 10]^n:
/// (1200*100 + 400*10 + 2 + 200) + 2 * 400*10 = 132202.
inline TestFunction rosenbrock(std::size_t n) {
  if (n < 2) throw UsageError("rosenbrock needs n >= 2");
  TestFunction fn;
  fn.name = "rosenbrock(n=" + std::to_string(n) + ")";
  fn.n = n;
  fn.value = [](const Vector& x) {
    double total = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const double a = x(i + 1) - x(i) * x(i);
      const double b = 1.0 - x(i);
      total += 100.0 * a * a + b * b;
    }
    return total;
  };
  fn.gradient = [](const Vector& x) {
    Vector g = Vector::Zero(x.size());
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const double a = x(i + 1) - x(i) * x(i);
      g(i) += -400.0 * x(i) * a - 2.0 * (1.0 - x(i));
      g(i + 1) += 200.0 * a;
    }
    return g;
  };
  fn.constants.L = 132202.0;
  fn.constants.phi_hat = 0.0;
  fn.constants.phi_star = 0.0;
  fn.cls = FunctionClass::nonconvex;
  return detail::checked(std::move(fn));
}

/// a^T x. Interpolation is exact on it.
inline TestFunction linear(const Vector& a) {
  if (a.size() == 0) throw UsageError("linear needs n >= 1");
  TestFunction fn;
  fn.name = "linear(n=" + std::to_string(a.size()) + ")";
  fn.n = static_cast<std::size_t>(a.size());
  fn.value = [a](const Vector& x) { return a.dot(x); };
  fn.gradient = [a](const Vector&) -> Vector { return a; };
  fn.constants.L = 0.0;
  fn.constants.L_f = a.norm();
  fn.cls = FunctionClass::convex;
  return detail::checked(std::move(fn));
}

/// sum_i sin(x_i): globally sqrt(n)-Lipschitz with 1-Lipschitz gradient. Its
/// Gaussian smoothing at radius sigma is exp(-sigma^2/2) sum_i sin(x_i).
inline TestFunction sine_sum(std::size_t n) {
  if (n == 0) throw UsageError("sine_sum needs n >= 1");
  TestFunction fn;
  fn.name = "sine_sum(n=" + std::to_string(n) + ")";
  fn.n = n;
  fn.value = [](const Vector& x) { return x.array().sin().sum(); };
  fn.gradient = [](const Vector& x) -> Vector { return x.array().cos().matrix(); };
  fn.constants.L = 1.0;
  fn.constants.L_f = std::sqrt(static_cast<double>(n));
  fn.constants.phi_hat = -static_cast<double>(n);
  fn.cls = FunctionClass::nonconvex;
  return detail::checked(std::move(fn));
}

/// Gradient of E_u[sum_i sin(x_i + sigma u_i)].
inline Vector sine_sum_smoothed_gradient(const Vector& x, double sigma) {
  return std::exp(-0.5 * sigma * sigma) * x.array().cos().matrix();
}

// ---------------------------------------------------------------------------
// Named presets
// ---------------------------------------------------------------------------

struct FunctionPreset {
  std::string name;
  std::function<TestFunction()> make;
  bool in_corpus = false;
};

/// Presets addressable from experiment configs. The eight corpus entries are
/// the default accuracy benchmark.
inline const std::vector<FunctionPreset>& function_presets() {
  static const std::vector<FunctionPreset> presets = [] {
    std::vector<FunctionPreset> p;
    p.push_back({"sin_n20", [] { return synthetic_sin(20, 1.0, 8.0); }, true});
    p.push_back({"sin_n100", [] { return synthetic_sin(100, 1.0, 8.0); }, true});
    p.push_back({"sin_n10_m2", [] { return synthetic_sin(10, 2.0, 16.0); }, true});
    p.push_back({"quad_n10", [] { return quadratic(10, 1.0, 10.0); }, true});
    p.push_back({"quad_n50", [] { return quadratic(50, 0.1, 10.0); }, true});
    p.push_back({"quad_n100", [] { return quadratic(100, 1.0, 100.0); }, true});
    p.push_back({"rosen_n2", [] { return rosenbrock(2); }, true});
    p.push_back({"rosen_n10", [] { return rosenbrock(10); }, true});
    p.push_back({"linear_n10", [] {
                   Vector a(10);
                   for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = 1.0 + 0.5 * static_cast<double>(i);
                   return linear(a);
                 }, false});
    p.push_back({"sinesum_n4", [] { return sine_sum(4); }, false});
    return p;
  }();
  return presets;
}

inline const FunctionPreset& find_preset(std::string_view name) {
  for (const auto& p : function_presets())
    if (p.name == name) return p;
  throw UsageError("unknown function preset '" + std::string(name) + "'");
}

inline TestFunction make_function(std::string_view name) {
  auto fn = find_preset(name).make();
  fn.name = std::string(name);
  return fn;
}

inline std::vector<std::string> corpus_names() {
  std::vector<std::string> out;
  for (const auto& p : function_presets())
    if (p.in_corpus) out.push_back(p.name);
  return out;
}

}  // namespace ndfo

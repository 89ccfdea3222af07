#pragma once

// Black-box oracle f(x) = phi(x) + eps(x), bounded noise models, evaluation
// accounting and the seeded random streams shared by the rest of the library.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ndfo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using ScalarFunction = std::function<double(const Vector&)>;
using GradientFunction = std::function<Vector(const Vector&)>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (dimension mismatch, bad parameter, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A function value or intermediate came out NaN/Inf.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, Vector where, std::size_t sample = npos)
      : Error(what), where_(std::move(where)), sample_(sample) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  [[nodiscard]] const Vector& where() const noexcept { return where_; }
  /// Index of the offending sample inside an estimator batch, or npos.
  [[nodiscard]] std::size_t sample() const noexcept { return sample_; }

 private:
  Vector where_;
  std::size_t sample_;
};

/// Direction matrix is singular or too ill-conditioned; redraw and retry.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  [[nodiscard]] double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Line-search / rate constants admit no positive step or contraction.
class InfeasibleConstants : public Error {
 public:
  using Error::Error;
};

/// theta * ||grad|| is too small relative to the noise for any sampling radius.
class NoFeasibleSigma : public Error {
 public:
  using Error::Error;
};

/// Relative error requested at a point with zero true gradient.
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

/// Backtracking reached alpha_min without satisfying the relaxed Armijo test.
class StallError : public Error {
 public:
  StallError(const std::string& what, double last_alpha, std::size_t trials)
      : Error(what), last_alpha_(last_alpha), trials_(trials) {}
  [[nodiscard]] double last_alpha() const noexcept { return last_alpha_; }
  [[nodiscard]] std::size_t trials() const noexcept { return trials_; }

 private:
  double last_alpha_;
  std::size_t trials_;
};

/// Evaluation budget ran out before an operation could complete.
class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

/// FNV-1a, 64-bit.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// 53-bit mantissa fill, [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Deterministic random stream keyed by (seed, stream_id).
///
/// Backed by std::mt19937_64, whose output sequence is fixed by the standard;
/// uniform and normal variates are derived here rather than through
/// std::*_distribution, whose algorithms are implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id), engine_(detail::mix(seed, stream_id)) {}

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return detail::to_unit(engine_()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Independent child stream; depends only on (seed, stream_id, id).
  [[nodiscard]] RngStream substream(std::uint64_t id) const {
    return RngStream(detail::mix(seed_, stream_id_), id);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

enum class NoiseKind { none, uniform, sinusoidal, adversarial_sign };

inline std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::uniform: return "uniform";
    case NoiseKind::sinusoidal: return "sinusoidal";
    case NoiseKind::adversarial_sign: return "adversarial_sign";
  }
  return "?";
}

inline NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "none") return NoiseKind::none;
  if (name == "uniform") return NoiseKind::uniform;
  if (name == "sinusoidal") return NoiseKind::sinusoidal;
  if (name == "adversarial_sign") return NoiseKind::adversarial_sign;
  throw UsageError("unknown noise kind '" + std::string(name) + "'");
}

/// Bounded additive noise |eps(x)| <= bound.
///
/// The stochastic kinds are counter-based: the draw for the k-th evaluation of
/// an oracle depends only on (seed, k), so batches evaluated out of order on
/// several workers still reproduce the sequential result.
struct NoiseModel {
  NoiseKind kind = NoiseKind::none;
  double bound = 0.0;
  std::uint64_t seed = 0;
  double frequency = 1e3;  // omega for the sinusoidal kind

  [[nodiscard]] double sample(const Vector& x, std::uint64_t call_index) const {
    if (kind == NoiseKind::none || bound == 0.0) return 0.0;
    switch (kind) {
      case NoiseKind::uniform: {
        const double u = detail::to_unit(detail::mix(seed, call_index));
        return std::clamp(bound * (2.0 * u - 1.0), -bound, bound);
      }
      case NoiseKind::sinusoidal:
        return std::clamp(bound * std::sin(frequency * x.sum()), -bound, bound);
      case NoiseKind::adversarial_sign:
        return (detail::mix(seed, call_index) >> 63) != 0 ? bound : -bound;
      case NoiseKind::none: break;
    }
    return 0.0;
  }
};

// ---------------------------------------------------------------------------
// Parallel helper
// ---------------------------------------------------------------------------

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index is
/// visited exactly once; callers write results into slot i so the output order
/// is independent of scheduling.
template <class Body>
void parallel_for(std::size_t count, unsigned jobs, Body&& body) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::mutex failure_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count && !failed.load(); i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Noisy black-box evaluator. Not copyable: the evaluation counter is the
/// identity of the oracle for budget accounting.
class Oracle {
 public:
  Oracle(ScalarFunction phi, std::size_t dimension, NoiseModel noise = {},
         bool concurrency_safe = false)
      : phi_(std::move(phi)),
        dimension_(dimension),
        noise_(noise),
        concurrency_safe_(concurrency_safe) {
    if (dimension_ == 0) throw UsageError("oracle dimension must be >= 1");
    if (!(noise_.bound >= 0.0) || !std::isfinite(noise_.bound))
      throw UsageError("noise bound must be finite and >= 0");
    if (!phi_) throw UsageError("oracle needs a function");
  }

  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }
  [[nodiscard]] std::uint64_t eval_count() const noexcept { return count_.load(); }
  [[nodiscard]] bool concurrency_safe() const noexcept { return concurrency_safe_; }
  [[nodiscard]] const NoiseModel& noise() const noexcept { return noise_; }

  /// Worker count used for batches when the oracle is concurrency safe.
  void set_workers(unsigned workers) noexcept { workers_ = std::max(1u, workers); }

  double evaluate(const Vector& x) {
    check_point(x);
    const std::uint64_t index = count_.fetch_add(1);
    const double value = evaluate_at(x, index);
    if (!std::isfinite(value))
      throw NumericError("oracle returned a non-finite value", x);
    return value;
  }

  /// Evaluates every point; results are in request order and each point
  /// counts as one evaluation.
  std::vector<double> evaluate_batch(std::span<const Vector> points) {
    for (const auto& x : points) check_point(x);
    const std::uint64_t base = count_.fetch_add(points.size());
    std::vector<double> values(points.size());
    const unsigned jobs = concurrency_safe_ ? workers_ : 1u;
    parallel_for(points.size(), jobs,
                 [&](std::size_t i) { values[i] = evaluate_at(points[i], base + i); });
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i]))
        throw NumericError("oracle returned a non-finite value", points[i], i);
    }
    return values;
  }

 private:
  void check_point(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != dimension_)
      throw UsageError("point has dimension " + std::to_string(x.size()) + ", oracle expects " +
                       std::to_string(dimension_));
    if (!all_finite(x)) throw UsageError("point has non-finite entries");
  }

  double evaluate_at(const Vector& x, std::uint64_t index) const {
    const double phi = phi_(x);
    double f = phi + noise_.sample(x, index);
    // Rounding of the sum can overshoot the bound by an ulp; pull it back so
    // the bound holds for the value actually returned.
    while (std::abs(f - phi) > noise_.bound) f = std::nextafter(f, phi);
    return f;
  }

  ScalarFunction phi_;
  std::size_t dimension_;
  NoiseModel noise_;
  bool concurrency_safe_;
  unsigned workers_ = 1;
  std::atomic<std::uint64_t> count_{0};
};

inline double evaluate(Oracle& oracle, const Vector& x) { return oracle.evaluate(x); }

/// Oracle returning phi(x) + eps(x) with |eps| <= noise.bound.
inline Oracle wrap_with_noise(ScalarFunction phi, std::size_t dimension, const NoiseModel& noise,
                              bool concurrency_safe = false) {
  if (noise.bound < 0.0) throw UsageError("noise bound must be >= 0");
  return Oracle(std::move(phi), dimension, noise, concurrency_safe);
}

}  // namespace ndfo

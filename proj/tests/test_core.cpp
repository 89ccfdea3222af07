#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "support.hpp"

using namespace ndfo;
using ndfo::test::vec;

TEST(Oracle, ZeroFunctionReturnsZero) {
  Oracle oracle([](const Vector&) { return 0.0; }, 2);
  EXPECT_EQ(oracle.evaluate(vec({1, 2})), 0.0);
  EXPECT_EQ(oracle.eval_count(), 1u);
}

TEST(Oracle, SquaredNorm) {
  Oracle oracle([](const Vector& x) { return x.squaredNorm(); }, 2);
  EXPECT_EQ(evaluate(oracle, vec({3, 4})), 25.0);
}

TEST(Oracle, CountsEveryEvaluation) {
  Oracle oracle([](const Vector& x) { return x.sum(); }, 3);
  for (int k = 1; k <= 17; ++k) {
    oracle.evaluate(Vector::Ones(3));
    EXPECT_EQ(oracle.eval_count(), static_cast<std::uint64_t>(k));
  }
  std::vector<Vector> batch(5, Vector::Zero(3));
  oracle.evaluate_batch(batch);
  EXPECT_EQ(oracle.eval_count(), 22u);
}

TEST(Oracle, RejectsWrongDimension) {
  Oracle oracle([](const Vector&) { return 0.0; }, 2);
  EXPECT_THROW(oracle.evaluate(vec({1, 2, 3})), UsageError);
}

TEST(Oracle, RejectsNonFinitePoint) {
  Oracle oracle([](const Vector&) { return 0.0; }, 2);
  EXPECT_THROW(oracle.evaluate(vec({1, NAN})), UsageError);
}

TEST(Oracle, NonFiniteValueCarriesPoint) {
  Oracle oracle([](const Vector& x) { return 1.0 / x(0); }, 1);
  try {
    oracle.evaluate(vec({0.0}));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.where(), vec({0.0}));
  }
}

TEST(Oracle, BatchNonFiniteReportsSampleIndex) {
  Oracle oracle([](const Vector& x) { return std::log(x(0)); }, 1);
  std::vector<Vector> batch{vec({1}), vec({2}), vec({-1}), vec({3})};
  try {
    oracle.evaluate_batch(batch);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.sample(), 2u);
  }
}

TEST(Noise, NoneIsExactlyZero) {
  NoiseModel noise{NoiseKind::none, 0.5, 3};
  EXPECT_EQ(noise.sample(vec({1, 2}), 0), 0.0);
  auto oracle = wrap_with_noise([](const Vector& x) { return x(0); }, 1, NoiseModel{});
  EXPECT_EQ(oracle.evaluate(vec({0.125})), 0.125);
}

TEST(Noise, ZeroBoundReproducesPhi) {
  auto oracle = wrap_with_noise([](const Vector& x) { return std::exp(x(0)); }, 1,
                                NoiseModel{NoiseKind::uniform, 0.0, 11});
  for (double t : {-2.0, 0.0, 0.3, 5.0}) EXPECT_EQ(oracle.evaluate(vec({t})), std::exp(t));
}

TEST(Noise, NegativeBoundRejected) {
  EXPECT_THROW(wrap_with_noise([](const Vector&) { return 0.0; }, 1, NoiseModel{NoiseKind::uniform, -0.1, 0}),
               UsageError);
}

TEST(Noise, UniformStaysInsideBound) {
  auto oracle = wrap_with_noise([](const Vector&) { return 0.0; }, 2, NoiseModel{NoiseKind::uniform, 0.1, 5});
  RngStream rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double v = oracle.evaluate(vec({rng.uniform(-5, 5), rng.uniform(-5, 5)}));
    ASSERT_GE(v, -0.1);
    ASSERT_LE(v, 0.1);
  }
}

TEST(Noise, HardBoundForEveryKind) {
  const double bound = 0.37;
  for (auto kind : {NoiseKind::uniform, NoiseKind::sinusoidal, NoiseKind::adversarial_sign}) {
    auto phi = [](const Vector& x) { return std::sin(x(0)) * x(1); };
    auto oracle = wrap_with_noise(phi, 2, NoiseModel{kind, bound, 99});
    RngStream rng(2, static_cast<std::uint64_t>(kind));
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const Vector x = vec({rng.uniform(-10, 10), rng.uniform(-10, 10)});
      worst = std::max(worst, std::abs(oracle.evaluate(x) - phi(x)));
    }
    EXPECT_LE(worst, bound) << to_string(kind);
  }
}

TEST(Noise, SinusoidalAtQuarterPeriod) {
  NoiseModel noise{NoiseKind::sinusoidal, 0.5, 0, 1.0};
  EXPECT_DOUBLE_EQ(noise.sample(vec({std::numbers::pi / 4, std::numbers::pi / 4}), 0), 0.5);
  // deterministic in x, independent of the call index
  EXPECT_EQ(noise.sample(vec({0.3, 0.1}), 0), noise.sample(vec({0.3, 0.1}), 12345));
}

TEST(Noise, AdversarialSignIsPlusOrMinusBound) {
  NoiseModel noise{NoiseKind::adversarial_sign, 0.1, 42};
  int plus = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double e = noise.sample(vec({0.0}), i);
    ASSERT_TRUE(e == 0.1 || e == -0.1);
    plus += e > 0;
  }
  EXPECT_GT(plus, 400);
  EXPECT_LT(plus, 600);
}

TEST(Noise, AdversarialSignReplays) {
  auto phi = [](const Vector&) { return 0.0; };
  auto a = wrap_with_noise(phi, 1, NoiseModel{NoiseKind::adversarial_sign, 0.1, 7});
  auto b = wrap_with_noise(phi, 1, NoiseModel{NoiseKind::adversarial_sign, 0.1, 7});
  for (int i = 0; i < 200; ++i) ASSERT_EQ(a.evaluate(vec({1.0})), b.evaluate(vec({1.0})));
}

TEST(Noise, IdenticalOraclesAreBitIdentical) {
  auto phi = [](const Vector& x) { return x.squaredNorm(); };
  NoiseModel noise{NoiseKind::uniform, 1e-3, 2024};
  Oracle a(phi, 3, noise);
  Oracle b(phi, 3, noise);
  RngStream rng(8);
  for (int i = 0; i < 500; ++i) {
    const Vector x = vec({rng.normal(), rng.normal(), rng.normal()});
    ASSERT_EQ(a.evaluate(x), b.evaluate(x));
  }
}

TEST(Oracle, ConcurrentBatchMatchesSequential) {
  auto phi = [](const Vector& x) { return std::cos(x.sum()); };
  NoiseModel noise{NoiseKind::uniform, 0.01, 77};
  Oracle seq(phi, 4, noise);
  Oracle par(phi, 4, noise, true);
  par.set_workers(4);
  RngStream rng(3);
  std::vector<Vector> batch;
  for (int i = 0; i < 64; ++i) batch.push_back(Vector::NullaryExpr(4, [&] { return rng.normal(); }));
  const auto a = seq.evaluate_batch(batch);
  const auto b = par.evaluate_batch(batch);
  EXPECT_EQ(a, b);
  EXPECT_EQ(par.eval_count(), 64u);
}

TEST(Rng, SameSeedSameStream) {
  RngStream a(123, 4), b(123, 4);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, StreamsDiffer) {
  RngStream a(123, 4), b(123, 5), c(124, 4);
  EXPECT_NE(a.next_u64(), b.next_u64());
  EXPECT_NE(RngStream(123, 4).next_u64(), c.next_u64());
}

TEST(Rng, UniformInUnitInterval) {
  RngStream rng(9);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 3 * std::sqrt(1.0 / 12 / 100000));
}

TEST(Rng, NormalMoments) {
  RngStream rng(10);
  const int n = 200000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 3 / std::sqrt(double(n)));
  EXPECT_NEAR(s2 / n, 1.0, 3 * std::sqrt(2.0 / n));
}

TEST(Rng, SubstreamDependsOnlyOnParentIdentity) {
  RngStream a(5, 1);
  a.next_u64();
  RngStream b(5, 1);
  EXPECT_EQ(a.substream(3).next_u64(), b.substream(3).next_u64());
  EXPECT_NE(b.substream(3).next_u64(), b.substream(4).next_u64());
}

TEST(ParallelFor, VisitsEachIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) ASSERT_EQ(h, 1);
}

TEST(ParallelFor, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(100, 3,
                            [](std::size_t i) {
                              if (i == 37) throw UsageError("boom");
                            }),
               UsageError);
}

#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace ndfo;

namespace {

ProblemConstants with_L(double L, double eps_f = 0.0) {
  ProblemConstants p;
  p.L = L;
  p.eps_f = eps_f;
  return p;
}

}  // namespace

TEST(AlphaBar, Examples) {
  EXPECT_DOUBLE_EQ(alpha_bar({0.5, 0.5, 0.0, 0.5}, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(alpha_bar({0.5, 0.5, 0.25, 0.5}, 2.0), 1.0 / 6.0);
  EXPECT_THROW(alpha_bar({0.7, 0.5, 0.25, 0.5}, 1.0), InfeasibleConstants);
}

TEST(AlphaBar, DecreasesInThetaAndC1) {
  double prev = alpha_bar({0.2, 0.3, 0.0, 0.5}, 3.0);
  for (double theta = 0.02; theta < 0.3; theta += 0.02) {
    const double a = alpha_bar({0.2, 0.3, theta, 0.5}, 3.0);
    EXPECT_LT(a, prev);
    prev = a;
  }
  prev = alpha_bar({0.05, 0.3, 0.2, 0.5}, 3.0);
  for (double c1 = 0.1; c1 < 0.6; c1 += 0.05) {
    const double a = alpha_bar({c1, 0.3, 0.2, 0.5}, 3.0);
    EXPECT_LT(a, prev);
    prev = a;
  }
}

TEST(LineSearchConstants, RangesEnforced) {
  EXPECT_THROW(LineSearchConstants({0.0, 0.5, 0.0, 0.5}).validate(), UsageError);
  EXPECT_THROW(LineSearchConstants({0.2, 1.0, 0.0, 0.5}).validate(), UsageError);
  EXPECT_THROW(LineSearchConstants({0.2, 0.5, 0.5, 0.5}).validate(), UsageError);
  EXPECT_THROW(LineSearchConstants({0.2, 0.5, 0.1, 1.0}).validate(), UsageError);
  EXPECT_NO_THROW(LineSearchConstants({0.2, 0.3, 0.0, 0.5}).validate());
}

TEST(Eta, Examples) {
  EXPECT_DOUBLE_EQ(eta({0.5, 0.5, 0.0, 0.5}, 1.0), 0.25);
  EXPECT_NEAR(eta({0.5, 1.0 - 1e-12, 0.0, 0.5}, 1.0), 0.5, 1e-11);
  EXPECT_DOUBLE_EQ(eta({0.5, 0.3, 0.25, 0.5}, 2.0), 0.0140625);
}

TEST(ConvexGapBound, Examples) {
  ProblemConstants p = with_L(1.0);
  p.D = 1.0;
  const LineSearchConstants c{0.5, 0.5, 0.0, 0.5};  // eta = 0.25
  EXPECT_DOUBLE_EQ(convex_gap_bound(p, c, 8), 1.0);
  EXPECT_LT(convex_gap_bound(p, c, 100000000), 1e-6);
  p.eps_f = 0.01;
  EXPECT_NEAR(convex_gap_bound(p, c, 1000000), 0.2 / std::sqrt(0.125) + 0.04, 1e-12);
  EXPECT_NEAR(convex_gap_bound(p, c, 1000000), 0.60569, 5e-6);
}

TEST(ConvexGapBound, NeedsD) {
  EXPECT_THROW(convex_gap_bound(with_L(1.0), {}, 3), UsageError);
}

TEST(StronglyConvex, Examples) {
  ProblemConstants p = with_L(1.0);
  p.mu = 1.0;
  const LineSearchConstants c{0.5, 0.5, 0.0, 0.5};
  const auto cert = strongly_convex_certificate(p, c, 3, 8.0);
  EXPECT_DOUBLE_EQ(cert.rho, 0.5);
  EXPECT_DOUBLE_EQ(cert.bound, 1.0);
  EXPECT_LT(strongly_convex_certificate(p, c, 2000, 8.0).bound, 1e-300);
  p.eps_f = 0.1;
  EXPECT_DOUBLE_EQ(strongly_convex_certificate(p, c, 2, 1.0).bound, 0.85);
}

TEST(StronglyConvex, RhoIncreasesInTheta) {
  ProblemConstants p = with_L(4.0);
  p.mu = 1.0;
  double prev = 0.0;
  for (double theta = 0.0; theta < 0.3; theta += 0.05) {
    const double rho = strongly_convex_certificate(p, {0.2, 0.3, theta, 0.5}, 1, 1.0).rho;
    EXPECT_GT(rho, prev);
    prev = rho;
  }
}

TEST(StronglyConvex, InfeasibleRho) {
  ProblemConstants p = with_L(1.0);
  p.mu = 4.0;  // mu > L
  EXPECT_THROW(strongly_convex_certificate(p, {0.5, 0.5, 0.0, 0.5}, 1, 1.0), UsageError);
}

TEST(Nonconvex, Examples) {
  ProblemConstants p = with_L(1.0);
  p.phi_hat = 0.0;
  const LineSearchConstants c{0.5, 0.5, 0.0, 0.5};
  EXPECT_DOUBLE_EQ(nonconvex_avg_bound(p, c, 4, 1.0), 1.0);
  EXPECT_LT(nonconvex_avg_bound(p, c, 1000000000, 1.0), 1e-8);
  p.eps_f = 0.05;
  EXPECT_NEAR(nonconvex_avg_bound(p, c, 1000000000, 1.0), 0.8, 1e-8);
  p.phi_hat.reset();
  EXPECT_THROW(nonconvex_avg_bound(p, c, 4, 1.0), UsageError);
}

TEST(InterpolationBound, Examples) {
  EXPECT_DOUBLE_EQ(interpolation_error_bound(0.1, 4, with_L(2.0)), 0.2);
  EXPECT_DOUBLE_EQ(interpolation_error_bound(0.2, 1, with_L(1.0, 0.01)), 0.2);
  EXPECT_GT(interpolation_error_bound(1e-12, 1, with_L(1.0, 0.01)), 1e9);
  EXPECT_THROW(interpolation_error_bound(0.0, 1, with_L(1.0)), UsageError);
  EXPECT_THROW(interpolation_error_bound(-1.0, 1, with_L(1.0)), UsageError);
}

TEST(InterpolationBound, MinimizedAtTwoSqrtEpsOverL) {
  const auto p = with_L(1.0, 0.01);
  const double best = interpolation_error_bound(0.2, 1, p);
  for (double s : {0.1, 0.15, 0.19, 0.21, 0.3, 0.5}) EXPECT_GT(interpolation_error_bound(s, 1, p), best);
}

TEST(SigmaRange, Examples) {
  const auto r = sigma_range(0.5, 4.0, 4, with_L(1.0, 0.25));
  EXPECT_DOUBLE_EQ(r.lo, 1.0);
  EXPECT_DOUBLE_EQ(r.hi, 1.0);
  const auto free = sigma_range(0.5, 2.0, 1, with_L(1.0));
  EXPECT_EQ(free.lo, 0.0);
  EXPECT_DOUBLE_EQ(free.hi, 2.0);
  EXPECT_THROW(sigma_range(0.5, 2.0, 1, with_L(1.0, 0.26)), NoFeasibleSigma);
}

TEST(SigmaRange, EndpointsMeetTheNormCondition) {
  RngStream rng(6);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 50);
    const double L = rng.uniform(0.1, 20);
    const double theta = rng.uniform(0.05, 0.49);
    const double g = rng.uniform(0.5, 100);
    // eps_f strictly inside the feasible region
    const double eps = rng.uniform() * theta * theta * g * g / (4 * L * n);
    const auto p = with_L(L, eps);
    const auto r = sigma_range(theta, g, n, p);
    ASSERT_LE(r.lo, r.hi);
    for (double s : {r.lo, r.midpoint(), r.hi}) {
      if (s <= 0.0) continue;
      ASSERT_LE(interpolation_error_bound(s, n, p), theta * g + 1e-9) << t;
    }
  }
}

TEST(VarianceBound, Examples) {
  EXPECT_DOUBLE_EQ(gsg_variance_bound(1.0, 1.0, 1, 1), (8.0 + 15.0 + 24.0 + 16.0) / 4.0);
  EXPECT_DOUBLE_EQ(gsg_variance_bound(1.0, 1.0, 1, 1), 15.75);
  EXPECT_LT(gsg_variance_bound(1.0, 1.0, 3, 100000000), 1e-5);
  for (std::size_t N : {1, 3, 17})
    EXPECT_DOUBLE_EQ(gsg_variance_bound(2.5, 0.7, 5, 2 * N), gsg_variance_bound(2.5, 0.7, 5, N) / 2);
}

TEST(SampleSize, Examples) {
  EXPECT_EQ(gsg_sample_size(1.0, 1.0, 2, 0.1, 1.0), 400u);
  EXPECT_EQ(gsg_sample_size(1.0, 1.0, 2, 0.1, 1e9), 1u);
  EXPECT_DOUBLE_EQ(gsg_sample_size_leading(10, 0.1, 0.5), 2.0 * 10 / (0.1 * 0.25));
}

// Independent evaluation of the sample-size formula.
TEST(SampleSize, MatchesFormulaAndIsMinimal) {
  RngStream rng(19);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 30);
    const double g = rng.uniform(0.1, 10);
    const double Lf = rng.uniform(0.1, 5);
    const double delta = rng.uniform(0.01, 0.9);
    const double r = rng.uniform(0.1, 5) * g;
    const double dn = static_cast<double>(n);
    const double formula = 2 * dn * g * g / (delta * r * r) +
                           (Lf * Lf * dn * (dn + 2) * (dn + 4) + 8 * dn * (dn + 2) * Lf * Lf + 16 * dn * Lf * Lf) /
                               (4 * delta * r * r);
    const std::size_t N = gsg_sample_size(g, Lf, n, delta, r);
    ASSERT_LE(std::abs(static_cast<double>(N) - std::ceil(formula)), 1.0) << t;
    ASSERT_LE(gsg_tail_probability_bound(g, Lf, n, N, r), delta);
    if (N > 1) {
      ASSERT_GT(gsg_tail_probability_bound(g, Lf, n, N - 1, r), delta);
    }
  }
}

TEST(SampleSize, BadArguments) {
  EXPECT_THROW(gsg_sample_size(1, 1, 2, 0.0, 1), UsageError);
  EXPECT_THROW(gsg_sample_size(1, 1, 2, 1.0, 1), UsageError);
  EXPECT_THROW(gsg_sample_size(1, 1, 2, 0.1, 0), UsageError);
}

TEST(SmoothingConstants, Examples) {
  const auto a = gaussian_smoothing_constants(1.0, 1.0, 4);
  EXPECT_DOUBLE_EQ(a.eps_f, 2.0);
  EXPECT_DOUBLE_EQ(a.L, 2.0);
  const auto b = gaussian_smoothing_constants(0.5, 2.0, 1);
  EXPECT_DOUBLE_EQ(b.eps_f, 1.0);
  EXPECT_DOUBLE_EQ(b.L, 4.0);
  for (double s : {0.01, 0.3, 7.0}) {
    const auto c = gaussian_smoothing_constants(s, 1.5, 6);
    EXPECT_NEAR(c.eps_f * c.L, 6 * 1.5 * 1.5, 1e-12);
  }
}

TEST(Moments, IdentityMatrixExample) {
  RngStream rng(100);
  const auto check = moment_identity_check(1, 2, Vector::Ones(2), 1000000, rng);
  EXPECT_EQ(check.exact, Matrix::Identity(2, 2));
  EXPECT_LE(check.max_deviation, 3 * std::sqrt(3.0 / 1e6));
}

TEST(Moments, ExactForms) {
  const Vector a = ndfo::test::vec({1, -2, 0.5});
  EXPECT_EQ(moment_identity_exact(4, a), Matrix::Zero(3, 3));
  EXPECT_EQ(moment_identity_exact(2, a), 5.0 * Matrix::Identity(3, 3));
  EXPECT_EQ(moment_identity_exact(3, a), a.squaredNorm() * Matrix::Identity(3, 3) + 2 * a * a.transpose());
  EXPECT_EQ(moment_identity_exact(5, a), 35.0 * Matrix::Identity(3, 3));
  EXPECT_EQ(moment_identity_exact(7, a), 5.0 * 7.0 * 9.0 * Matrix::Identity(3, 3));
  EXPECT_THROW(moment_identity_exact(8, a), UsageError);
  EXPECT_THROW(moment_identity_exact(0, a), UsageError);
}

TEST(Moments, AllIdentitiesWithinThreeStandardErrors) {
  for (std::size_t n : {1, 2, 3, 5}) {
    RngStream a_rng(500 + n);
    Vector a(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = a_rng.normal();
    for (int id = 1; id <= kMomentIdentityCount; ++id) {
      RngStream rng(n, static_cast<std::uint64_t>(id));
      const auto check = moment_identity_check(id, n, a, 400000, rng);
      EXPECT_TRUE(check.within(3.0)) << "identity " << id << " n=" << n << " dev=" << check.max_deviation
                                     << " se=" << check.max_standard_error;
    }
  }
}

// E[u^8] = 105 for a standard normal scalar; a (n+8) factor would give 135.
TEST(Moments, SixthPowerIdentityUsesNPlusSix) {
  RngStream rng(3);
  const auto check = moment_identity_check(7, 1, ndfo::test::vec({1}), 1000000, rng);
  EXPECT_DOUBLE_EQ(check.exact(0, 0), 105.0);
  EXPECT_TRUE(check.within(3.0));
  EXPECT_GT(std::abs(check.empirical(0, 0) - 135.0), 10 * check.max_standard_error);
}

TEST(Moments, Preconditions) {
  RngStream rng(1);
  EXPECT_THROW(moment_identity_check(1, 2, Vector::Ones(2), 100, rng), UsageError);
  EXPECT_THROW(moment_identity_check(1, 2, Vector::Ones(3), 20000, rng), UsageError);
  EXPECT_THROW(moment_identity_check(9, 2, Vector::Ones(2), 20000, rng), UsageError);
}

TEST(ProblemConstants, Validation) {
  ProblemConstants p;
  p.L = 1.0;
  p.mu = 2.0;
  EXPECT_THROW(p.validate(), UsageError);
  p.mu = 0.5;
  p.eps_f = -1;
  EXPECT_THROW(p.validate(), UsageError);
}

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "aitsahalia/model.hpp"
#include "oracles.hpp"

using namespace aitsahalia;

TEST(Drift, CaseOneAtUnity) { EXPECT_DOUBLE_EQ(drift(case1_params(), 1.0), -2.5); }

TEST(Drift, SymmetricCancellation) {
  Params p = case1_params();
  p.a_neg1 = p.a0 = p.a1 = p.a2 = 1.0;
  p.gamma = 2.0;
  EXPECT_DOUBLE_EQ(drift(p, 1.0), 0.0);
}

TEST(Drift, SignChangeOnBracket) {
  const Params p = case1_params();
  EXPECT_GT(drift(p, 0.1), 0.0);
  EXPECT_LT(drift(p, 10.0), 0.0);
  // brute-force grid: exactly one sign change on [0.1, 10]
  int changes = 0;
  double prev = drift(p, 0.1);
  for (int i = 1; i <= 10000; ++i) {
    const double cur = drift(p, 0.1 + 9.9 * i / 10000.0);
    changes += (prev > 0) != (cur > 0);
    prev = cur;
  }
  EXPECT_EQ(changes, 1);
}

TEST(Drift, RejectsNonPositiveState) {
  EXPECT_THROW(drift(case1_params(), 0.0), DomainError);
  EXPECT_THROW(drift(case1_params(), -1.0), DomainError);
}

TEST(Diffusion, Values) {
  Params p = case1_params();
  p.b = 1.0;
  p.theta = 2.0;
  EXPECT_DOUBLE_EQ(diffusion(p, 3.0), 9.0);
  EXPECT_DOUBLE_EQ(diffusion(case1_params(), 1.0), 1.0);
  p.b = 2.0;
  p.theta = 1.5;
  EXPECT_DOUBLE_EQ(diffusion(p, 4.0), 16.0);
  EXPECT_THROW(diffusion(p, 0.0), DomainError);
}

TEST(Jump, Evaluations) {
  EXPECT_DOUBLE_EQ(jump_phi(Jump::linear_scale(-0.2), 5.0), -1.0);
  EXPECT_DOUBLE_EQ(jump_phi(Jump::identity(), 0.3), 0.3);
  EXPECT_NEAR(jump_phi(Jump::sine(), std::numbers::pi), 0.0, 1e-12);
  EXPECT_THROW(jump_phi(Jump::sine(), -0.5), DomainError);
}

TEST(Jump, LinearScaleRequiresCAboveMinusOne) {
  EXPECT_THROW(Jump::linear_scale(-1.0), PreconditionError);
  EXPECT_THROW(Jump::linear_scale(-3.0), PreconditionError);
  EXPECT_NO_THROW(Jump::linear_scale(-0.999));
}

TEST(Jump, LipschitzAndLowerBoundHoldOnRandomPoints) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> logx(std::log(1e-6), std::log(1e4));
  for (const Jump& j : {Jump::linear_scale(-0.2), Jump::identity(), Jump::sine(),
                        Jump::linear_scale(0.7), Jump::linear_scale(-0.9)}) {
    for (int i = 0; i < 20000; ++i) {
      const double x = std::exp(logx(rng));
      const double y = std::exp(logx(rng));
      EXPECT_LE(std::abs(jump_phi(j, x) - jump_phi(j, y)),
                j.lipschitz_M * std::abs(x - y) * (1 + 1e-12) + 4e-16 * (x + y));
      EXPECT_GT(x + jump_phi(j, x), j.lower_eps0 * std::min(1.0, x));
    }
  }
}

TEST(Regime, CaseOneAndTwo) {
  EXPECT_EQ(classify_regime(case1_params()).kind, RegimeCase::Strict);
  const Regime r2 = classify_regime(case2_params());
  EXPECT_EQ(r2.kind, RegimeCase::Critical);
  EXPECT_TRUE(r2.critical_ok);  // 5 > 4.5

  Params p = case1_params();
  p.gamma = 2.0;
  p.theta = 2.0;
  EXPECT_EQ(classify_regime(p).kind, RegimeCase::Unsupported);
}

TEST(Regime, EqualityTolerance) {
  Params p = case2_params();
  p.gamma = 3.0 + 5e-13;
  EXPECT_EQ(classify_regime(p).kind, RegimeCase::Critical);
  p.gamma = 3.0 + 1e-9;
  EXPECT_EQ(classify_regime(p).kind, RegimeCase::Strict);
  p.gamma = 3.0 - 1e-9;
  EXPECT_EQ(classify_regime(p).kind, RegimeCase::Unsupported);
}

TEST(Regime, CriticalOkInvariantUnderJointScaling) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int i = 0; i < 500; ++i) {
    Params p = case2_params();
    p.a2 = u(rng);
    p.b = u(rng);
    const double k = u(rng);
    Params scaled = p;
    scaled.a2 *= k;
    scaled.b *= std::sqrt(k);
    EXPECT_EQ(classify_regime(p).critical_ok, classify_regime(scaled).critical_ok);
  }
  Params bad = case2_params();
  bad.a2 = 4.0;  // 4 < 4.5
  EXPECT_FALSE(classify_regime(bad).critical_ok);
}

TEST(MonotonicityConstant, CaseOneMatchesGridOracle) {
  // mpmath root of the derivative gives 1.500894412181591...
  const double L = monotonicity_constant(case1_params(), 3.0);
  EXPECT_NEAR(L, 1.5008944121815910, 1e-13);
  const double grid = oracle::monotonicity_sup_grid(case1_params(), 3.0);
  EXPECT_NEAR(L, grid, 1e-6 * L);
}

TEST(MonotonicityConstant, VanishingDiffusion) {
  Params p = case1_params();
  p.b = 1e-12;
  EXPECT_NEAR(monotonicity_constant(p, 3.0), p.a1, 1e-6);
}

TEST(MonotonicityConstant, UnitBaseExponent) {
  Params p = case1_params();
  const double q = 3.0;
  // choose b so that (q-1) b^2 theta^2 (theta-1) / (a2 gamma (gamma-1)) = 1
  p.b = std::sqrt(p.a2 * p.gamma * (p.gamma - 1) / ((q - 1) * p.theta * p.theta * (p.theta - 1)));
  EXPECT_NEAR(monotonicity_constant(p, q), 5.875, 1e-12);
}

TEST(MonotonicityConstant, Preconditions) {
  EXPECT_THROW(monotonicity_constant(case2_params(), 3.0), PreconditionError);
  EXPECT_THROW(monotonicity_constant(case1_params(), 2.0), PreconditionError);
}

TEST(MonotonicityConstant, OneSidedLipschitzProperty) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> logx(std::log(1e-3), std::log(1e2));
  std::uniform_real_distribution<double> qd(2.01, 6.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Params p = case1_params();
    const double q = qd(rng);
    const double L = monotonicity_constant(p, q);
    for (int i = 0; i < 2000; ++i) {
      const double x = std::exp(logx(rng));
      const double y = std::exp(logx(rng));
      const double dx = x - y;
      const double ds = diffusion(p, x) - diffusion(p, y);
      const double lhs = dx * (drift(p, x) - drift(p, y)) + 0.5 * (q - 1) * ds * ds;
      const double scale = std::abs(dx) * (std::abs(drift(p, x)) + std::abs(drift(p, y))) +
                           ds * ds * q + L * dx * dx;
      EXPECT_LE(lhs, L * dx * dx + 1e-12 * scale);
    }
  }
}

TEST(StepBounds, Critical) {
  EXPECT_DOUBLE_EQ(critical_step_bound(case2_params()), 1.0 / 3.0);
  Params p = case2_params();
  p.a1 = 0.5;
  EXPECT_DOUBLE_EQ(critical_step_bound(p), 1.0);
  EXPECT_THROW(critical_step_bound(case1_params()), PreconditionError);
  EXPECT_DOUBLE_EQ(rate_step_bound(case2_params()), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(rate_step_bound(case1_params()),
                   1.0 / (2.0 * monotonicity_constant(case1_params())));
}

TEST(Params, Validation) {
  EXPECT_NO_THROW(validate(case1_params()));
  Params p = case1_params();
  p.lambda = 0.0;
  EXPECT_EQ(first_invalid_field(p), "lambda");
  EXPECT_THROW(validate(p), PreconditionError);
  p = case1_params();
  p.theta = 1.0;
  EXPECT_EQ(first_invalid_field(p), "theta");
}

TEST(Params, ExtendedPrecisionAgrees) {
  const auto pl = case1_params().cast<long double>();
  EXPECT_NEAR(static_cast<double>(drift(pl, 0.7L)), drift(case1_params(), 0.7), 1e-14);
  EXPECT_NEAR(static_cast<double>(monotonicity_constant(pl, 3.0L)),
              monotonicity_constant(case1_params(), 3.0), 1e-14);
}

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "aitsahalia/errors.hpp"
#include "aitsahalia/experiment.hpp"
#include "oracles.hpp"

using namespace aitsahalia;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.params = case1_params();
  s.jump = Jump::linear_scale(-0.2);
  s.grid = GridConfig{1.0, 9, {}};
  s.reference_level = 9;
  s.levels_under_test = {3, 4, 5, 6};
  s.num_paths = 400;
  s.base_seed = 31337;
  return s;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(FitRate, SyntheticPowerLaws) {
  const std::vector<double> h{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
  std::vector<double> half, one;
  for (double v : h) {
    half.push_back(0.7 * std::sqrt(v));
    one.push_back(3.0 * v);
  }
  const RateFit a = fit_rate(h, half);
  EXPECT_NEAR(a.slope, 0.5, 1e-12);
  EXPECT_NEAR(a.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(a.intercept, std::log(0.7), 1e-12);
  EXPECT_NEAR(fit_rate(h, one).slope, 1.0, 1e-12);
}

TEST(FitRate, AgreesWithClosedFormRegression) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> h, e;
    for (int k = 0; k < 6; ++k) {
      h.push_back(std::ldexp(1.0, -3 - k));
      e.push_back(u(rng) * std::pow(h.back(), 0.4 + 0.2 * u(rng)));
    }
    const RateFit fit = fit_rate(h, e);
    const oracle::LineFit ref = oracle::log_log_line(h, e);
    EXPECT_NEAR(fit.slope, ref.slope, 1e-10);
    EXPECT_NEAR(fit.intercept, ref.intercept, 1e-9);
    EXPECT_NEAR(fit.r_squared, ref.r2, 1e-10);
  }
}

TEST(FitRate, Errors) {
  const std::vector<double> h{0.1, 0.05};
  EXPECT_THROW(fit_rate(h, std::vector<double>{1.0, 0.0}), DomainError);
  EXPECT_THROW(fit_rate(h, std::vector<double>{1.0}), PreconditionError);
  EXPECT_THROW(fit_rate(std::vector<double>{0.1}, std::vector<double>{1.0}), PreconditionError);
}

TEST(PairwiseSum, MatchesExactSumOfIntegers) {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  EXPECT_EQ(pairwise_sum(v), 499500.0);
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

TEST(StrongError, SelfComparisonIsZero) {
  ExperimentSpec s = small_spec();
  s.levels_under_test = {s.reference_level};
  s.num_paths = 20;
  const RateReport r = strong_error(s);
  ASSERT_EQ(r.rms_errors.size(), 1u);
  EXPECT_EQ(r.rms_errors[0], 0.0);
  EXPECT_TRUE(std::isnan(r.slope));
}

TEST(StrongError, ErrorsDecreaseWithStepsize) {
  const RateReport r = strong_error(small_spec());
  ASSERT_EQ(r.rms_errors.size(), 4u);
  for (std::size_t k = 0; k + 1 < r.rms_errors.size(); ++k) {
    EXPECT_LE(r.rms_errors[k + 1], 1.15 * r.rms_errors[k]);
    EXPECT_GT(r.batch_stderr[k], 0.0);
  }
  EXPECT_GT(r.slope, 0.3);
  EXPECT_LT(r.slope, 0.8);
}

TEST(StrongError, DeterministicAcrossThreadCounts) {
  ExperimentSpec s = small_spec();
  s.num_paths = 100;
  s.threads = 1;
  const RateReport a = strong_error(s);
  s.threads = 4;
  const RateReport b = strong_error(s);
  EXPECT_TRUE(same_bits(a.rms_errors, b.rms_errors));
  EXPECT_TRUE(same_bits(a.batch_stderr, b.batch_stderr));
  EXPECT_EQ(std::memcmp(&a.slope, &b.slope, sizeof(double)), 0);
}

TEST(StrongError, DoublingPathsStaysWithinBatchError) {
  ExperimentSpec s = small_spec();
  s.num_paths = 1000;
  const RateReport base = strong_error(s);
  s.num_paths = 2000;
  const RateReport doubled = strong_error(s);
  for (std::size_t k = 0; k < base.rms_errors.size(); ++k) {
    EXPECT_LT(std::abs(doubled.rms_errors[k] - base.rms_errors[k]), 3.0 * base.batch_stderr[k]);
  }
}

TEST(StrongError, SupOverGridDominatesTerminal) {
  ExperimentSpec s = small_spec();
  s.num_paths = 100;
  const RateReport terminal = strong_error(s);
  s.error_mode = ErrorMode::SupOverGrid;
  const RateReport sup = strong_error(s);
  for (std::size_t k = 0; k < sup.rms_errors.size(); ++k) {
    EXPECT_GE(sup.rms_errors[k], terminal.rms_errors[k]);
  }
}

TEST(StrongError, EnforcesRateStepBound) {
  ExperimentSpec s = small_spec();
  s.levels_under_test = {1, 2};  // h = 1/2 exceeds 1/(2L) ~ 0.333
  EXPECT_THROW(strong_error(s), PreconditionError);
  s.params = case2_params();
  s.params.a2 = 4.0;  // critical, but a2/b^2 <= 2 gamma - 3/2
  s.levels_under_test = {3};
  EXPECT_THROW(strong_error(s), PreconditionError);
}

TEST(StrongError, SpecValidation) {
  ExperimentSpec s = small_spec();
  s.reference_level = 10;  // above grid fine level
  EXPECT_THROW(strong_error(s), PreconditionError);
  s = small_spec();
  s.levels_under_test = {10};
  EXPECT_THROW(strong_error(s), PreconditionError);
  s = small_spec();
  s.num_paths = 0;
  EXPECT_THROW(strong_error(s), PreconditionError);
}

TEST(Census, BemNeverNegative) {
  ExperimentSpec s = small_spec();
  s.grid = GridConfig{1.0, 4, {}};
  s.reference_level = 4;
  s.levels_under_test = {2, 3, 4};
  s.num_paths = 2000;
  for (const Jump& j : {Jump::linear_scale(-0.2), Jump::identity(), Jump::sine()}) {
    s.jump = j;
    for (const PositivityCensus& c : negative_census(s)) {
      EXPECT_EQ(c.negative, 0);
      EXPECT_EQ(c.diverged, 0);
      EXPECT_EQ(c.fraction_negative, 0.0);
      EXPECT_EQ(c.total, 2000);
    }
  }
}

TEST(Census, EmNearDeterministicFlowStaysPositive) {
  ExperimentSpec s = small_spec();
  s.scheme = SchemeKind::EM;
  s.params.a_neg1 = 10.0;
  s.params.b = 1e-6;
  s.params.lambda = 1e-300;  // no jumps in practice
  s.grid = GridConfig{1.0, 10, {}};
  s.reference_level = 10;
  s.levels_under_test = {10};
  s.num_paths = 200;

  // single deterministic explicit run, noise-free
  double y = s.params.x0;
  const double h = step_size(1.0, 10);
  for (int n = 0; n < 1024; ++n) {
    y = em_step(s.params, s.jump, h, y, 0.0, 0);
    ASSERT_GT(y, 0.0);
  }
  const auto census = negative_census(s);
  EXPECT_EQ(census[0].negative, 0);
  EXPECT_EQ(census[0].fraction_negative, 0.0);
}

TEST(Census, EmLosesPositivityAtCoarseSteps) {
  ExperimentSpec s = small_spec();
  s.scheme = SchemeKind::EM;
  s.grid = GridConfig{1.0, 4, {}};
  s.reference_level = 4;
  s.levels_under_test = {2, 3, 4};
  s.num_paths = 5000;
  const auto c = negative_census(s);
  EXPECT_GT(c[0].fraction_negative, c[1].fraction_negative);
  EXPECT_GT(c[1].fraction_negative, c[2].fraction_negative);
  EXPECT_GT(c[0].fraction_negative, 0.5);
  for (const auto& row : c) EXPECT_LE(row.negative + row.diverged, row.total);
}

TEST(MomentProbe, AdmissibleRanges) {
  const MomentRange r2 = admissible_moment_range(case2_params(), false);
  EXPECT_DOUBLE_EQ(r2.lo, 2.0);
  EXPECT_DOUBLE_EQ(r2.hi, 11.0);
  EXPECT_TRUE(std::isinf(admissible_moment_range(case1_params(), false).hi));
  EXPECT_DOUBLE_EQ(admissible_moment_range(case1_params(), true).lo, 2.5);
  EXPECT_DOUBLE_EQ(admissible_moment_range(case2_params(), true).lo, 2.0);
  Params bad = case1_params();
  bad.gamma = 2.0;
  EXPECT_THROW(admissible_moment_range(bad, false), PreconditionError);
}

TEST(MomentProbe, CaseOneSecondMomentBounded) {
  ExperimentSpec s = small_spec();
  s.grid = GridConfig{1.0, 7, {}};
  s.reference_level = 7;
  s.levels_under_test = {7};
  s.num_paths = 1000;
  const std::vector<double> m = moment_probe(s, 2.0, false);
  ASSERT_EQ(m.size(), 129u);
  EXPECT_DOUBLE_EQ(m.front(), 1.0);
  for (double v : m) EXPECT_LT(v, 10.0 * (m.front() + 1.0));

  const std::vector<double> inv = moment_probe(s, 2.5, true);
  for (double v : inv) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
  }
}

TEST(MomentProbe, RejectsExponentOutsideRange) {
  ExperimentSpec s = small_spec();
  s.params = case2_params();
  s.levels_under_test = {5};
  EXPECT_THROW(moment_probe(s, 11.0, false), PreconditionError);
  EXPECT_THROW(moment_probe(s, 1.5, false), PreconditionError);
  EXPECT_THROW(moment_probe(s, 1.5, true), PreconditionError);
}

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "socialforce/gradcheck.hpp"
#include "socialforce/potentials.hpp"
#include "support.hpp"

using namespace socialforce;

TEST(FiniteDifference, Quadratic) {
  const std::vector<double> theta = {3.0};
  const auto g = finite_difference_gradient([](std::span<const double> p) { return p[0] * p[0]; }, theta, 1e-6);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_NEAR(g[0], 6.0, 1e-6);
}

TEST(FiniteDifference, ConstantGivesZeros) {
  const std::vector<double> theta = {1.0, -2.0, 0.5};
  const auto g = finite_difference_gradient([](std::span<const double>) { return 4.2; }, theta, 1e-6);
  EXPECT_EQ(g, std::vector<double>(3, 0.0));
}

TEST(FiniteDifference, TwoEvaluationsPerCoordinate) {
  int calls = 0;
  const std::vector<double> theta(7, 0.1);
  (void)finite_difference_gradient(
      [&](std::span<const double> p) {
        ++calls;
        return p[0] + p[6];
      },
      theta, 1e-6);
  EXPECT_EQ(calls, 14);
}

TEST(FiniteDifference, NonFiniteNamesCoordinate) {
  const std::vector<double> theta = {1.0, 0.0};
  try {
    (void)finite_difference_gradient(
        [](std::span<const double> p) { return p[1] > 0 ? std::numeric_limits<double>::infinity() : p[0]; }, theta,
        1e-6);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.coordinate(), 1u);
  }
}

TEST(GradCheck, RelativeErrorDenominator) {
  EXPECT_DOUBLE_EQ(relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 1e-9), 1e-9 / 1e-8);
}

TEST(GradCheck, Mlp1dValueAtBOne) {
  const auto model = PotentialModel::mlp1d(0);
  const TapeFunction f = [&](ad::Tape& t, std::span<const ad::Var> p) {
    const auto bp = model.bind_vars(t, p);
    return bp.evaluate({t.constant(1.0), t.constant(0.0), t.constant(0.0)});
  };
  GradCheckOptions opt;
  opt.tol = 1e-5;
  const auto r = grad_check(f, model.params(), opt);
  EXPECT_TRUE(r.pass) << r.max_rel_err;
  EXPECT_EQ(r.n_checked, 10u);
  EXPECT_EQ(r.n_evaluations, 20u);
}

TEST(GradCheck, Mlp1dWeightsAtB07Within1em6) {
  const auto model = PotentialModel::mlp1d(0);
  const TapeFunction f = [&](ad::Tape& t, std::span<const ad::Var> p) {
    return model.bind_vars(t, p).evaluate({t.constant(0.7), t.constant(0.0), t.constant(0.0)});
  };
  const auto r = grad_check(f, model.params(), {.eps = 1e-6, .tol = 1e-6});
  EXPECT_TRUE(r.pass) << r.max_rel_err;
}

TEST(GradCheck, ExponentialAgainstAnalyticDerivatives) {
  const double v0 = 2.1, sigma = 0.3, b = 0.5;
  const auto model = PotentialModel::exponential(v0, sigma);
  const TapeFunction f = [&](ad::Tape& t, std::span<const ad::Var> p) {
    return model.bind_vars(t, p).evaluate({t.constant(b), t.constant(0.0), t.constant(0.0)});
  };
  const auto r = grad_check(f, model.params(), {.eps = 1e-6, .tol = 1e-5});
  EXPECT_TRUE(r.pass) << r.max_rel_err;
  ASSERT_EQ(r.analytic.size(), 2u);
  EXPECT_NEAR(r.analytic[0], std::exp(-b / sigma), 1e-12);
  EXPECT_NEAR(r.analytic[1], v0 * b / (sigma * sigma) * std::exp(-b / sigma), 1e-12);
}

TEST(GradCheck, ZeroParametersIsVacuousPass) {
  const ParameterSet empty;
  const TapeFunction f = [](ad::Tape& t, std::span<const ad::Var>) { return t.constant(1.0); };
  const auto r = grad_check(f, empty);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.max_rel_err, 0.0);
  EXPECT_EQ(r.n_checked, 0u);
}

TEST(GradCheck, DetectsAWrongGradient) {
  // A function whose tape value and taped derivative disagree: the recorded
  // graph uses a constant snapshot of p, so backward sees a zero gradient.
  ParameterSet p{{ParamBlock{"x", 1, 1, {1.3}}}};
  const TapeFunction f = [](ad::Tape& t, std::span<const ad::Var> v) {
    return ad::exp(t.constant(v[0].value()));
  };
  const auto r = grad_check(f, p);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.max_rel_err, 0.5);
}

TEST(GradCheck, SampledCoordinatesAndDirections) {
  ParameterSet p{{ParamBlock{"w", 1, 40, std::vector<double>(40, 0.2)}}};
  const TapeFunction f = [](ad::Tape& t, std::span<const ad::Var> v) {
    (void)t;
    return ad::sum(ad::softplus(v[0]));
  };
  GradCheckOptions opt;
  opt.sample = 8;
  opt.directions = 3;
  opt.seed = 9;
  const auto r = grad_check(f, p, opt);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.n_checked, 8u);
  std::size_t checked = 0;
  for (double v : r.numeric) checked += std::isnan(v) ? 0 : 1;
  EXPECT_EQ(checked, 8u);
  EXPECT_LT(r.max_directional_rel_err, 1e-6);
}

#include "gnmppi/problems.hpp"
#include "gnmppi/solvers.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gnmppi;

namespace {

Vector uniform(Index n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

}  // namespace

TEST(Rosenbrock, MatchesClosedForm) {
  const ControlProblem p = make_rosenbrock();
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Vector u = uniform(2, -2.0, 2.0, rng);
    const double ref = oracle::rosenbrock(u[0], u[1]);
    ASSERT_NEAR(evaluate_cost(p, u), ref, 1e-12 * (1.0 + ref));
  }
  EXPECT_EQ(evaluate_cost(p, Vector::Ones(2)), 0.0);
  EXPECT_NEAR(evaluate_cost(p, p.initial_guess), 1.0, 1e-15);
}

TEST(Rastrigin, KnownValues) {
  const ControlProblem p = make_rastrigin();
  EXPECT_NEAR(evaluate_cost(p, Vector::Zero(2)), 0.0, 1e-15);
  EXPECT_NEAR(evaluate_cost(p, Vector::Ones(2)), 2.0, 1e-12);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Vector u = uniform(2, -3.0, 3.0, rng);
    ASSERT_NEAR(evaluate_cost(p, u), oracle::rastrigin(u[0], u[1]), 1e-11);
  }
}

TEST(Heaviside, StepValues) {
  const ControlProblem p = make_heaviside();
  EXPECT_EQ(evaluate_cost(p, Vector::Constant(1, 0.0)), 0.5);
  EXPECT_EQ(evaluate_cost(p, Vector::Constant(1, 1e-300)), 0.5);
  EXPECT_EQ(evaluate_cost(p, Vector::Constant(1, -1e-300)), 0.0);
  EXPECT_EQ(evaluate_cost(p, Vector::Constant(1, -7.0)), 0.0);
}

TEST(DoubleIntegrator, LqrMatchesQpOracle) {
  for (Index horizon : {5, 50}) {
    DoubleIntegratorSpec s;
    s.horizon = horizon;
    const LqrSolution lqr = solve_lqr(s);
    const oracle::QpSolution qp = oracle::double_integrator_qp(s);
    EXPECT_LE((lqr.inputs - qp.inputs).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(lqr.cost, qp.cost, 1e-8 * qp.cost);
    const ControlProblem p = make_double_integrator(s);
    ASSERT_TRUE(p.known_optimum.has_value());
    EXPECT_NEAR(p.known_optimum->cost, qp.cost, 1e-8 * qp.cost);
    EXPECT_NEAR(evaluate_cost(p, qp.inputs), qp.cost, 1e-9 * qp.cost);
  }
}

TEST(DoubleIntegrator, RolloutMatchesOracle) {
  const DoubleIntegratorSpec s;
  const ControlProblem p = make_double_integrator(s);
  EXPECT_EQ(p.dim(), 50);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Vector u = uniform(50, -2.0, 2.0, rng);
    const double ref = oracle::double_integrator_cost(s, u);
    ASSERT_NEAR(evaluate_cost(p, u), ref, 1e-10 * (1.0 + ref));
  }
  EXPECT_NEAR(evaluate_cost(p, Vector::Zero(50)), 51.0, 1e-12);
}

// Second differences of a quadratic do not depend on the base point.
TEST(DoubleIntegrator, ConstantSecondDifference) {
  const ControlProblem p = make_double_integrator();
  std::mt19937_64 rng(4);
  const Vector d = uniform(50, -1.0, 1.0, rng);
  const double h = 0.5;
  std::vector<double> second;
  for (int i = 0; i < 5; ++i) {
    const Vector u = uniform(50, -2.0, 2.0, rng);
    second.push_back(evaluate_cost(p, u + 2 * h * d) - 2 * evaluate_cost(p, u + h * d) +
                     evaluate_cost(p, u));
  }
  for (double v : second) EXPECT_NEAR(v, second[0], 1e-9 * std::abs(second[0]));
}

TEST(DoubleIntegrator, Validation) {
  DoubleIntegratorSpec s;
  s.r(0, 0) = -1.0;
  EXPECT_THROW(make_double_integrator(s), InvalidArgument);
  s = {};
  s.x0 = Vector::Zero(3);
  EXPECT_THROW(make_double_integrator(s), DimensionMismatch);
  EXPECT_EQ(DoubleIntegratorSpec::with_dt(0.2).a(0, 1), 0.2);
}

TEST(Furuta, CostMatchesIndependentRollout) {
  for (bool friction : {false, true}) {
    FurutaSpec s;
    s.friction_enabled = friction;
    const ControlProblem p = make_furuta(s);
    EXPECT_EQ(p.dim(), s.horizon);
    EXPECT_EQ(p.residual_size(), 5 * s.horizon);
    EXPECT_NEAR(evaluate_cost(p, p.initial_guess), oracle::furuta_cost(s, p.initial_guess), 1e-9);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
      const Vector u = uniform(s.horizon, -1.5, 1.5, rng);
      const double ref = oracle::furuta_cost(s, u);
      ASSERT_NEAR(evaluate_cost(p, u), ref, 1e-9 * (1.0 + ref));
    }
  }
}

TEST(Furuta, ZeroTrackingWeightsLeaveInputPenalty) {
  FurutaSpec s;
  s.state_weights.setZero();
  const ControlProblem p = make_furuta(s);
  std::mt19937_64 rng(6);
  const Vector u = uniform(s.horizon, -1.0, 1.0, rng);
  EXPECT_NEAR(evaluate_cost(p, u), s.input_weight * u.squaredNorm(), 1e-12);
}

TEST(Furuta, DeadzoneIdentity) {
  FurutaSpec plain;
  FurutaSpec dz = plain;
  dz.friction_enabled = true;
  std::mt19937_64 rng(7);
  // Inputs inside the deadzone act like no input at all.
  const Vector small = uniform(plain.horizon, -dz.friction_threshold, dz.friction_threshold, rng);
  EXPECT_EQ(dz.simulate(small).values(), plain.simulate(Vector::Zero(plain.horizon)).values());
  // Inputs outside it pass through unchanged.
  Vector large = uniform(plain.horizon, 0.2, 1.0, rng);
  for (Index k = 0; k < large.size(); k += 2) large[k] = -large[k];
  EXPECT_EQ(dz.simulate(large).values(), plain.simulate(large).values());
}

TEST(Furuta, FrictionVariantFiniteOnProbes) {
  FurutaSpec s;
  s.friction_enabled = true;
  const ControlProblem p = make_furuta(s);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    ASSERT_TRUE(std::isfinite(evaluate_cost(p, uniform(s.horizon, -3.0, 3.0, rng))));
  }
}

TEST(Furuta, ZeroInputHasNoDerivativeWithFriction) {
  FurutaSpec s;
  s.friction_enabled = true;
  const ControlProblem p = make_furuta(s);
  const JacobianEstimate j = fd_jacobian(*p.residual, p.initial_guess);
  // Only the input penalty rows react, and those vanish at U = 0.
  EXPECT_EQ((j.matrix.transpose() * j.residual).squaredNorm(), 0.0);
}

TEST(Furuta, Validation) {
  FurutaSpec s;
  s.x0 = Vector::Zero(3);
  EXPECT_THROW(make_furuta(s), DimensionMismatch);
  s = {};
  s.input_weight = -1.0;
  EXPECT_THROW(make_furuta(s), InvalidArgument);
  s = {};
  s.dt = 0.0;
  EXPECT_THROW(make_furuta(s), InvalidArgument);
}

// Every benchmark cost is a squared norm and never negative.
TEST(ProblemProperty, NonNegativeCosts) {
  std::mt19937_64 rng(9);
  for (const ControlProblem& p :
       {make_rosenbrock(), make_rastrigin(), make_heaviside(), make_double_integrator(),
        make_furuta()}) {
    for (int i = 0; i < 50; ++i) {
      ASSERT_GE(evaluate_cost(p, uniform(p.dim(), -2.0, 2.0, rng)), 0.0) << p.name;
    }
  }
}

// Solvers only ever call eval: wrapping the residual changes nothing.
TEST(ProblemProperty, SolversSeeOnlyTheBlackBox) {
  const ControlProblem p = make_rosenbrock();
  ControlProblem wrapped = p;
  const auto counting = std::make_shared<oracle::CountingResidual>(p.residual);
  wrapped.residual = counting;
  const SolverResult a = solve_ggn_fd(p, p.initial_guess, FdSolverConfig{});
  const SolverResult b = solve_ggn_fd(wrapped, p.initial_guess, FdSolverConfig{});
  EXPECT_EQ(a.solution, b.solution);
  EXPECT_EQ(a.trace.iterations(), b.trace.iterations());
  EXPECT_GT(counting->calls(), 0);
}

#include "gnmppi/ggn.hpp"
#include "gnmppi/problems.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gnmppi;

namespace {

ControlProblem scalar_quadratic() {
  ControlProblem p;
  p.name = "quad";
  p.residual = std::make_shared<FunctionResidual>(1, 1, [](const Vector& u) { return u; });
  p.outer = std::make_shared<SquaredNormOuter>(1.0);
  p.initial_guess = Vector::Constant(1, 1.0);
  return p;
}

}  // namespace

TEST(BuildSubproblem, RosenbrockAtOrigin) {
  const ControlProblem p = make_rosenbrock();
  const Vector r = p.residual->eval(Vector::Zero(2));
  const GgnSubproblem sub = build_subproblem(*p.outer, r, oracle::rosenbrock_jacobian(0.0));
  EXPECT_TRUE(sub.hessian.isApprox((Matrix(2, 2) << 2, 0, 0, 200).finished()));
  EXPECT_TRUE(sub.gradient.isApprox((Vector(2) << -2, 0).finished()));
}

TEST(BuildSubproblem, SquaredNormGivesJtJ) {
  std::mt19937_64 rng(5);
  const Matrix j = oracle::random_matrix(6, 4, rng);
  const Vector r = oracle::random_matrix(6, 1, rng);
  const GgnSubproblem sub = build_subproblem(SquaredNormOuter(1.0), r, j, 0.5);
  EXPECT_LE((sub.hessian - j.transpose() * j).norm(), 1e-12);
  EXPECT_LE((sub.gradient - j.transpose() * r).norm(), 1e-12);
  EXPECT_EQ(sub.mu, 0.5);
}

TEST(BuildSubproblem, Errors) {
  EXPECT_THROW(build_subproblem(SquaredNormOuter(), Vector::Zero(3), Matrix::Zero(2, 2)),
               DimensionMismatch);
  EXPECT_THROW(build_subproblem(SquaredNormOuter(), Vector::Zero(2), Matrix::Zero(2, 2), -1.0),
               InvalidArgument);
}

TEST(BuildSubproblemProperty, SymmetricPsd) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 20; ++t) {
    const Matrix j = oracle::random_matrix(7, 5, rng);
    const GgnSubproblem sub = build_subproblem(SquaredNormOuter(3.0), Vector::Ones(7), j);
    EXPECT_LE((sub.hessian - sub.hessian.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    for (int k = 0; k < 10; ++k) {
      Vector v(5);
      for (Index i = 0; i < 5; ++i) v[i] = n01(rng);
      EXPECT_GE(v.dot(sub.hessian * v), -1e-12);
    }
  }
}

TEST(FullGgnStep, RosenbrockFromOrigin) {
  const ControlProblem p = make_rosenbrock();
  const Vector r = p.residual->eval(Vector::Zero(2));
  const GgnStep step =
      full_ggn_step(build_subproblem(*p.outer, r, fd_jacobian(*p.residual, Vector::Zero(2))));
  EXPECT_NEAR(step.direction[0], 1.0, 1e-5);
  EXPECT_NEAR(step.direction[1], 0.0, 1e-5);
}

TEST(FullGgnStep, IdentityHessian) {
  GgnSubproblem sub{(Vector(3) << 1, -2, 3).finished(), Matrix::Identity(3, 3), 0.0};
  EXPECT_TRUE(full_ggn_step(sub).direction.isApprox(-sub.gradient));
}

TEST(FullGgnStep, LinearLeastSquaresInOneStep) {
  std::mt19937_64 rng(11);
  const Matrix a = oracle::random_matrix(9, 4, rng);
  const Vector b = oracle::random_matrix(9, 1, rng);
  const Vector u0 = oracle::random_matrix(4, 1, rng);
  const Vector r0 = a * u0 - b;
  const Vector u1 = u0 + full_ggn_step(build_subproblem(SquaredNormOuter(), r0, a)).direction;
  const Vector ls = a.colPivHouseholderQr().solve(b);
  EXPECT_LE((u1 - ls).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FullGgnStep, ZeroJacobianEscalatesRegularization) {
  GgnSubproblem sub{(Vector(2) << 0.0, 0.0).finished(), Matrix::Zero(2, 2), 0.0};
  const GgnStep step = full_ggn_step(sub);
  EXPECT_GT(step.mu, 0.0);
  EXPECT_EQ(step.direction.norm(), 0.0);
}

TEST(FullGgnStep, SingularHessianEscalatesAndDescends) {
  GgnSubproblem sub{(Vector(2) << 1.0, 1.0).finished(),
                    (Matrix(2, 2) << 1.0, 1.0, 1.0, 1.0).finished(), 0.0};
  const GgnStep step = full_ggn_step(sub);
  EXPECT_GT(step.mu, 0.0);
  EXPECT_LT(sub.gradient.dot(step.direction), 0.0);
}

TEST(FullGgnStep, IndefiniteHessianThrows) {
  GgnSubproblem sub{Vector::Ones(2), (Matrix(2, 2) << -10.0, 0.0, 0.0, 1.0).finished(), 0.0};
  EXPECT_THROW(full_ggn_step(sub), SingularHessian);
}

// Random SPD systems up to dimension 64.
TEST(FullGgnStepProperty, SolvesRegularizedSystem) {
  std::mt19937_64 rng(13);
  for (Index n : {1, 2, 5, 16, 33, 64}) {
    const Matrix a = oracle::random_matrix(n + 3, n, rng);
    const Vector g = oracle::random_matrix(n, 1, rng);
    const double mu = n % 2 ? 0.0 : 0.1;
    const GgnSubproblem sub{g, a.transpose() * a, mu};
    const GgnStep step = full_ggn_step(sub);
    Matrix h = sub.hessian;
    h.diagonal().array() += step.mu;
    EXPECT_LE((h * step.direction + g).norm(), 1e-8 * (g.norm() + 1.0)) << n;
    EXPECT_LE(g.dot(step.direction), 0.0);
  }
}

// For Rosenbrock the exact Hessian of C minus B_GGN is the residual-curvature
// term sum_j dPhi/dR_j * Hess(R_j); only R_2 = sqrt(200)(u2 - u1^2) is curved.
TEST(GgnHessianError, MatchesResidualCurvatureTerm) {
  const ControlProblem p = make_rosenbrock();
  auto cost = [&](const Vector& u) { return evaluate_cost(p, u); };
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  for (int t = 0; t < 20; ++t) {
    const Vector u = (Vector(2) << d(rng), d(rng)).finished();
    const double h = 1e-4;
    Matrix hess(2, 2);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        Vector pp = u, pm = u, mp = u, mm = u;
        pp[i] += h; pp[j] += h;
        pm[i] += h; pm[j] -= h;
        mp[i] -= h; mp[j] += h;
        mm[i] -= h; mm[j] -= h;
        hess(i, j) = (cost(pp) - cost(pm) - cost(mp) + cost(mm)) / (4 * h * h);
      }
    }
    const Vector r = p.residual->eval(u);
    const Matrix b = build_subproblem(*p.outer, r, oracle::rosenbrock_jacobian(u[0])).hessian;
    Matrix curvature = Matrix::Zero(2, 2);
    curvature(0, 0) = r[1] * (-2.0 * std::sqrt(200.0));
    EXPECT_LE((hess - b - curvature).cwiseAbs().maxCoeff(), 1e-3);
  }
}

// A full step with an exact Jacobian solves the double-integrator QP.
TEST(FullGgnStep, QpOneStep) {
  const DoubleIntegratorSpec spec;
  const ControlProblem p = make_double_integrator(spec);
  const Vector u0 = Vector::Zero(p.dim());
  const JacobianEstimate j = fd_jacobian(*p.residual, u0);
  const Vector u1 = u0 + full_ggn_step(build_subproblem(*p.outer, j.residual, j)).direction;
  EXPECT_LE((u1 - oracle::double_integrator_qp(spec).inputs).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(StepLengthGrid, ShrinkingDefault) {
  const std::vector<double> a = StepLengthGrid{}.lengths();
  ASSERT_EQ(a.size(), 2000u);
  EXPECT_EQ(a[0], 1.0);
  EXPECT_DOUBLE_EQ(a[2], 0.49);
  for (std::size_t i = 1; i < a.size(); ++i) {
    ASSERT_LT(a[i], a[i - 1]);
    ASSERT_GT(a[i], 0.0);
  }
}

TEST(StepLengthGrid, MagnifyingVariants) {
  StepLengthGrid literal{0.5, 4, StepGridKind::magnifying};
  EXPECT_EQ(literal.lengths(), (std::vector<double>{8.0, 4.0, 2.0, 1.0}));
  StepLengthGrid extra{0.5, 3, StepGridKind::shrinking, 2};
  EXPECT_EQ(extra.lengths(), (std::vector<double>{4.0, 2.0, 1.0, 0.5, 0.25}));
}

TEST(StepLengthGrid, Validation) {
  EXPECT_THROW((StepLengthGrid{1.0, 3}.lengths()), InvalidArgument);
  EXPECT_THROW((StepLengthGrid{0.5, 0}.lengths()), InvalidArgument);
  EXPECT_THROW((StepLengthGrid{0.5, 3, StepGridKind::shrinking, -1}.lengths()), InvalidArgument);
}

TEST(GridLineSearch, FullNewtonStepOnQuadratic) {
  const ControlProblem p = scalar_quadratic();
  const LineSearchResult ls =
      grid_line_search(p, Vector::Constant(1, 1.0), Vector::Constant(1, -1.0), StepLengthGrid{0.7, 50});
  EXPECT_EQ(ls.alpha, 1.0);
  EXPECT_EQ(ls.cost, 0.0);
}

TEST(GridLineSearch, OvershootingDirection) {
  const ControlProblem p = scalar_quadratic();
  const StepLengthGrid grid{0.7, 50};
  const LineSearchResult ls =
      grid_line_search(p, Vector::Constant(1, 1.0), Vector::Constant(1, -2.0), grid);
  // Enumerate the grid for the oracle.
  double best = 0, best_cost = 1e300;
  for (double a : grid.lengths()) {
    const double c = 0.5 * (1 - 2 * a) * (1 - 2 * a);
    if (c < best_cost) best_cost = c, best = a;
  }
  EXPECT_DOUBLE_EQ(ls.alpha, best);
  EXPECT_DOUBLE_EQ(ls.alpha, 0.49);
}

TEST(GridLineSearch, UphillPicksSmallestStep) {
  const ControlProblem p = scalar_quadratic();
  const StepLengthGrid grid{0.5, 10};
  const LineSearchResult ls =
      grid_line_search(p, Vector::Constant(1, 1.0), Vector::Constant(1, 1.0), grid);
  EXPECT_DOUBLE_EQ(ls.alpha, grid.lengths().back());
  EXPECT_GT(ls.cost, 0.5);
}

TEST(GridLineSearch, TiesGoToLargerStep) {
  ControlProblem p = scalar_quadratic();
  p.residual = std::make_shared<FunctionResidual>(1, 1, [](const Vector&) { return Vector::Ones(1); });
  const LineSearchResult ls =
      grid_line_search(p, Vector::Zero(1), Vector::Ones(1), StepLengthGrid{0.5, 8});
  EXPECT_EQ(ls.alpha, 1.0);
}

TEST(GridLineSearch, DiscardsNonFinitePoints) {
  ControlProblem p = scalar_quadratic();
  p.residual = std::make_shared<FunctionResidual>(1, 1, [](const Vector& u) {
    return Vector::Constant(1, u[0] < 0.2 ? std::numeric_limits<double>::quiet_NaN() : u[0]);
  });
  const LineSearchResult ls =
      grid_line_search(p, Vector::Constant(1, 1.0), Vector::Constant(1, -1.0), StepLengthGrid{0.5, 6});
  // Only alpha = 1 lands below 0.2.
  EXPECT_EQ(ls.discarded, 1);
  EXPECT_DOUBLE_EQ(ls.alpha, 0.5);
}

TEST(GridLineSearch, AllNonFiniteThrows) {
  ControlProblem p = scalar_quadratic();
  p.residual = std::make_shared<FunctionResidual>(1, 1, [](const Vector&) {
    return Vector::Constant(1, std::numeric_limits<double>::infinity());
  });
  EXPECT_THROW(grid_line_search(p, Vector::Zero(1), Vector::Ones(1), StepLengthGrid{0.5, 4}),
               NonFiniteResidual);
}

TEST(GridLineSearch, RejectsBadDirections) {
  const ControlProblem p = scalar_quadratic();
  EXPECT_THROW(grid_line_search(p, Vector::Zero(1), Vector::Zero(1), StepLengthGrid{}),
               InvalidArgument);
  EXPECT_THROW(grid_line_search(p, Vector::Zero(1),
                                Vector::Constant(1, std::numeric_limits<double>::quiet_NaN()),
                                StepLengthGrid{}),
               InvalidArgument);
}

TEST(GridLineSearch, OneBatchOfGridSize) {
  ControlProblem p = make_rosenbrock();
  const auto counting = std::make_shared<oracle::CountingResidual>(p.residual);
  p.residual = counting;
  BatchEvaluator ev(2);
  grid_line_search(p, Vector::Zero(2), Vector::Ones(2), StepLengthGrid{0.7, 123}, ev);
  EXPECT_EQ(ev.batches(), 1u);
  EXPECT_EQ(counting->calls(), 123);
}

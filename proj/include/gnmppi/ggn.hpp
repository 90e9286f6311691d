#ifndef GNMPPI_GGN_HPP
#define GNMPPI_GGN_HPP

#include "gnmppi/core.hpp"
#include "gnmppi/jacobian.hpp"
#include "gnmppi/problem.hpp"

#include <Eigen/Cholesky>

#include <array>
#include <cmath>
#include <vector>

namespace gnmppi {

/// Quadratic model g^T d + 1/2 d^T (B + mu I) d with B = J^T Hess(Phi) J.
struct GgnSubproblem {
  Vector gradient;
  Matrix hessian;
  double mu = 0.0;
};

inline GgnSubproblem build_subproblem(const ConvexOuter& outer, const Vector& residual,
                                      const Matrix& jacobian, double mu = 0.0) {
  if (jacobian.rows() != residual.size()) {
    throw DimensionMismatch("Jacobian rows must equal the residual length");
  }
  if (mu < 0.0) throw InvalidArgument("regularization must be non-negative");
  const Matrix h_outer = outer.hessian(residual);
  if (h_outer.rows() != residual.size() || h_outer.cols() != residual.size()) {
    throw DimensionMismatch("outer Hessian has the wrong shape");
  }
  GgnSubproblem sub;
  sub.gradient = jacobian.transpose() * outer.gradient(residual);
  Matrix b = jacobian.transpose() * h_outer * jacobian;
  sub.hessian = 0.5 * (b + b.transpose());
  sub.mu = mu;
  return sub;
}

inline GgnSubproblem build_subproblem(const ConvexOuter& outer, const Vector& residual,
                                      const JacobianEstimate& jacobian, double mu = 0.0) {
  return build_subproblem(outer, residual, jacobian.matrix, mu);
}

struct GgnStep {
  Vector direction;
  /// Regularization actually used (sub.mu unless escalation kicked in).
  double mu = 0.0;
};

/// Solves (B + mu I) d = -g by Cholesky. If the factorization fails, mu is
/// escalated through {1e-10, 1e-8, ..., 1e-2} * tr(B)/n (tr(B)/n replaced by 1
/// when B vanishes).
inline GgnStep full_ggn_step(const GgnSubproblem& sub) {
  const Index n = sub.gradient.size();
  if (sub.hessian.rows() != n || sub.hessian.cols() != n) {
    throw DimensionMismatch("GGN Hessian and gradient sizes differ");
  }
  auto attempt = [&](double mu, GgnStep& out) {
    Matrix h = sub.hessian;
    h.diagonal().array() += mu;
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success) return false;
    Vector d = llt.solve(-sub.gradient);
    if (!d.allFinite()) return false;
    out = {std::move(d), mu};
    return true;
  };

  GgnStep step;
  if (attempt(sub.mu, step)) return step;

  double scale = sub.hessian.trace() / static_cast<double>(n);
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  constexpr std::array<double, 5> kLadder{1e-10, 1e-8, 1e-6, 1e-4, 1e-2};
  for (double factor : kLadder) {
    if (attempt(sub.mu + factor * scale, step)) return step;
  }
  throw SingularHessian();
}

enum class StepGridKind {
  /// gamma^j, j = 0..count-1: 1, gamma, gamma^2, ...
  shrinking,
  /// gamma^{-j}: 1, 1/gamma, 1/gamma^2, ... (the set taken literally)
  magnifying,
};

struct StepLengthGrid {
  double gamma = 0.7;
  Index count = 2000;
  StepGridKind kind = StepGridKind::shrinking;
  /// Extra magnifying points gamma^{-1}..gamma^{-extra} prepended to a
  /// shrinking grid.
  int extra_magnifying = 0;

  /// Step lengths in strictly decreasing order.
  std::vector<double> lengths() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
    if (count < 1) throw InvalidArgument("step-length grid needs at least one point");
    if (extra_magnifying < 0) throw InvalidArgument("extra magnifying count is negative");
    std::vector<double> out;
    if (kind == StepGridKind::magnifying) {
      for (Index j = count - 1; j >= 0; --j) out.push_back(std::pow(gamma, -static_cast<double>(j)));
      return out;
    }
    for (int j = extra_magnifying; j >= 1; --j) out.push_back(std::pow(gamma, -static_cast<double>(j)));
    for (Index j = 0; j < count; ++j) out.push_back(std::pow(gamma, static_cast<double>(j)));
    return out;
  }
};

struct LineSearchResult {
  double alpha = 0.0;
  double cost = 0.0;
  /// Grid points dropped because the black box returned non-finite values.
  Index discarded = 0;
};

/// argmin over the grid of C(U + alpha d), evaluated as one batch. Ties go to
/// the larger alpha. Non-finite grid points are skipped; if every point fails
/// the first offending index is reported.
inline LineSearchResult grid_line_search(const ControlProblem& problem, const Vector& u,
                                         const Vector& direction, const StepLengthGrid& grid,
                                         BatchEvaluator& evaluator) {
  if (direction.size() != u.size()) throw DimensionMismatch("direction size mismatch");
  if (!direction.allFinite()) throw InvalidArgument("search direction is not finite");
  if (direction.squaredNorm() == 0.0) throw InvalidArgument("search direction is zero");

  const std::vector<double> alphas = grid.lengths();
  const Index count = static_cast<Index>(alphas.size());
  Matrix inputs(u.size(), count);
  for (Index j = 0; j < count; ++j) inputs.col(j) = u + alphas[j] * direction;
  const Vector costs = evaluator.costs_lenient(problem, inputs);

  LineSearchResult best;
  bool found = false;
  for (Index j = 0; j < count; ++j) {
    if (!std::isfinite(costs[j])) {
      ++best.discarded;
      continue;
    }
    if (!found || costs[j] < best.cost) {
      best.alpha = alphas[j];
      best.cost = costs[j];
      found = true;
    }
  }
  if (!found) throw NonFiniteResidual(0);
  return best;
}

inline LineSearchResult grid_line_search(const ControlProblem& problem, const Vector& u,
                                         const Vector& direction, const StepLengthGrid& grid) {
  BatchEvaluator evaluator;
  return grid_line_search(problem, u, direction, grid, evaluator);
}

}  // namespace gnmppi

#endif  // GNMPPI_GGN_HPP

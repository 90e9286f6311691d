#ifndef GNMPPI_SOLVERS_HPP
#define GNMPPI_SOLVERS_HPP

#include "gnmppi/core.hpp"
#include "gnmppi/ggn.hpp"
#include "gnmppi/jacobian.hpp"
#include "gnmppi/mppi.hpp"
#include "gnmppi/problem.hpp"
#include "gnmppi/sampling.hpp"
#include "gnmppi/trace.hpp"

#include <cstdint>
#include <string_view>

namespace gnmppi {

/// The four compared methods.
enum class Method {
  ggn_fd,            ///< A: GGN with forward-difference Jacobian of R
  gradient_descent,  ///< B: steepest descent with forward-difference gradient of C
  mppi,              ///< C: deterministic MPPI
  gn_mppi,           ///< D: Gauss-Newton accelerated MPPI
};

inline char method_letter(Method m) {
  switch (m) {
    case Method::ggn_fd: return 'A';
    case Method::gradient_descent: return 'B';
    case Method::mppi: return 'C';
    case Method::gn_mppi: return 'D';
  }
  return '?';
}

inline Method method_from_letter(std::string_view s) {
  if (s == "A") return Method::ggn_fd;
  if (s == "B") return Method::gradient_descent;
  if (s == "C") return Method::mppi;
  if (s == "D") return Method::gn_mppi;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected A, B, C or D)");
}

inline bool is_stochastic(Method m) { return m == Method::mppi || m == Method::gn_mppi; }

/// Settings of the finite-difference baselines (Methods A and B).
struct FdSolverConfig {
  Index max_iters = 1000;
  double fd_step = kDefaultFdStep;
  StepLengthGrid grid{0.7, 60};
  double mu = 0.0;
  StopCriteria stop;
  /// Deterministic methods repeat a rejected step forever; stop instead.
  bool terminate_on_rejection = true;
};

/// Inputs of Gauss-Newton accelerated MPPI.
struct GnMppiConfig {
  Index max_iters = 100;
  Index samples = 2000;
  DiagonalCovariance cov = DiagonalCovariance::isotropic(1, 1.0);
  /// Sigma_{k+1} = shrink * Sigma_k.
  double shrink = 0.8;
  StepLengthGrid grid{0.7, 2000};
  double mu = 0.0;
  StopCriteria stop;
  std::uint64_t seed = 0;
  bool antithetic = true;
  /// Append U_k to the smoothing batch and use the exact R(U_k) instead of
  /// the sample mean.
  bool exact_center_residual = false;
  bool terminate_on_rejection = false;

  void validate(Index dim) const {
    if (max_iters < 1) throw InvalidArgument("iteration budget must be positive");
    if (samples < 2) throw InvalidArgument("smoothing needs at least two samples");
    if (antithetic && samples % 2 != 0) throw OddBatchWithAntithetic();
    if (cov.dim() != dim) throw DimensionMismatch("covariance dimension mismatch");
    if (!(shrink > 0.0 && shrink <= 1.0)) throw InvalidArgument("shrink rate must lie in (0, 1]");
  }
};

namespace detail {

/// Common tail of the line-search methods: search along `direction`, accept
/// only improving steps, record the iteration and decide whether to stop.
/// Returns true when the solver should terminate.
inline bool line_search_iteration(const ControlProblem& problem, Vector& u, double& cost,
                                  const Vector& direction, double grad_norm,
                                  const StepLengthGrid& grid, const StopCriteria& stop,
                                  bool terminate_on_rejection, std::size_t batches_so_far,
                                  Index k, const Stopwatch& clock, BatchEvaluator& evaluator,
                                  SolverTrace& trace) {
  IterationRecord rec;
  rec.k = k + 1;
  rec.grad_norm = grad_norm;
  rec.batches = batches_so_far;
  rec.accepted = false;
  rec.step_norm = 0.0;

  if (direction.squaredNorm() > 0.0) {
    LineSearchResult ls = grid_line_search(problem, u, direction, grid, evaluator);
    ++rec.batches;
    rec.alpha = ls.alpha;
    if (ls.cost < cost) {
      const Vector step = ls.alpha * direction;
      u += step;
      cost = ls.cost;
      rec.step_norm = step.norm();
      rec.accepted = true;
    }
  }
  rec.iterate = u;
  rec.cost = cost;
  rec.wall_ms = clock.elapsed_ms();
  trace.records.push_back(std::move(rec));

  const IterationRecord& last = trace.records.back();
  if (stop.satisfied(last.step_norm, last.grad_norm)) {
    trace.status = SolverStatus::converged;
    return true;
  }
  if (!last.accepted && terminate_on_rejection) {
    trace.status = last.grad_norm < stop.grad_tol ? SolverStatus::converged
                                                  : SolverStatus::iteration_cap;
    return true;
  }
  return false;
}

}  // namespace detail

/// Method A: GGN steps with a forward-difference Jacobian of R and the grid
/// line search. Two batches per iteration.
inline SolverResult solve_ggn_fd(const ControlProblem& problem, const Vector& u0,
                                 const FdSolverConfig& cfg, BatchEvaluator& evaluator) {
  if (u0.size() != problem.dim()) throw DimensionMismatch("initial guess has the wrong length");
  SolverResult result{u0, {}};
  SolverTrace& trace = result.trace;
  trace.records.push_back({0, u0});
  Vector& u = result.solution;
  double cost = 0.0;

  try {
    for (Index k = 0; k < cfg.max_iters; ++k) {
      Stopwatch clock;
      JacobianEstimate jac = fd_jacobian(*problem.residual, u, cfg.fd_step, evaluator);
      if (k == 0) {
        cost = problem.outer->value(jac.residual);
        trace.records.front().cost = cost;
      }
      GgnSubproblem sub = build_subproblem(*problem.outer, jac.residual, jac, cfg.mu);
      if (k == 0) trace.vanishing_derivative = sub.gradient.squaredNorm() == 0.0;
      Vector direction = full_ggn_step(sub).direction;
      if (detail::line_search_iteration(problem, u, cost, direction, sub.gradient.norm(),
                                        cfg.grid, cfg.stop, cfg.terminate_on_rejection, 1, k,
                                        clock, evaluator, trace)) {
        return result;
      }
    }
  } catch (const Error& e) {
    trace.status = SolverStatus::error;
    trace.error_message = e.what();
    return result;
  }
  trace.status = SolverStatus::iteration_cap;
  return result;
}

/// Method B: steepest descent on a forward-difference gradient of C.
inline SolverResult solve_gradient_descent_fd(const ControlProblem& problem, const Vector& u0,
                                              const FdSolverConfig& cfg,
                                              BatchEvaluator& evaluator) {
  if (u0.size() != problem.dim()) throw DimensionMismatch("initial guess has the wrong length");
  SolverResult result{u0, {}};
  SolverTrace& trace = result.trace;
  trace.records.push_back({0, u0});
  Vector& u = result.solution;
  const Index n = u.size();
  double cost = 0.0;

  try {
    for (Index k = 0; k < cfg.max_iters; ++k) {
      Stopwatch clock;
      Matrix inputs = u.replicate(1, n + 1);
      for (Index j = 0; j < n; ++j) inputs(j, j + 1) += cfg.fd_step;
      const Vector c = evaluator.costs(problem, inputs);
      const Vector grad = (c.tail(n).array() - c[0]).matrix() / cfg.fd_step;
      if (k == 0) {
        cost = c[0];
        trace.records.front().cost = cost;
        trace.vanishing_derivative = grad.squaredNorm() == 0.0;
      }
      if (detail::line_search_iteration(problem, u, cost, -grad, grad.norm(), cfg.grid,
                                        cfg.stop, cfg.terminate_on_rejection, 1, k, clock,
                                        evaluator, trace)) {
        return result;
      }
    }
  } catch (const Error& e) {
    trace.status = SolverStatus::error;
    trace.error_message = e.what();
    return result;
  }
  trace.status = SolverStatus::iteration_cap;
  return result;
}

/// Method C.
inline SolverResult solve_mppi(const ControlProblem& problem, const Vector& u0,
                               const MppiConfig& cfg, BatchEvaluator& evaluator) {
  return mppi_solve(problem, u0, cfg, evaluator);
}

/// Method D, Gauss-Newton accelerated MPPI. Each iteration:
///   1. smoothed Jacobian and mean residual from one batch of M samples,
///   2. full GGN step from the convex outer function,
///   3. grid line search as a second batch,
///   4. step applied if it lowers the cost,
///   5. Sigma <- shrink * Sigma.
/// One extra batch before the loop evaluates C(U_0).
inline SolverResult solve_gn_mppi(const ControlProblem& problem, const Vector& u0,
                                  const GnMppiConfig& cfg, BatchEvaluator& evaluator) {
  cfg.validate(problem.dim());
  if (u0.size() != problem.dim()) throw DimensionMismatch("initial guess has the wrong length");
  SolverResult result{u0, {}};
  SolverTrace& trace = result.trace;
  trace.records.push_back({0, u0});
  Vector& u = result.solution;
  DiagonalCovariance cov = cfg.cov;
  const Index m = cfg.samples;

  try {
    double cost = evaluator.costs(problem, u)[0];
    ++trace.overhead_batches;
    trace.records.front().cost = cost;

    for (Index k = 0; k < cfg.max_iters; ++k) {
      Stopwatch clock;
      const SampleBatch samples =
          draw(cov, m, derive_seed(cfg.seed, static_cast<std::uint64_t>(k)), cfg.antithetic);
      Matrix inputs(u.size(), cfg.exact_center_residual ? m + 1 : m);
      inputs.leftCols(m) = perturbed_inputs(u, samples);
      if (cfg.exact_center_residual) inputs.col(m) = u;
      const Matrix r = evaluator.residuals(*problem.residual, inputs);

      const Matrix jac = smoothing_jacobian_from(r.leftCols(m), samples, cov);
      const Vector center =
          cfg.exact_center_residual ? Vector(r.col(m)) : Vector(r.leftCols(m).rowwise().mean());
      GgnSubproblem sub = build_subproblem(*problem.outer, center, jac, cfg.mu);
      if (k == 0) trace.vanishing_derivative = sub.gradient.squaredNorm() == 0.0;
      Vector direction = full_ggn_step(sub).direction;
      if (detail::line_search_iteration(problem, u, cost, direction, sub.gradient.norm(),
                                        cfg.grid, cfg.stop, cfg.terminate_on_rejection, 1, k,
                                        clock, evaluator, trace)) {
        return result;
      }
      cov = cov.scaled(cfg.shrink);
    }
  } catch (const Error& e) {
    trace.status = SolverStatus::error;
    trace.error_message = e.what();
    return result;
  }
  trace.status = SolverStatus::iteration_cap;
  return result;
}

inline SolverResult solve_gn_mppi(const ControlProblem& problem, const Vector& u0,
                                  const GnMppiConfig& cfg) {
  BatchEvaluator evaluator;
  return solve_gn_mppi(problem, u0, cfg, evaluator);
}

inline SolverResult solve_ggn_fd(const ControlProblem& problem, const Vector& u0,
                                 const FdSolverConfig& cfg) {
  BatchEvaluator evaluator;
  return solve_ggn_fd(problem, u0, cfg, evaluator);
}

inline SolverResult solve_gradient_descent_fd(const ControlProblem& problem, const Vector& u0,
                                              const FdSolverConfig& cfg) {
  BatchEvaluator evaluator;
  return solve_gradient_descent_fd(problem, u0, cfg, evaluator);
}

}  // namespace gnmppi

#endif  // GNMPPI_SOLVERS_HPP

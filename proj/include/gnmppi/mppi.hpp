#ifndef GNMPPI_MPPI_HPP
#define GNMPPI_MPPI_HPP

#include "gnmppi/core.hpp"
#include "gnmppi/jacobian.hpp"
#include "gnmppi/problem.hpp"
#include "gnmppi/sampling.hpp"
#include "gnmppi/trace.hpp"

#include <cmath>
#include <cstdint>
#include <optional>

namespace gnmppi {

struct MppiConfig {
  /// Temperature of the weight softmax.
  double lambda = 1.0;
  DiagonalCovariance cov = DiagonalCovariance::isotropic(1, 1.0);
  Index samples = 2000;
  Index max_iters = 1000;
  bool antithetic = true;
  std::uint64_t seed = 0;
  StopCriteria stop;
  /// Per-iteration covariance factor; 1 keeps Sigma constant.
  double shrink = 1.0;

  void validate(Index dim) const {
    if (!(lambda > 0.0)) throw InvalidArgument("MPPI temperature must be positive");
    if (cov.dim() != dim) throw DimensionMismatch("MPPI covariance dimension mismatch");
    if (samples < 2) throw InvalidArgument("MPPI needs at least two samples");
    if (antithetic && samples % 2 != 0) throw OddBatchWithAntithetic();
    if (max_iters < 1) throw InvalidArgument("iteration budget must be positive");
    if (!(shrink > 0.0 && shrink <= 1.0)) throw InvalidArgument("shrink factor must lie in (0, 1]");
  }
};

struct MppiStep {
  Vector delta;
  /// Normalized weights, summing to one.
  Vector weights;
  SampleBatch samples;
  Vector costs;
  /// C(U), present when the centre was evaluated alongside the samples.
  std::optional<double> center_cost;
};

/// Normalized weights exp(-(c_m - min c)/lambda) / sum. Subtracting the minimum
/// leaves the normalized weights unchanged and keeps the best sample at 1.
inline Vector mppi_weights(const Vector& costs, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("MPPI temperature must be positive");
  const double c_min = costs.minCoeff();
  Vector w = (-(costs.array() - c_min) / lambda).exp().matrix();
  const double total = w.sum();
  if (!(total > 0.0) || !std::isfinite(total)) throw DegenerateWeights();
  return w / total;
}

inline double weight_entropy(const Vector& weights) {
  double h = 0.0;
  for (Index i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) h -= weights[i] * std::log(weights[i]);
  }
  return h;
}

/// One MPPI update around U with covariance `cov`, evaluated as a single
/// batch. With `evaluate_center` the batch also contains U itself.
inline MppiStep mppi_step(const ControlProblem& problem, const Vector& u, const MppiConfig& cfg,
                          const DiagonalCovariance& cov, std::uint64_t iter_seed,
                          BatchEvaluator& evaluator, bool evaluate_center = false) {
  if (u.size() != problem.dim() || cov.dim() != u.size()) {
    throw DimensionMismatch("MPPI input and covariance dimensions differ");
  }
  if (cfg.samples < 2) throw InvalidArgument("MPPI needs at least two samples");

  MppiStep step;
  step.samples = draw(cov, cfg.samples, iter_seed, cfg.antithetic);
  const Index m = cfg.samples;
  Matrix inputs(u.size(), evaluate_center ? m + 1 : m);
  inputs.leftCols(m) = perturbed_inputs(u, step.samples);
  if (evaluate_center) inputs.col(m) = u;

  Vector all = evaluator.costs(problem, inputs);
  step.costs = all.head(m);
  if (evaluate_center) step.center_cost = all[m];
  step.weights = mppi_weights(step.costs, cfg.lambda);
  if (step.samples.antithetic) {
    const Index h = m / 2;
    step.delta = step.samples.perturbations.leftCols(h) * (step.weights.head(h) - step.weights.tail(h));
  } else {
    step.delta = step.samples.perturbations * step.weights;
  }
  return step;
}

inline MppiStep mppi_step(const ControlProblem& problem, const Vector& u, const MppiConfig& cfg,
                          std::uint64_t iter_seed) {
  BatchEvaluator evaluator;
  return mppi_step(problem, u, cfg, cfg.cov, iter_seed, evaluator);
}

/// Deterministic MPPI: U_{k+1} = U_k + dU(U_k). One batch per iteration (the
/// samples plus the centre, whose cost goes into the trace); one extra batch
/// at the end evaluates the final iterate.
inline SolverResult mppi_solve(const ControlProblem& problem, const Vector& u0,
                               const MppiConfig& cfg, BatchEvaluator& evaluator) {
  cfg.validate(problem.dim());
  if (u0.size() != problem.dim()) throw DimensionMismatch("initial guess has the wrong length");

  SolverResult result{u0, {}};
  SolverTrace& trace = result.trace;
  trace.records.push_back({0, u0});
  DiagonalCovariance cov = cfg.cov;
  Vector& u = result.solution;

  try {
    for (Index k = 0; k < cfg.max_iters; ++k) {
      Stopwatch clock;
      const std::uint64_t iter_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
      MppiStep step = mppi_step(problem, u, cfg, cov, iter_seed, evaluator, true);
      trace.records.back().cost = *step.center_cost;

      const Vector grad = smoothing_gradient_from(step.costs, step.samples, cov);
      if (k == 0 && grad.squaredNorm() == 0.0) trace.vanishing_derivative = true;
      u += step.delta;

      IterationRecord rec;
      rec.k = k + 1;
      rec.iterate = u;
      rec.step_norm = step.delta.norm();
      rec.grad_norm = grad.norm();
      rec.batches = 1;
      rec.weight_entropy = weight_entropy(step.weights);
      rec.wall_ms = clock.elapsed_ms();
      trace.records.push_back(std::move(rec));

      if (cfg.stop.satisfied(trace.records.back().step_norm, trace.records.back().grad_norm)) {
        trace.status = SolverStatus::converged;
        break;
      }
      if (cfg.shrink != 1.0) cov = cov.scaled(cfg.shrink);
    }
    trace.records.back().cost = evaluator.costs(problem, u)[0];
    ++trace.overhead_batches;
  } catch (const Error& e) {
    trace.status = SolverStatus::error;
    trace.error_message = e.what();
  }
  return result;
}

inline SolverResult mppi_solve(const ControlProblem& problem, const Vector& u0,
                               const MppiConfig& cfg) {
  BatchEvaluator evaluator;
  return mppi_solve(problem, u0, cfg, evaluator);
}

}  // namespace gnmppi

#endif  // GNMPPI_MPPI_HPP

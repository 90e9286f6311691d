#ifndef GNMPPI_JACOBIAN_HPP
#define GNMPPI_JACOBIAN_HPP

#include "gnmppi/core.hpp"
#include "gnmppi/problem.hpp"
#include "gnmppi/sampling.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

namespace gnmppi {

/// Forward-difference step used by the finite-difference baselines
/// (square root of machine epsilon, about 1.49e-8).
inline const double kDefaultFdStep = std::sqrt(std::numeric_limits<double>::epsilon());

enum class JacobianMethod { gaussian_smoothing, finite_difference };

struct JacobianEstimate {
  Matrix matrix;
  JacobianMethod method = JacobianMethod::finite_difference;
  Index samples_used = 0;
  /// Covariance diagonal for smoothing, a single entry eps for differences.
  Vector cov_or_eps;
  /// Residual at the expansion point: the sample mean for smoothing, the
  /// exact value R(U) for differences.
  Vector residual;
};

/// (1/M) sum_m R(U + W_m) W_m^T Sigma^{-1}, from already evaluated samples.
inline Matrix smoothing_jacobian_from(const Matrix& residuals, const SampleBatch& samples,
                                      const DiagonalCovariance& cov) {
  if (residuals.cols() != samples.count() || samples.dim() != cov.dim()) {
    throw DimensionMismatch("residual batch does not match the sample batch");
  }
  Matrix j;
  if (samples.antithetic) {
    // Pair R(U + W) with R(U - W) first so constant parts cancel exactly.
    const Index h = samples.count() / 2;
    j = (residuals.leftCols(h) - residuals.rightCols(h)) *
        samples.perturbations.leftCols(h).transpose();
  } else {
    j = residuals * samples.perturbations.transpose();
  }
  j /= static_cast<double>(samples.count());
  return j * cov.inverse_diag().asDiagonal();
}

/// Gradient of the Gaussian-smoothed scalar function, (1/M) sum_m c_m Sigma^{-1} W_m.
inline Vector smoothing_gradient_from(const Vector& values, const SampleBatch& samples,
                                      const DiagonalCovariance& cov) {
  if (values.size() != samples.count() || samples.dim() != cov.dim()) {
    throw DimensionMismatch("value batch does not match the sample batch");
  }
  Vector g;
  if (samples.antithetic) {
    const Index h = samples.count() / 2;
    g = samples.perturbations.leftCols(h) * (values.head(h) - values.tail(h));
  } else {
    g = samples.perturbations * values;
  }
  g /= static_cast<double>(samples.count());
  return g.cwiseProduct(cov.inverse_diag());
}

/// Columns U + W_m.
inline Matrix perturbed_inputs(const Vector& u, const SampleBatch& samples) {
  return samples.perturbations.colwise() + u;
}

/// Jacobian of the Gaussian-smoothed residual at U, from exactly one batch of
/// M black-box evaluations.
inline JacobianEstimate smoothed_jacobian(const BlackBoxResidual& residual, const Vector& u,
                                          const DiagonalCovariance& cov, Index samples,
                                          std::uint64_t seed, bool antithetic,
                                          BatchEvaluator& evaluator) {
  if (samples < 2) throw InvalidArgument("smoothing needs at least two samples");
  if (u.size() != cov.dim() || u.size() != residual.input_size()) {
    throw DimensionMismatch("input, covariance and residual dimensions differ");
  }
  SampleBatch batch = draw(cov, samples, seed, antithetic);
  Matrix r = evaluator.residuals(residual, perturbed_inputs(u, batch));
  return {smoothing_jacobian_from(r, batch, cov), JacobianMethod::gaussian_smoothing, samples,
          cov.diag(), r.rowwise().mean()};
}

inline JacobianEstimate smoothed_jacobian(const BlackBoxResidual& residual, const Vector& u,
                                          const DiagonalCovariance& cov, Index samples,
                                          std::uint64_t seed, bool antithetic = true) {
  BatchEvaluator evaluator;
  return smoothed_jacobian(residual, u, cov, samples, seed, antithetic, evaluator);
}

/// Empirical mean of R(U + W_m).
inline Vector smoothed_residual(const BlackBoxResidual& residual, const Vector& u,
                                const DiagonalCovariance& cov, Index samples,
                                std::uint64_t seed, bool antithetic,
                                BatchEvaluator& evaluator) {
  if (u.size() != cov.dim() || u.size() != residual.input_size()) {
    throw DimensionMismatch("input, covariance and residual dimensions differ");
  }
  SampleBatch batch = draw(cov, samples, seed, antithetic);
  return evaluator.residuals(residual, perturbed_inputs(u, batch)).rowwise().mean();
}

inline Vector smoothed_residual(const BlackBoxResidual& residual, const Vector& u,
                                const DiagonalCovariance& cov, Index samples,
                                std::uint64_t seed, bool antithetic = true) {
  BatchEvaluator evaluator;
  return smoothed_residual(residual, u, cov, samples, seed, antithetic, evaluator);
}

/// Forward differences, column j = (R(U + eps e_j) - R(U)) / eps, evaluated as
/// one batch of dim + 1 points.
inline JacobianEstimate fd_jacobian(const BlackBoxResidual& residual, const Vector& u,
                                    double eps, BatchEvaluator& evaluator) {
  if (!(eps > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  if (u.size() != residual.input_size()) throw DimensionMismatch("input size mismatch");
  const Index n = u.size();
  Matrix inputs = u.replicate(1, n + 1);
  for (Index j = 0; j < n; ++j) inputs(j, j + 1) += eps;
  Matrix r = evaluator.residuals(residual, inputs);
  Matrix jac = (r.rightCols(n).colwise() - r.col(0)) / eps;
  return {std::move(jac), JacobianMethod::finite_difference, n + 1, Vector::Constant(1, eps),
          r.col(0)};
}

inline JacobianEstimate fd_jacobian(const BlackBoxResidual& residual, const Vector& u,
                                    double eps = kDefaultFdStep) {
  BatchEvaluator evaluator;
  return fd_jacobian(residual, u, eps, evaluator);
}

}  // namespace gnmppi

#endif  // GNMPPI_JACOBIAN_HPP

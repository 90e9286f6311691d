#ifndef GNMPPI_CORE_HPP
#define GNMPPI_CORE_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gnmppi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The black box returned NaN or Inf. `index()` is the position of the
/// offending sample inside the batch (0 for single evaluations).
class NonFiniteResidual : public Error {
 public:
  explicit NonFiniteResidual(Index index)
      : Error("non-finite residual at batch index " + std::to_string(index)),
        index_(index) {}
  Index index() const { return index_; }

 private:
  Index index_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class OddBatchWithAntithetic : public Error {
 public:
  OddBatchWithAntithetic()
      : Error("antithetic sampling requires an even number of samples") {}
};

class DegenerateWeights : public Error {
 public:
  DegenerateWeights()
      : Error("sample weights sum to zero or NaN; check temperature and cost scale") {}
};

class SingularHessian : public Error {
 public:
  SingularHessian()
      : Error("GGN Hessian factorization failed after regularization escalation") {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Flat input trajectory U = [u_0; u_1; ...; u_{N-1}].
class InputTrajectory {
 public:
  InputTrajectory(Vector values, Index horizon, Index input_dim)
      : values_(std::move(values)), horizon_(horizon), input_dim_(input_dim) {
    if (horizon_ < 1 || input_dim_ < 1) {
      throw InvalidArgument("horizon and input dimension must be positive");
    }
    if (values_.size() != horizon_ * input_dim_) {
      throw DimensionMismatch("input trajectory length must equal N * n_u");
    }
    if (!values_.allFinite()) {
      throw InvalidArgument("input trajectory contains non-finite entries");
    }
  }

  /// Single-stage convenience: N = 1, n_u = values.size().
  explicit InputTrajectory(Vector values)
      : InputTrajectory(values, 1, values.size()) {}

  const Vector& values() const { return values_; }
  Index horizon() const { return horizon_; }
  Index input_dim() const { return input_dim_; }
  Index size() const { return values_.size(); }

  /// Input of stage k.
  auto stage(Index k) const { return values_.segment(k * input_dim_, input_dim_); }

 private:
  Vector values_;
  Index horizon_;
  Index input_dim_;
};

/// Flat state trajectory X = [x_0; x_1; ...; x_N].
class StateTrajectory {
 public:
  StateTrajectory(Vector values, Index state_dim)
      : values_(std::move(values)), state_dim_(state_dim) {
    if (state_dim_ < 1 || values_.size() % state_dim_ != 0 ||
        values_.size() < 2 * state_dim_) {
      throw DimensionMismatch("state trajectory length must equal (N+1) * n_x");
    }
  }

  const Vector& values() const { return values_; }
  Index state_dim() const { return state_dim_; }
  Index horizon() const { return values_.size() / state_dim_ - 1; }
  auto state(Index k) const { return values_.segment(k * state_dim_, state_dim_); }

 private:
  Vector values_;
  Index state_dim_;
};

}  // namespace gnmppi

#endif  // GNMPPI_CORE_HPP

#ifndef GNMPPI_PROBLEM_HPP
#define GNMPPI_PROBLEM_HPP

#include "gnmppi/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace gnmppi {

/// Opaque inner function U -> R(U). The initial state and the simulator live
/// inside the implementation; solvers only ever call `eval`.
///
/// Implementations must be deterministic and safe to call concurrently on a
/// const instance.
class BlackBoxResidual {
 public:
  virtual ~BlackBoxResidual() = default;

  virtual Index input_size() const = 0;
  virtual Index residual_size() const = 0;
  virtual Vector eval(const Vector& u) const = 0;
};

/// Residual backed by a callable. The callable must be thread-safe.
class FunctionResidual final : public BlackBoxResidual {
 public:
  using Fn = std::function<Vector(const Vector&)>;

  FunctionResidual(Index input_size, Index residual_size, Fn fn)
      : input_size_(input_size), residual_size_(residual_size), fn_(std::move(fn)) {}

  Index input_size() const override { return input_size_; }
  Index residual_size() const override { return residual_size_; }
  Vector eval(const Vector& u) const override { return fn_(u); }

 private:
  Index input_size_;
  Index residual_size_;
  Fn fn_;
};

/// Convex outer function Phi with exact first and second derivatives.
class ConvexOuter {
 public:
  virtual ~ConvexOuter() = default;

  virtual double value(const Vector& r) const = 0;
  virtual Vector gradient(const Vector& r) const = 0;
  virtual Matrix hessian(const Vector& r) const = 0;
};

/// Phi(R) = scale/2 * |R|^2.
class SquaredNormOuter final : public ConvexOuter {
 public:
  explicit SquaredNormOuter(double scale = 1.0) : scale_(scale) {
    if (!(scale > 0.0)) throw InvalidArgument("squared-norm scale must be positive");
  }

  double scale() const { return scale_; }
  double value(const Vector& r) const override { return 0.5 * scale_ * r.squaredNorm(); }
  Vector gradient(const Vector& r) const override { return scale_ * r; }
  Matrix hessian(const Vector& r) const override {
    return scale_ * Matrix::Identity(r.size(), r.size());
  }

 private:
  double scale_;
};

struct KnownOptimum {
  double cost = 0.0;
  double tolerance = 1e-3;
};

/// C(U) = Phi(R(U)) together with the metadata a benchmark needs.
struct ControlProblem {
  std::string name;
  std::shared_ptr<const BlackBoxResidual> residual;
  std::shared_ptr<const ConvexOuter> outer;
  Index horizon = 1;
  Index input_dim = 1;
  Vector initial_guess;
  /// Only read by the benchmark classifier, never by solvers.
  std::optional<KnownOptimum> known_optimum;

  Index dim() const { return horizon * input_dim; }
  Index residual_size() const { return residual->residual_size(); }
};

/// Dispatches batches of black-box evaluations over a fixed number of
/// workers. Column j of the output always belongs to column j of the input,
/// so results do not depend on the worker count.
///
/// Counts every batch call; the counters are what budget audits compare
/// against.
class BatchEvaluator {
 public:
  explicit BatchEvaluator(unsigned workers = 1) : workers_(std::max(1u, workers)) {}

  BatchEvaluator(const BatchEvaluator&) = delete;
  BatchEvaluator& operator=(const BatchEvaluator&) = delete;

  unsigned workers() const { return workers_; }
  std::size_t batches() const { return batches_.load(); }
  std::size_t evaluations() const { return evaluations_.load(); }
  void reset_counters() {
    batches_ = 0;
    evaluations_ = 0;
  }

  /// Residuals of every column of `inputs`. Columns whose residual is not
  /// finite are reported in `finite` instead of throwing.
  struct LenientResiduals {
    Matrix values;
    std::vector<char> finite;
  };

  LenientResiduals residuals_lenient(const BlackBoxResidual& residual,
                                     const Matrix& inputs) {
    if (inputs.rows() != residual.input_size()) {
      throw DimensionMismatch("batch input rows do not match the residual input size");
    }
    if (inputs.cols() < 1) throw InvalidArgument("batch must contain at least one sample");
    ++batches_;
    evaluations_ += static_cast<std::size_t>(inputs.cols());

    const Index count = inputs.cols();
    const Index n_r = residual.residual_size();
    LenientResiduals out{Matrix(n_r, count), std::vector<char>(count, 1)};

    auto work = [&](Index begin, Index end) {
      for (Index j = begin; j < end; ++j) {
        Vector r = residual.eval(inputs.col(j));
        if (r.size() != n_r) {
          throw DimensionMismatch("black box returned a residual of the wrong length");
        }
        out.finite[j] = r.allFinite() ? 1 : 0;
        out.values.col(j) = r;
      }
    };
    parallel_for(count, work);
    return out;
  }

  /// Residuals of every column; throws NonFiniteResidual with the first
  /// offending column.
  Matrix residuals(const BlackBoxResidual& residual, const Matrix& inputs) {
    auto res = residuals_lenient(residual, inputs);
    throw_first_nonfinite(res.finite);
    return std::move(res.values);
  }

  /// Costs Phi(R(U_j)); non-finite entries become NaN.
  Vector costs_lenient(const ControlProblem& problem, const Matrix& inputs) {
    auto res = residuals_lenient(*problem.residual, inputs);
    Vector c(inputs.cols());
    for (Index j = 0; j < inputs.cols(); ++j) {
      c[j] = res.finite[j] ? problem.outer->value(res.values.col(j))
                           : std::numeric_limits<double>::quiet_NaN();
    }
    return c;
  }

  Vector costs(const ControlProblem& problem, const Matrix& inputs) {
    auto res = residuals_lenient(*problem.residual, inputs);
    throw_first_nonfinite(res.finite);
    Vector c(inputs.cols());
    for (Index j = 0; j < inputs.cols(); ++j) c[j] = problem.outer->value(res.values.col(j));
    return c;
  }

 private:
  static void throw_first_nonfinite(const std::vector<char>& finite) {
    auto it = std::find(finite.begin(), finite.end(), 0);
    if (it != finite.end()) throw NonFiniteResidual(it - finite.begin());
  }

  template <typename Work>
  void parallel_for(Index count, Work& work) {
    const Index n_workers = std::min<Index>(workers_, count);
    if (n_workers <= 1) {
      work(0, count);
      return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    {
      std::vector<std::jthread> threads;
      threads.reserve(n_workers);
      const Index chunk = (count + n_workers - 1) / n_workers;
      for (Index w = 0; w < n_workers; ++w) {
        const Index begin = w * chunk;
        const Index end = std::min(count, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&, begin, end] {
          try {
            work(begin, end);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        });
      }
    }
    if (error) std::rethrow_exception(error);
  }

  unsigned workers_;
  std::atomic<std::size_t> batches_{0};
  std::atomic<std::size_t> evaluations_{0};
};

/// Stacks trajectories as the columns of a batch matrix.
inline Matrix stack_batch(const std::vector<InputTrajectory>& batch) {
  if (batch.empty()) throw InvalidArgument("batch must contain at least one trajectory");
  Matrix m(batch.front().size(), static_cast<Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].size() != m.rows()) {
      throw DimensionMismatch("trajectories in a batch must have equal length");
    }
    m.col(static_cast<Index>(i)) = batch[i].values();
  }
  return m;
}

inline double evaluate_cost(const ControlProblem& problem, const Vector& u) {
  if (u.size() != problem.dim()) throw DimensionMismatch("input length does not match problem");
  Vector r = problem.residual->eval(u);
  if (!r.allFinite()) throw NonFiniteResidual(0);
  return problem.outer->value(r);
}

inline double evaluate_cost(const ControlProblem& problem, const InputTrajectory& u) {
  return evaluate_cost(problem, u.values());
}

inline Vector evaluate_cost_batch(const ControlProblem& problem,
                                  const std::vector<InputTrajectory>& batch,
                                  BatchEvaluator& evaluator) {
  return evaluator.costs(problem, stack_batch(batch));
}

inline Vector evaluate_cost_batch(const ControlProblem& problem,
                                  const std::vector<InputTrajectory>& batch) {
  BatchEvaluator evaluator;
  return evaluate_cost_batch(problem, batch, evaluator);
}

inline std::vector<Vector> evaluate_residual_batch(const ControlProblem& problem,
                                                   const std::vector<InputTrajectory>& batch,
                                                   BatchEvaluator& evaluator) {
  Matrix r = evaluator.residuals(*problem.residual, stack_batch(batch));
  std::vector<Vector> out;
  out.reserve(batch.size());
  for (Index j = 0; j < r.cols(); ++j) out.emplace_back(r.col(j));
  return out;
}

inline std::vector<Vector> evaluate_residual_batch(const ControlProblem& problem,
                                                   const std::vector<InputTrajectory>& batch) {
  BatchEvaluator evaluator;
  return evaluate_residual_batch(problem, batch, evaluator);
}

}  // namespace gnmppi

#endif  // GNMPPI_PROBLEM_HPP

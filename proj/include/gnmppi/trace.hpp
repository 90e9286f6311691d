#ifndef GNMPPI_TRACE_HPP
#define GNMPPI_TRACE_HPP

#include "gnmppi/core.hpp"

#include <chrono>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace gnmppi {

enum class SolverStatus { converged, iteration_cap, error };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::iteration_cap: return "iteration_cap";
    case SolverStatus::error: return "error";
  }
  return "unknown";
}

/// Shared stopping rule: both the applied step and the (smoothed) gradient
/// must fall below their thresholds.
struct StopCriteria {
  double step_tol = 1e-6;
  double grad_tol = 1e-4;

  bool satisfied(double step_norm, double grad_norm) const {
    return step_norm < step_tol && grad_norm < grad_tol;
  }
};

/// One row per iterate. Record 0 is the initial guess; record k >= 1 is the
/// iterate produced by iteration k.
struct IterationRecord {
  Index k = 0;
  Vector iterate;
  double cost = std::numeric_limits<double>::quiet_NaN();
  /// |U_k - U_{k-1}|_2 of the applied step (0 for rejected steps).
  double step_norm = 0.0;
  /// Stopping gradient evaluated at U_{k-1}.
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
  /// Evaluation batches issued by this iteration.
  std::size_t batches = 0;
  double wall_ms = 0.0;
  bool accepted = true;
  /// Step length chosen by the line search (NaN for MPPI).
  double alpha = std::numeric_limits<double>::quiet_NaN();
  /// Shannon entropy of the normalized MPPI weights (NaN otherwise).
  double weight_entropy = std::numeric_limits<double>::quiet_NaN();
};

struct SolverTrace {
  std::vector<IterationRecord> records;
  SolverStatus status = SolverStatus::iteration_cap;
  std::string error_message;
  /// Batches issued outside of iterations (initial or final cost evaluation).
  std::size_t overhead_batches = 0;
  /// The derivative information of the first iteration was identically zero.
  bool vanishing_derivative = false;

  Index iterations() const {
    return records.empty() ? 0 : static_cast<Index>(records.size()) - 1;
  }
  std::size_t total_batches() const {
    std::size_t total = overhead_batches;
    for (const auto& r : records) total += r.batches;
    return total;
  }
  double final_cost() const {
    return records.empty() ? std::numeric_limits<double>::quiet_NaN() : records.back().cost;
  }
};

struct SolverResult {
  Vector solution;
  SolverTrace trace;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace gnmppi

#endif  // GNMPPI_TRACE_HPP

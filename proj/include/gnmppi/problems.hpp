#ifndef GNMPPI_PROBLEMS_HPP
#define GNMPPI_PROBLEMS_HPP

// Benchmark problems. Every problem is handed to solvers through
// BlackBoxResidual::eval only; no derivative information leaves this file.

#include "gnmppi/core.hpp"
#include "gnmppi/problem.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <memory>
#include <numbers>

namespace gnmppi {

/// Rosenbrock: R(U) = [sqrt(2)(1 - u1), sqrt(200)(u2 - u1^2)], Phi = 1/2 |R|^2.
inline ControlProblem make_rosenbrock() {
  auto residual = std::make_shared<FunctionResidual>(2, 2, [](const Vector& u) {
    Vector r(2);
    r << std::sqrt(2.0) * (1.0 - u[0]), std::sqrt(200.0) * (u[1] - u[0] * u[0]);
    return r;
  });
  ControlProblem p;
  p.name = "I";
  p.residual = std::move(residual);
  p.outer = std::make_shared<SquaredNormOuter>(1.0);
  p.horizon = 1;
  p.input_dim = 2;
  p.initial_guess = Vector::Zero(2);
  p.known_optimum = KnownOptimum{0.0, 1e-9};
  return p;
}

/// Rastrigin, 10 + sum_i (u_i^2 - 5 cos(2 pi u_i)), split through
/// 1 - cos(2x) = 2 sin^2(x) into R = [u1, u2, sqrt(10) sin(pi u1), sqrt(10) sin(pi u2)]
/// and Phi = |R|^2.
inline ControlProblem make_rastrigin() {
  auto residual = std::make_shared<FunctionResidual>(2, 4, [](const Vector& u) {
    const double s = std::sqrt(10.0);
    Vector r(4);
    r << u[0], u[1], s * std::sin(std::numbers::pi * u[0]), s * std::sin(std::numbers::pi * u[1]);
    return r;
  });
  ControlProblem p;
  p.name = "II";
  p.residual = std::move(residual);
  p.outer = std::make_shared<SquaredNormOuter>(2.0);
  p.horizon = 1;
  p.input_dim = 2;
  p.initial_guess = (Vector(2) << 1.9, 1.7).finished();
  p.known_optimum = KnownOptimum{0.0, 1e-3};
  return p;
}

/// Heaviside step: R(u) = 1 for u >= 0, 0 otherwise; Phi = 1/2 R^2.
inline ControlProblem make_heaviside() {
  auto residual = std::make_shared<FunctionResidual>(1, 1, [](const Vector& u) {
    return Vector::Constant(1, u[0] >= 0.0 ? 1.0 : 0.0);
  });
  ControlProblem p;
  p.name = "III";
  p.residual = std::move(residual);
  p.outer = std::make_shared<SquaredNormOuter>(1.0);
  p.horizon = 1;
  p.input_dim = 1;
  p.initial_guess = Vector::Constant(1, 0.5);
  p.known_optimum = KnownOptimum{0.0, 1e-3};
  return p;
}

/// Linear-quadratic problem x_{k+1} = A x_k + B u_k with stage cost
/// x^T Q x + u^T R u and terminal cost x_N^T Q_N x_N.
struct DoubleIntegratorSpec {
  double dt = 0.1;
  Index horizon = 50;
  Matrix a = (Matrix(2, 2) << 1.0, 0.1, 0.0, 1.0).finished();
  Matrix b = (Matrix(2, 1) << 0.0, 0.1).finished();
  Matrix q = Matrix::Identity(2, 2);
  Matrix r = Matrix::Constant(1, 1, 0.1);
  Matrix q_terminal = Matrix::Identity(2, 2);
  Vector x0 = (Vector(2) << 1.0, 0.0).finished();

  /// Default matrices rebuilt for a different sampling time.
  static DoubleIntegratorSpec with_dt(double dt) {
    DoubleIntegratorSpec s;
    s.dt = dt;
    s.a << 1.0, dt, 0.0, 1.0;
    s.b << 0.0, dt;
    return s;
  }

  Index state_dim() const { return a.rows(); }
  Index input_dim() const { return b.cols(); }

  void validate() const {
    const Index nx = a.rows(), nu = b.cols();
    if (a.cols() != nx || b.rows() != nx || q.rows() != nx || q.cols() != nx ||
        q_terminal.rows() != nx || q_terminal.cols() != nx || r.rows() != nu ||
        r.cols() != nu || x0.size() != nx) {
      throw DimensionMismatch("double integrator matrices have inconsistent shapes");
    }
    if (horizon < 1) throw InvalidArgument("horizon must be positive");
    auto spd = [](const Matrix& m) {
      return (m - m.transpose()).norm() <= 1e-12 * (1.0 + m.norm()) &&
             Eigen::LLT<Matrix>(m).info() == Eigen::Success;
    };
    if (!spd(q) || !spd(r) || !spd(q_terminal)) {
      throw InvalidArgument("weight matrices must be symmetric positive definite");
    }
  }
};

/// Finite-horizon LQR solution by the backward Riccati recursion.
struct LqrSolution {
  Vector inputs;
  double cost = 0.0;
};

inline LqrSolution solve_lqr(const DoubleIntegratorSpec& s) {
  s.validate();
  const Index n = s.horizon, nu = s.input_dim();
  std::vector<Matrix> gains(static_cast<std::size_t>(n));
  Matrix p = s.q_terminal;
  for (Index k = n - 1; k >= 0; --k) {
    const Matrix btp = s.b.transpose() * p;
    Matrix gain = (s.r + btp * s.b).ldlt().solve(btp * s.a);
    p = s.q + s.a.transpose() * p * (s.a - s.b * gain);
    p = 0.5 * (p + p.transpose());
    gains[static_cast<std::size_t>(k)] = std::move(gain);
  }
  LqrSolution out{Vector(n * nu), s.x0.dot(p * s.x0)};
  Vector x = s.x0;
  for (Index k = 0; k < n; ++k) {
    const Vector u = -gains[static_cast<std::size_t>(k)] * x;
    out.inputs.segment(k * nu, nu) = u;
    x = s.a * x + s.b * u;
  }
  return out;
}

/// Residual stacks sqrt(2) L^T x_k and sqrt(2) L^T u_k (L the Cholesky
/// factors of the weights) so that 1/2 |R|^2 is the quadratic cost.
inline ControlProblem make_double_integrator(const DoubleIntegratorSpec& spec = {}) {
  spec.validate();
  const Index nx = spec.state_dim(), nu = spec.input_dim(), n = spec.horizon;
  const Matrix lq = std::sqrt(2.0) * Matrix(spec.q.llt().matrixU());
  const Matrix lr = std::sqrt(2.0) * Matrix(spec.r.llt().matrixU());
  const Matrix ln = std::sqrt(2.0) * Matrix(spec.q_terminal.llt().matrixU());

  auto residual = std::make_shared<FunctionResidual>(
      n * nu, n * (nx + nu) + nx, [spec, lq, lr, ln, nx, nu, n](const Vector& u) {
        Vector r(n * (nx + nu) + nx);
        Vector x = spec.x0;
        for (Index k = 0; k < n; ++k) {
          const auto uk = u.segment(k * nu, nu);
          r.segment(k * (nx + nu), nx) = lq * x;
          r.segment(k * (nx + nu) + nx, nu) = lr * uk;
          x = spec.a * x + spec.b * uk;
        }
        r.tail(nx) = ln * x;
        return r;
      });

  ControlProblem p;
  p.name = "IV";
  p.residual = std::move(residual);
  p.outer = std::make_shared<SquaredNormOuter>(1.0);
  p.horizon = n;
  p.input_dim = nu;
  p.initial_guess = Vector::Zero(n * nu);
  p.known_optimum = KnownOptimum{solve_lqr(spec).cost, 1e-3};
  return p;
}

/// Rotary (Furuta) pendulum: a horizontal arm driven by a torque, carrying a
/// freely swinging pendulum. State (arm angle, pendulum angle from upright,
/// arm rate, pendulum rate).
struct FurutaSpec {
  double arm_inertia = 0.1;        ///< about the motor axis, without the pendulum [kg m^2]
  double arm_length = 0.3;         ///< motor axis to pendulum joint [m]
  double pendulum_mass = 0.1;      ///< [kg]
  double pendulum_com = 1.0;       ///< joint to pendulum centre of mass [m]
  double pendulum_inertia = 0.033;  ///< about its centre of mass [kg m^2]
  double arm_damping = 0.5;        ///< [N m s]
  double pendulum_damping = 5e-5;  ///< [N m s]
  double gravity = 9.81;

  double dt = 0.05;
  Index horizon = 20;
  Vector x0 = (Vector(4) << 0.0, 0.2, 0.0, 0.0).finished();
  /// Constant reference: pendulum upright while the arm turns at 2 rad/s.
  Vector reference = (Vector(4) << 0.0, 0.0, 2.0, 0.0).finished();
  Vector state_weights = (Vector(4) << 0.0, 10.0, 1.0, 0.1).finished();
  double input_weight = 1.0;

  /// Inputs with |u| <= friction_threshold are not transmitted.
  bool friction_enabled = false;
  double input_scale = 1.0;
  double friction_threshold = 0.05;

  void validate() const {
    if (x0.size() != 4 || reference.size() != 4 || state_weights.size() != 4) {
      throw DimensionMismatch("Furuta state vectors must have four entries");
    }
    if (horizon < 1 || !(dt > 0.0)) throw InvalidArgument("Furuta horizon and step must be positive");
    if ((state_weights.array() < 0.0).any() || input_weight < 0.0) {
      throw InvalidArgument("Furuta weights must be non-negative");
    }
    if (!(arm_inertia > 0.0 && pendulum_inertia >= 0.0 && pendulum_mass > 0.0)) {
      throw InvalidArgument("Furuta inertias and mass must be positive");
    }
  }

  double applied_input(double u) const {
    return friction_enabled && std::abs(u) <= friction_threshold ? 0.0 : u;
  }

  /// Continuous-time dynamics from the Euler-Lagrange equations.
  Eigen::Vector4d derivative(const Eigen::Vector4d& x, double torque) const {
    const double s = std::sin(x[1]), c = std::cos(x[1]);
    const double jp = pendulum_mass * pendulum_com * pendulum_com + pendulum_inertia;
    const double coupling = pendulum_mass * arm_length * pendulum_com;
    const double m11 = arm_inertia + pendulum_mass * arm_length * arm_length + jp * s * s;
    const double m12 = coupling * c;
    const double m22 = jp;
    const double th_d = x[2], al_d = x[3];
    const double rhs1 = torque - arm_damping * th_d - 2.0 * jp * s * c * al_d * th_d +
                        coupling * s * al_d * al_d;
    const double rhs2 = -pendulum_damping * al_d + jp * s * c * th_d * th_d +
                        pendulum_mass * gravity * pendulum_com * s;
    const double det = m11 * m22 - m12 * m12;
    Eigen::Vector4d dx;
    dx << th_d, al_d, (m22 * rhs1 - m12 * rhs2) / det, (m11 * rhs2 - m12 * rhs1) / det;
    return dx;
  }

  /// One explicit RK4 step with the input held constant.
  Eigen::Vector4d step(const Eigen::Vector4d& x, double torque) const {
    const Eigen::Vector4d k1 = derivative(x, torque);
    const Eigen::Vector4d k2 = derivative(x + 0.5 * dt * k1, torque);
    const Eigen::Vector4d k3 = derivative(x + 0.5 * dt * k2, torque);
    const Eigen::Vector4d k4 = derivative(x + dt * k3, torque);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  /// Simulated states x_0..x_N.
  StateTrajectory simulate(const Vector& u) const {
    Vector xs(4 * (horizon + 1));
    Eigen::Vector4d x = x0;
    xs.head(4) = x;
    for (Index k = 0; k < horizon; ++k) {
      x = step(x, input_scale * applied_input(u[k]));
      xs.segment(4 * (k + 1), 4) = x;
    }
    return StateTrajectory(std::move(xs), 4);
  }
};

/// Residual stacks sqrt(2 q_i) (x_k - x_ref)_i for k = 1..N and
/// sqrt(2 r) u_k for k = 0..N-1, with Phi = 1/2 |R|^2.
inline ControlProblem make_furuta(const FurutaSpec& spec = {}) {
  spec.validate();
  const Index n = spec.horizon;
  const Eigen::Vector4d wx = (2.0 * spec.state_weights).cwiseSqrt();
  const double wu = std::sqrt(2.0 * spec.input_weight);

  auto residual = std::make_shared<FunctionResidual>(n, 5 * n, [spec, wx, wu, n](const Vector& u) {
    Vector r(5 * n);
    const StateTrajectory xs = spec.simulate(u);
    for (Index k = 0; k < n; ++k) {
      r.segment(4 * k, 4) = wx.cwiseProduct(xs.state(k + 1) - spec.reference);
      r[4 * n + k] = wu * u[k];
    }
    return r;
  });

  ControlProblem p;
  p.name = spec.friction_enabled ? "V.ii" : "V.i";
  p.residual = std::move(residual);
  p.outer = std::make_shared<SquaredNormOuter>(1.0);
  p.horizon = n;
  p.input_dim = 1;
  p.initial_guess = Vector::Zero(n);
  return p;
}

}  // namespace gnmppi

#endif  // GNMPPI_PROBLEMS_HPP

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "mfctrl/types.hpp"

namespace mfctrl {

struct EnvironmentSpec {
  std::string name;
  int n_x = 0;
  int n_u = 0;
  double dt = 0.0;  // [s]
  int horizon = 0;
  ControlVector control_lower;
  ControlVector control_upper;
  StateVector initial_state;
  StateVector goal_state;

  void Validate() const;
};

struct JacobianPair {
  Matrix A;  // df/dx, n_x x n_x
  Matrix B;  // df/du, n_x x n_u
};

/// Discrete-time dynamics x_{t+1} = f(x_t, u_t), exposed only through Step().
///
/// Step() is a pure function: it clamps u to the control bounds and advances
/// one dt. Optimizers must not look at anything else; ReferenceJacobian()
/// exists for benchmarks and tests that compare estimators against ground
/// truth.
class Environment {
 public:
  explicit Environment(EnvironmentSpec spec);
  virtual ~Environment() = default;

  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  const EnvironmentSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }
  int state_dim() const { return spec_.n_x; }
  int control_dim() const { return spec_.n_u; }

  /// Throws ContractViolation on wrong dimensions or non-finite input.
  StateVector Step(const StateVector& x, const ControlVector& u) const;

  ControlVector Clamp(const ControlVector& u) const;

  /// Per-dimension half-width of the control bounds.
  ControlVector ControlHalfRange() const;

  /// Exact Jacobian of the discretized step at an interior control, if the
  /// environment can provide one.
  virtual std::optional<JacobianPair> ReferenceJacobian(
      const StateVector& x, const ControlVector& u) const;

 protected:
  /// `u` is already clamped and both arguments are finite.
  virtual StateVector Propagate(const StateVector& x,
                                const ControlVector& u) const = 0;

 private:
  EnvironmentSpec spec_;
};

using EnvironmentPtr = std::shared_ptr<const Environment>;

/// x_{t+1} = A x_t + B u_t.
class LinearEnvironment : public Environment {
 public:
  LinearEnvironment(EnvironmentSpec spec, Matrix a, Matrix b);

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }

  std::optional<JacobianPair> ReferenceJacobian(
      const StateVector& x, const ControlVector& u) const override;

 protected:
  StateVector Propagate(const StateVector& x,
                        const ControlVector& u) const override;

 private:
  Matrix a_;
  Matrix b_;
};

struct PendulumParams {
  double mass = 1.0;          // [kg]
  double length = 1.0;        // [m]
  double gravity = 9.81;      // [m/s^2]
  double damping = 0.1;       // [N m s/rad]
  double torque_limit = 10.0;  // [N m]
  double dt = 0.1;            // [s]
  int horizon = 30;
  int substeps = 2;           // RK4 steps per dt; 1 drifts ~0.2% energy per 100 steps
};

/// State (theta, theta_dot), theta = 0 hanging, theta = pi upright.
/// Swing-up task from rest at the bottom.
class PendulumEnvironment : public Environment {
 public:
  explicit PendulumEnvironment(const PendulumParams& params = {});

  const PendulumParams& params() const { return params_; }
  double Energy(const StateVector& x) const;

  std::optional<JacobianPair> ReferenceJacobian(
      const StateVector& x, const ControlVector& u) const override;

 protected:
  StateVector Propagate(const StateVector& x,
                        const ControlVector& u) const override;

 private:
  PendulumParams params_;
};

struct CartPoleParams {
  double cart_mass = 1.0;         // [kg]
  double pole_mass = 0.1;         // [kg]
  double pole_half_length = 0.5;  // [m], uniform rod
  double gravity = 9.81;          // [m/s^2]
  double force_limit = 10.0;      // [N]
  double dt = 0.1;                // [s]
  int horizon = 30;
  int substeps = 1;
};

/// State (p, theta, p_dot, theta_dot), theta = 0 hanging, theta = pi upright.
class CartPoleEnvironment : public Environment {
 public:
  explicit CartPoleEnvironment(const CartPoleParams& params = {});

  const CartPoleParams& params() const { return params_; }

  std::optional<JacobianPair> ReferenceJacobian(
      const StateVector& x, const ControlVector& u) const override;

 protected:
  StateVector Propagate(const StateVector& x,
                        const ControlVector& u) const override;

 private:
  CartPoleParams params_;
};

/// Forwards to another environment and counts Step() calls. Thread safe.
class CountingEnvironment : public Environment {
 public:
  explicit CountingEnvironment(EnvironmentPtr inner);

  std::int64_t count() const { return count_.load(); }
  void Reset() { count_.store(0); }

  std::optional<JacobianPair> ReferenceJacobian(
      const StateVector& x, const ControlVector& u) const override;

 protected:
  StateVector Propagate(const StateVector& x,
                        const ControlVector& u) const override;

 private:
  EnvironmentPtr inner_;
  mutable std::atomic<std::int64_t> count_{0};
};

/// A = [[1, 0.1], [0, 1]], B = [[0], [0.1]]; starts at (1, 0), goal at 0.
std::shared_ptr<const LinearEnvironment> MakeLinearTest(int horizon = 30);

}  // namespace mfctrl

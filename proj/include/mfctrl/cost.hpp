#pragma once

#include <vector>

#include "mfctrl/types.hpp"

namespace mfctrl {

/// Analytic partials of the incremental cost c_t at (x, u).
struct CostPartials {
  Eigen::VectorXd c_x;
  Eigen::VectorXd c_u;
  Matrix c_xx;
  Matrix c_uu;
  Matrix c_ux;
};

/// Quadratic tracking cost about a goal state:
///
///   c_t(x, u) = 1/2 (x - x_g)' Q_t (x - x_g) + 1/2 u' R_t u
///   c_N(x)    = 1/2 (x - x_g)' Q_N (x - x_g)
///
/// Q_t and R_t may be given once (time-constant) or once per step.
class QuadraticCostModel {
 public:
  /// Validates symmetry, Q_t/Q_N PSD and R_t PD. Throws ContractViolation.
  QuadraticCostModel(std::vector<Matrix> state_weights,
                     std::vector<Matrix> control_weights, Matrix terminal_weight,
                     StateVector goal);

  QuadraticCostModel(const Matrix& state_weight, const Matrix& control_weight,
                     const Matrix& terminal_weight, const StateVector& goal);

  /// Skips the definiteness checks (dimensions are still checked). Used to
  /// build degenerate models such as all-zero or indefinite weights.
  static QuadraticCostModel Unchecked(std::vector<Matrix> state_weights,
                                      std::vector<Matrix> control_weights,
                                      Matrix terminal_weight, StateVector goal);

  int state_dim() const { return static_cast<int>(goal_.size()); }
  int control_dim() const {
    return static_cast<int>(control_weights_.front().rows());
  }

  const Matrix& state_weight(int t) const;
  const Matrix& control_weight(int t) const;
  const Matrix& terminal_weight() const { return terminal_weight_; }
  const StateVector& goal() const { return goal_; }
  bool time_varying() const {
    return state_weights_.size() > 1 || control_weights_.size() > 1;
  }
  const std::vector<Matrix>& state_weights() const { return state_weights_; }
  const std::vector<Matrix>& control_weights() const { return control_weights_; }

  /// Copy with every weight matrix multiplied by `factor`.
  QuadraticCostModel Scaled(double factor) const;

  double IncrementalCost(const StateVector& x, const ControlVector& u,
                         int t) const;
  double TerminalCost(const StateVector& x) const;

 private:
  struct NoCheck {};
  QuadraticCostModel(NoCheck, std::vector<Matrix> state_weights,
                     std::vector<Matrix> control_weights,
                     Matrix terminal_weight, StateVector goal);
  void CheckDimensions() const;
  void CheckDefiniteness() const;

  std::vector<Matrix> state_weights_;
  std::vector<Matrix> control_weights_;
  Matrix terminal_weight_;
  StateVector goal_;
};

/// Sum of incremental costs over t = 0..N-1 plus the terminal cost, accumulated
/// left to right. Requires states.size() == controls.size() + 1.
double TotalCost(const std::vector<StateVector>& states,
                 const std::vector<ControlVector>& controls,
                 const QuadraticCostModel& cost);

CostPartials ComputeCostPartials(const StateVector& x, const ControlVector& u,
                                 int t, const QuadraticCostModel& cost);

/// Gradient and Hessian of the terminal cost.
std::pair<Eigen::VectorXd, Matrix> TerminalCostPartials(
    const StateVector& x, const QuadraticCostModel& cost);

}  // namespace mfctrl

#include "mfctrl/cost.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "mfctrl/errors.hpp"

namespace mfctrl {

bool AllFinite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.allFinite();
}

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kPsdTol = 1e-12;

bool IsSymmetric(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol * scale;
}

bool IsPsd(const Matrix& m) {
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return eig.eigenvalues().minCoeff() >= -kPsdTol * scale;
}

bool IsPd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace

QuadraticCostModel::QuadraticCostModel(NoCheck, std::vector<Matrix> state_weights,
                                       std::vector<Matrix> control_weights,
                                       Matrix terminal_weight, StateVector goal)
    : state_weights_(std::move(state_weights)),
      control_weights_(std::move(control_weights)),
      terminal_weight_(std::move(terminal_weight)),
      goal_(std::move(goal)) {
  CheckDimensions();
}

QuadraticCostModel::QuadraticCostModel(std::vector<Matrix> state_weights,
                                       std::vector<Matrix> control_weights,
                                       Matrix terminal_weight, StateVector goal)
    : QuadraticCostModel(NoCheck{}, std::move(state_weights),
                         std::move(control_weights), std::move(terminal_weight),
                         std::move(goal)) {
  CheckDefiniteness();
}

QuadraticCostModel::QuadraticCostModel(const Matrix& state_weight,
                                       const Matrix& control_weight,
                                       const Matrix& terminal_weight,
                                       const StateVector& goal)
    : QuadraticCostModel(std::vector<Matrix>{state_weight},
                         std::vector<Matrix>{control_weight}, terminal_weight,
                         goal) {}

QuadraticCostModel QuadraticCostModel::Unchecked(
    std::vector<Matrix> state_weights, std::vector<Matrix> control_weights,
    Matrix terminal_weight, StateVector goal) {
  return QuadraticCostModel(NoCheck{}, std::move(state_weights),
                            std::move(control_weights),
                            std::move(terminal_weight), std::move(goal));
}

void QuadraticCostModel::CheckDimensions() const {
  const auto nx = goal_.size();
  if (nx == 0) throw ContractViolation("cost model: empty goal state");
  if (!goal_.allFinite()) throw ContractViolation("cost model: goal not finite");
  if (state_weights_.empty() || control_weights_.empty()) {
    throw ContractViolation("cost model: missing Q or R");
  }
  for (const auto& q : state_weights_) {
    if (q.rows() != nx || q.cols() != nx) {
      throw ContractViolation("cost model: Q must be " + std::to_string(nx) +
                              "x" + std::to_string(nx));
    }
  }
  const auto nu = control_weights_.front().rows();
  if (nu == 0) throw ContractViolation("cost model: empty R");
  for (const auto& r : control_weights_) {
    if (r.rows() != nu || r.cols() != nu) {
      throw ContractViolation("cost model: R blocks differ in size");
    }
  }
  if (terminal_weight_.rows() != nx || terminal_weight_.cols() != nx) {
    throw ContractViolation("cost model: Q_N must be " + std::to_string(nx) +
                            "x" + std::to_string(nx));
  }
}

void QuadraticCostModel::CheckDefiniteness() const {
  for (const auto& q : state_weights_) {
    if (!IsSymmetric(q) || !IsPsd(q)) {
      throw ContractViolation("cost model: Q_t must be symmetric PSD");
    }
  }
  for (const auto& r : control_weights_) {
    if (!IsSymmetric(r) || !IsPd(r)) {
      throw ContractViolation("cost model: R_t must be symmetric PD");
    }
  }
  if (!IsSymmetric(terminal_weight_) || !IsPsd(terminal_weight_)) {
    throw ContractViolation("cost model: Q_N must be symmetric PSD");
  }
}

const Matrix& QuadraticCostModel::state_weight(int t) const {
  if (state_weights_.size() == 1) return state_weights_.front();
  if (t < 0 || t >= static_cast<int>(state_weights_.size())) {
    throw ContractViolation("cost model: no Q_t for t=" + std::to_string(t));
  }
  return state_weights_[t];
}

const Matrix& QuadraticCostModel::control_weight(int t) const {
  if (control_weights_.size() == 1) return control_weights_.front();
  if (t < 0 || t >= static_cast<int>(control_weights_.size())) {
    throw ContractViolation("cost model: no R_t for t=" + std::to_string(t));
  }
  return control_weights_[t];
}

QuadraticCostModel QuadraticCostModel::Scaled(double factor) const {
  QuadraticCostModel out = *this;
  for (auto& q : out.state_weights_) q *= factor;
  for (auto& r : out.control_weights_) r *= factor;
  out.terminal_weight_ *= factor;
  return out;
}

double QuadraticCostModel::IncrementalCost(const StateVector& x,
                                           const ControlVector& u,
                                           int t) const {
  if (x.size() != goal_.size() || u.size() != control_dim()) {
    throw ContractViolation("incremental cost: dimension mismatch");
  }
  const Eigen::VectorXd dx = x - goal_;
  return 0.5 * dx.dot(state_weight(t) * dx) + 0.5 * u.dot(control_weight(t) * u);
}

double QuadraticCostModel::TerminalCost(const StateVector& x) const {
  if (x.size() != goal_.size()) {
    throw ContractViolation("terminal cost: dimension mismatch");
  }
  const Eigen::VectorXd dx = x - goal_;
  return 0.5 * dx.dot(terminal_weight_ * dx);
}

double TotalCost(const std::vector<StateVector>& states,
                 const std::vector<ControlVector>& controls,
                 const QuadraticCostModel& cost) {
  if (states.size() != controls.size() + 1) {
    throw ContractViolation("total cost: need exactly one more state than controls (got " +
                            std::to_string(states.size()) + " states, " +
                            std::to_string(controls.size()) + " controls)");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < controls.size(); ++t) {
    total += cost.IncrementalCost(states[t], controls[t], static_cast<int>(t));
  }
  total += cost.TerminalCost(states.back());
  return total;
}

CostPartials ComputeCostPartials(const StateVector& x, const ControlVector& u,
                                 int t, const QuadraticCostModel& cost) {
  if (x.size() != cost.state_dim() || u.size() != cost.control_dim()) {
    throw ContractViolation("cost partials: dimension mismatch");
  }
  const Matrix& q = cost.state_weight(t);
  const Matrix& r = cost.control_weight(t);
  CostPartials p;
  p.c_x = q * (x - cost.goal());
  p.c_u = r * u;
  p.c_xx = q;
  p.c_uu = r;
  p.c_ux = Matrix::Zero(u.size(), x.size());
  return p;
}

std::pair<Eigen::VectorXd, Matrix> TerminalCostPartials(
    const StateVector& x, const QuadraticCostModel& cost) {
  if (x.size() != cost.state_dim()) {
    throw ContractViolation("terminal cost partials: dimension mismatch");
  }
  return {cost.terminal_weight() * (x - cost.goal()), cost.terminal_weight()};
}

}  // namespace mfctrl

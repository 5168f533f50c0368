#pragma once

#include <vector>

#include <Eigen/Dense>

namespace mfctrl {

using StateVector = Eigen::VectorXd;
using ControlVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Noise-free state/control sequence with its total cost.
/// states has N+1 entries, controls has N.
struct NominalTrajectory {
  std::vector<StateVector> states;
  std::vector<ControlVector> controls;
  double cost = 0.0;

  int horizon() const { return static_cast<int>(controls.size()); }
};

bool AllFinite(const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace mfctrl

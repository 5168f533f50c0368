#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mfctrl/cost.hpp"
#include "mfctrl/environment.hpp"

namespace mfctrl {

/// Diagonal quadratic weights: Q = diag(q), R = r I, Q_N = q_terminal I.
struct DiagonalWeights {
  Eigen::VectorXd q;
  double r = 0.0;
  double q_terminal = 0.0;

  QuadraticCostModel ToCost(const EnvironmentSpec& spec) const;
};

/// Tuned default weights for a built-in environment name.
DiagonalWeights DefaultWeights(std::string_view env_name);

struct Problem {
  EnvironmentPtr env;
  QuadraticCostModel cost;
};

/// "linear_test", "pendulum" or "cartpole" with default parameters and
/// weights. Throws ContractViolation on an unknown name.
Problem MakeProblem(std::string_view env_name);

const std::vector<std::string>& BuiltinEnvironments();

}  // namespace mfctrl

#include "mfctrl/problems.hpp"

#include "mfctrl/errors.hpp"

namespace mfctrl {

QuadraticCostModel DiagonalWeights::ToCost(const EnvironmentSpec& spec) const {
  if (q.size() != spec.n_x) {
    throw ContractViolation("cost: q has " + std::to_string(q.size()) +
                            " entries, expected " + std::to_string(spec.n_x));
  }
  const Matrix state = q.asDiagonal();
  const Matrix control = Matrix::Identity(spec.n_u, spec.n_u) * r;
  const Matrix terminal = Matrix::Identity(spec.n_x, spec.n_x) * q_terminal;
  return QuadraticCostModel(state, control, terminal, spec.goal_state);
}

DiagonalWeights DefaultWeights(std::string_view env_name) {
  DiagonalWeights w;
  if (env_name == "linear_test") {
    w.q = Eigen::Vector2d(1.0, 0.1);
    w.r = 0.1;
    w.q_terminal = 1.0;
  } else if (env_name == "pendulum") {
    w.q = Eigen::Vector2d(0.1, 0.01);
    w.r = 0.1;
    w.q_terminal = 100.0;
  } else if (env_name == "cartpole") {
    // A heavier terminal weight makes the late LQR gains large enough to
    // saturate the force limit under moderate noise.
    w.q = Eigen::Vector4d(0.1, 0.1, 0.01, 0.01);
    w.r = 0.1;
    w.q_terminal = 50.0;
  } else {
    throw ContractViolation("unknown environment '" + std::string(env_name) + "'");
  }
  return w;
}

Problem MakeProblem(std::string_view env_name) {
  EnvironmentPtr env;
  if (env_name == "linear_test") {
    env = MakeLinearTest();
  } else if (env_name == "pendulum") {
    env = std::make_shared<PendulumEnvironment>();
  } else if (env_name == "cartpole") {
    env = std::make_shared<CartPoleEnvironment>();
  } else {
    throw ContractViolation("unknown environment '" + std::string(env_name) + "'");
  }
  QuadraticCostModel cost = DefaultWeights(env_name).ToCost(env->spec());
  return Problem{std::move(env), std::move(cost)};
}

const std::vector<std::string>& BuiltinEnvironments() {
  static const std::vector<std::string> names = {"linear_test", "pendulum",
                                                 "cartpole"};
  return names;
}

}  // namespace mfctrl

#include "mfctrl/lqr.hpp"

#include <string>

#include "mfctrl/errors.hpp"

namespace mfctrl {

void DecoupledPolicy::Validate() const {
  const int horizon = nominal.horizon();
  if (static_cast<int>(nominal.states.size()) != horizon + 1) {
    throw ContractViolation("policy: nominal needs N+1 states");
  }
  if (static_cast<int>(gains.size()) != horizon) {
    throw ContractViolation("policy: " + std::to_string(gains.size()) +
                            " gains for horizon " + std::to_string(horizon));
  }
  const auto nx = nominal.states.front().size();
  for (const auto& k : gains) {
    if (k.cols() != nx || k.rows() != nominal.controls.front().size()) {
      throw ContractViolation("policy: gain has wrong shape");
    }
    if (!k.allFinite()) throw ContractViolation("policy: gain not finite");
  }
}

DecoupledPolicy DecoupledPolicy::OpenLoop() const {
  DecoupledPolicy out = *this;
  for (auto& k : out.gains) k.setZero();
  return out;
}

RiccatiSolution SolveRiccati(const std::vector<LinearizedModel>& models,
                             const QuadraticCostModel& weights) {
  const int horizon = static_cast<int>(models.size());
  const int nx = weights.state_dim();
  const int nu = weights.control_dim();
  RiccatiSolution sol;
  sol.gains.resize(horizon);
  sol.cost_to_go.resize(horizon + 1);
  sol.cost_to_go[horizon] = weights.terminal_weight();
  for (int t = horizon - 1; t >= 0; --t) {
    const Matrix& a = models[t].A;
    const Matrix& b = models[t].B;
    if (a.rows() != nx || a.cols() != nx || b.rows() != nx || b.cols() != nu) {
      throw ContractViolation("riccati: model dimensions at t=" + std::to_string(t));
    }
    const Matrix& p_next = sol.cost_to_go[t + 1];
    const Matrix& r = weights.control_weight(t);
    Matrix s = r + b.transpose() * p_next * b;
    s = 0.5 * (s + s.transpose());
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) {
      throw SynthesisFailure(
          "riccati: R + B'PB not positive definite at t=" + std::to_string(t), t);
    }
    Matrix k = -llt.solve(b.transpose() * p_next * a);
    const Matrix closed = a + b * k;
    Matrix p = weights.state_weight(t) + k.transpose() * r * k +
               closed.transpose() * p_next * closed;
    sol.cost_to_go[t] = 0.5 * (p + p.transpose());
    sol.gains[t] = std::move(k);
  }
  return sol;
}

DecoupledPolicy BuildPolicy(const Environment& env,
                            const NominalTrajectory& nominal,
                            const EstimatorConfig& est,
                            const QuadraticCostModel& weights) {
  if (nominal.states.empty() ||
      nominal.states.front().size() != env.state_dim()) {
    throw ContractViolation("build policy: nominal does not match environment");
  }
  DecoupledPolicy policy{env.name(), nominal,
                         RiccatiGains(IdentifyLtv(env, nominal, est), weights),
                         weights};
  policy.Validate();
  return policy;
}

RealizedRollout RolloutClosedLoop(const Environment& env,
                                  const DecoupledPolicy& policy,
                                  const NoiseModel& noise,
                                  const NoiseStream& stream,
                                  const QuadraticCostModel& cost) {
  return RolloutClosedLoop(env, policy.nominal, policy.gains, noise, stream, cost);
}

}  // namespace mfctrl

#pragma once

#include <string>
#include <vector>

#include "mfctrl/cost.hpp"
#include "mfctrl/environment.hpp"
#include "mfctrl/jacobian.hpp"
#include "mfctrl/noise.hpp"
#include "mfctrl/rollout.hpp"

namespace mfctrl {

/// Open-loop nominal plus time-varying linear feedback on the deviation:
///   u_t = u_bar_t + K_t (x_t - x_bar_t).
struct DecoupledPolicy {
  std::string env_name;
  NominalTrajectory nominal;
  std::vector<Matrix> gains;  // one n_u x n_x matrix per step
  QuadraticCostModel lqr_weights;

  void Validate() const;
  /// Same nominal with every gain set to zero (open-loop execution).
  DecoupledPolicy OpenLoop() const;
};

struct RiccatiSolution {
  std::vector<Matrix> gains;  // K_0 .. K_{N-1}
  std::vector<Matrix> cost_to_go;  // P_0 .. P_N
};

/// Finite-horizon discrete Riccati recursion on the perturbation system
/// dx_{t+1} = A_t dx_t + B_t du_t with stage weights (Q_t, R_t) and Q_N.
/// Throws SynthesisFailure if R_t + B' P B is not positive definite.
RiccatiSolution SolveRiccati(const std::vector<LinearizedModel>& models,
                             const QuadraticCostModel& weights);

inline std::vector<Matrix> RiccatiGains(const std::vector<LinearizedModel>& models,
                                        const QuadraticCostModel& weights) {
  return SolveRiccati(models, weights).gains;
}

/// Identifies (A_t, B_t) along the nominal with LLS-CD and synthesizes LQR
/// gains on top of it.
DecoupledPolicy BuildPolicy(const Environment& env,
                            const NominalTrajectory& nominal,
                            const EstimatorConfig& est,
                            const QuadraticCostModel& weights);

RealizedRollout RolloutClosedLoop(const Environment& env,
                                  const DecoupledPolicy& policy,
                                  const NoiseModel& noise,
                                  const NoiseStream& stream,
                                  const QuadraticCostModel& cost);

}  // namespace mfctrl

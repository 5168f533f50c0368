#pragma once

#include <vector>

#include "mfctrl/cost.hpp"
#include "mfctrl/environment.hpp"
#include "mfctrl/noise.hpp"

namespace mfctrl {

/// Noise-free rollout of a control sequence. Stored controls are the clamped
/// values actually applied. Throws NumericalFailure if a state goes
/// non-finite.
NominalTrajectory RolloutOpenLoop(const Environment& env, const StateVector& x0,
                                  const std::vector<ControlVector>& controls,
                                  const QuadraticCostModel& cost);

struct RealizedRollout {
  std::vector<StateVector> states;
  std::vector<ControlVector> controls;  // commanded, clamped
  double cost = 0.0;
  bool diverged = false;
};

/// Executes u_t = clamp(u_bar_t + K_t (x_t - x_bar_t)) under noise, starting
/// from the nominal initial state. The realized cost charges the commanded
/// control. Stops early and sets `diverged` on a non-finite state.
RealizedRollout RolloutClosedLoop(const Environment& env,
                                  const NominalTrajectory& nominal,
                                  const std::vector<Matrix>& gains,
                                  const NoiseModel& noise,
                                  const NoiseStream& stream,
                                  const QuadraticCostModel& cost);

/// Seed for an independent sub-stream; splitmix64 over the inputs.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t a,
                         std::uint64_t b = 0);

}  // namespace mfctrl

#pragma once

#include <cstdint>
#include <vector>

#include "mfctrl/environment.hpp"

namespace mfctrl {

/// Local linearization x_{t+1} ~ A dx + B du of the black-box step.
struct LinearizedModel {
  Matrix A;
  Matrix B;
  std::int64_t eval_count = 0;  // step calls spent producing this estimate
};

struct EstimatorConfig {
  int n_samples = 0;       // 0 selects n_x + n_u + 4
  double sigma = 1e-3;     // perturbation std
  std::uint64_t seed = 0;
  // Shortcut variant: replace the sample second-moment matrix by
  // sigma^2 (n_s - 1) I instead of solving the least-squares system.
  bool approx_identity = false;
  // Optional per-dimension multipliers on sigma (empty = all ones).
  Eigen::VectorXd state_scale;
  Eigen::VectorXd control_scale;
  int threads = 1;         // identify_ltv workers, 0 = auto

  int ResolvedSamples(int n_x, int n_u) const {
    return n_samples > 0 ? n_samples : n_x + n_u + 4;
  }
  void Validate(int n_x, int n_u) const;
};

/// Relative singular-value cutoff below which the stacked perturbation
/// matrix is declared rank deficient.
inline constexpr double kRankCutoff = 1e-12;

/// Linear least squares over central differences. Draws n_s Gaussian pairs
/// z_i = (dx_i, du_i), evaluates d_i = f(x+dx_i, u+du_i) - f(x-dx_i, u-du_i)
/// and solves min || Z [A B]' - D/2 || over the stacked rows.
/// Throws SingularSystemError if Z is numerically rank deficient.
LinearizedModel EstimateLlsCd(const Environment& env, const StateVector& x,
                              const ControlVector& u,
                              const EstimatorConfig& cfg);

/// Per-coordinate central differences with step h; 2 (n_x + n_u) step calls.
LinearizedModel EstimateFiniteDifference(const Environment& env,
                                         const StateVector& x,
                                         const ControlVector& u, double h);

/// One LLS-CD estimate per time step along a nominal trajectory. All steps
/// draw the same perturbations from cfg.seed, so the result does not depend
/// on scheduling. Failures are rethrown with the time index attached.
std::vector<LinearizedModel> IdentifyLtv(const Environment& env,
                                         const NominalTrajectory& traj,
                                         const EstimatorConfig& cfg);

}  // namespace mfctrl

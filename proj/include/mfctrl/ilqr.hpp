#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mfctrl/cost.hpp"
#include "mfctrl/environment.hpp"
#include "mfctrl/jacobian.hpp"

namespace mfctrl {

/// Feedforward k_t (n_u) and feedback K_t (n_u x n_x) for t = 0..N-1.
struct IterationGains {
  std::vector<Eigen::VectorXd> k;
  std::vector<Matrix> K;
};

/// Q-function expansion terms at one step, kept for inspection.
struct QExpansion {
  Eigen::VectorXd q_x;
  Eigen::VectorXd q_u;
  Matrix q_xx;
  Matrix q_ux;
  Matrix q_uu;
};

struct BackwardPassResult {
  std::optional<IterationGains> gains;  // empty when Q_uu lost definiteness
  int failed_at = -1;                   // time index of the failure
  std::vector<QExpansion> expansions;   // filled for t >= failed_at + 1

  bool ok() const { return gains.has_value(); }
};

/// Regularized ILQR backward recursion. mu * I is added to the next value
/// Hessian only inside Q_ux and Q_uu.
BackwardPassResult BackwardPass(const NominalTrajectory& traj,
                                const QuadraticCostModel& cost,
                                const std::vector<LinearizedModel>& models,
                                double mu);

struct ForwardPassResult {
  NominalTrajectory trajectory;  // candidate if accepted, else prev
  bool accepted = false;
  bool diverged = false;
  double candidate_cost = 0.0;   // +inf when diverged
};

/// Rolls out u_t = u_prev_t + alpha k_t + K_t (x_t - x_prev_t) and accepts the
/// candidate when its cost is at most reference_cost * (1 + band).
/// reference_cost defaults to prev.cost.
ForwardPassResult ForwardPass(const NominalTrajectory& prev,
                              const IterationGains& gains, double alpha,
                              const Environment& env,
                              const QuadraticCostModel& cost, double band,
                              std::optional<double> reference_cost = {});

struct OptimizerConfig {
  double mu = 1e-6;
  double mu_factor = 10.0;
  double mu_min = 1e-9;
  double mu_max = 1e10;
  bool decay_mu = true;  // divide mu by mu_factor after an accepted step
  std::vector<double> alphas = GeometricAlphas(1.0, 0.5, 10);
  double band = 0.05;
  double conv_tol = 1e-6;
  int conv_patience = 3;
  int max_iters = 500;
  EstimatorConfig estimator;

  static std::vector<double> GeometricAlphas(double first, double ratio,
                                             int count);
  void Validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;  // nominal cost after this iteration
  double mu = 0.0;    // regularizer used in the backward pass
  double alpha = 0.0; // accepted step, 0 if none
  bool backward_success = false;
  bool accepted = false;
  double wall_time_s = 0.0;    // since optimize() started
  std::int64_t eval_count = 0; // cumulative step calls
};

enum class StopReason {
  kConverged,
  kLineSearchExhausted,
  kMaxIterations,
};

struct ConvergenceTrace {
  std::vector<IterationRecord> records;
  double initial_cost = 0.0;
  StopReason stop_reason = StopReason::kMaxIterations;
};

struct OptimizeResult {
  NominalTrajectory trajectory;  // best cost seen
  ConvergenceTrace trace;
};

/// Model-free ILQR. Each iteration re-estimates the Jacobians along the
/// current nominal, runs the backward pass (escalating mu on failure) and
/// walks the alpha schedule until a forward pass lands inside the band
/// around the best cost so far. Throws RegularizationExhausted when mu
/// passes mu_max with the backward pass still failing.
OptimizeResult Optimize(const Environment& env, const QuadraticCostModel& cost,
                        const StateVector& x0,
                        const std::vector<ControlVector>& u_init,
                        const OptimizerConfig& cfg);

}  // namespace mfctrl

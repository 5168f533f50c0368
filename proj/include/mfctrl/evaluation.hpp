#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mfctrl/lqr.hpp"

namespace mfctrl {

struct RolloutStats {
  double epsilon = 0.0;
  NoiseChannel channel = NoiseChannel::kState;
  int n_rollouts = 0;
  int divergences = 0;
  double cost_mean = 0.0;
  double cost_var = 0.0;  // unbiased sample variance
  double terminal_mse_mean = 0.0;
  double nominal_cost = 0.0;  // noiseless cost of the policy's nominal
  std::uint64_t seed = 0;
};

struct EvalOptions {
  // Pair rollout 2i with 2i+1 on negated noise. Cancels the first-order
  // cost term in the mean, which is what makes small mean gaps measurable.
  bool antithetic = false;
  int threads = 1;
  // First rollout id; sweeps use disjoint id ranges per epsilon.
  std::uint64_t first_rollout_id = 0;
};

/// M closed-loop rollouts of the policy under `noise`. Rollout i draws its
/// noise from (noise.seed, first_rollout_id + i), so results are independent
/// of scheduling. Divergent rollouts are counted and left out of the moments.
RolloutStats MonteCarloEval(const Environment& env,
                            const DecoupledPolicy& policy,
                            const NoiseModel& noise,
                            const QuadraticCostModel& cost, int rollouts,
                            const EvalOptions& options = {});

/// One MonteCarloEval per epsilon (ascending, non-negative). Epsilon j uses
/// rollout ids [j M, (j+1) M).
std::vector<RolloutStats> EpsilonSweep(const Environment& env,
                                       const DecoupledPolicy& policy,
                                       NoiseChannel channel,
                                       std::span<const double> epsilons,
                                       int rollouts, std::uint64_t seed,
                                       const QuadraticCostModel& cost,
                                       const EvalOptions& options = {});

enum class ScalingResponse { kCostVariance, kMeanCostGap };

std::string_view ToString(ScalingResponse response);

struct ScalingFit {
  ScalingResponse response = ScalingResponse::kCostVariance;
  std::vector<double> epsilons;   // points used in the fit
  std::vector<double> responses;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int dropped = 0;  // entries skipped (eps <= 0, response <= 0, divergences)
};

/// Least-squares line through (log eps, log response). Cost variance uses
/// Var(J); the mean gap uses |E[J] - J_bar|. Throws FitFailure with fewer
/// than four usable points.
ScalingFit VarianceScalingFit(std::span<const RolloutStats> sweep,
                              ScalingResponse response);

/// Plain log-log regression, exposed for callers with their own data.
ScalingFit FitPowerLaw(std::span<const double> epsilons,
                       std::span<const double> responses);

/// Var(dJ_1) / eps^2 for the linear perturbation dynamics
///   dx_{t+1} = (A_t + B_t K_t) dx_t + eps G_t w_t,
/// where G_t = I on the state channel and B_t diag(half range) on the control
/// channel, and dJ_1 is the first-order cost perturbation along the nominal.
double LinearizedCostVariance(const DecoupledPolicy& policy,
                              const std::vector<LinearizedModel>& models,
                              const QuadraticCostModel& cost,
                              NoiseChannel channel,
                              const ControlVector& control_half_range);

/// Pairwise (cascade) summation in index order.
double PairwiseSum(std::span<const double> values);

}  // namespace mfctrl

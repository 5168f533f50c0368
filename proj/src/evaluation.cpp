#include "mfctrl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfctrl/errors.hpp"
#include "mfctrl/parallel.hpp"

namespace mfctrl {

double PairwiseSum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return PairwiseSum(values.first(half)) + PairwiseSum(values.subspan(half));
}

std::string_view ToString(ScalingResponse response) {
  return response == ScalingResponse::kCostVariance ? "cost_var"
                                                    : "mean_cost_gap";
}

RolloutStats MonteCarloEval(const Environment& env,
                            const DecoupledPolicy& policy,
                            const NoiseModel& noise,
                            const QuadraticCostModel& cost, int rollouts,
                            const EvalOptions& options) {
  if (rollouts < 1) throw ContractViolation("monte carlo: need at least one rollout");
  noise.Validate();
  policy.Validate();
  const int horizon = policy.nominal.horizon();
  const int dim = NoiseDim(env, noise.channel);

  std::vector<double> costs(rollouts);
  std::vector<double> sq_err(rollouts);
  std::vector<char> diverged(rollouts, 0);
  ParallelFor(rollouts, options.threads, [&](int i) {
    const std::uint64_t pair = options.antithetic ? i / 2 : i;
    const bool negated = options.antithetic && (i % 2 == 1);
    const NoiseStream stream(noise.seed, options.first_rollout_id + pair, dim,
                             horizon, negated);
    const RealizedRollout r = RolloutClosedLoop(env, policy, noise, stream, cost);
    if (r.diverged) {
      diverged[i] = 1;
      return;
    }
    costs[i] = r.cost;
    sq_err[i] = (r.states.back() - cost.goal()).squaredNorm();
  });

  // Moments on values shifted by the first kept sample; exact when all
  // samples coincide.
  std::vector<double> d_cost, d_cost_sq, mse;
  double shift = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < rollouts; ++i) {
    if (diverged[i]) continue;
    if (std::isnan(shift)) shift = costs[i];
    const double d = costs[i] - shift;
    d_cost.push_back(d);
    d_cost_sq.push_back(d * d);
    mse.push_back(sq_err[i]);
  }

  RolloutStats stats;
  stats.epsilon = noise.epsilon;
  stats.channel = noise.channel;
  stats.n_rollouts = rollouts;
  stats.divergences = rollouts - static_cast<int>(d_cost.size());
  stats.seed = noise.seed;
  stats.nominal_cost =
      TotalCost(policy.nominal.states, policy.nominal.controls, cost);
  const double kept = static_cast<double>(d_cost.size());
  if (d_cost.empty()) {
    stats.cost_mean = stats.cost_var = stats.terminal_mse_mean =
        std::numeric_limits<double>::quiet_NaN();
    return stats;
  }
  const double s1 = PairwiseSum(d_cost);
  const double s2 = PairwiseSum(d_cost_sq);
  stats.cost_mean = shift + s1 / kept;
  stats.cost_var =
      kept > 1 ? std::max(0.0, (s2 - s1 * s1 / kept) / (kept - 1.0)) : 0.0;
  stats.terminal_mse_mean = PairwiseSum(mse) / kept;
  return stats;
}

std::vector<RolloutStats> EpsilonSweep(const Environment& env,
                                       const DecoupledPolicy& policy,
                                       NoiseChannel channel,
                                       std::span<const double> epsilons,
                                       int rollouts, std::uint64_t seed,
                                       const QuadraticCostModel& cost,
                                       const EvalOptions& options) {
  for (std::size_t j = 0; j < epsilons.size(); ++j) {
    if (!(epsilons[j] >= 0.0)) {
      throw ContractViolation("sweep: epsilons must be non-negative");
    }
    if (j > 0 && epsilons[j] < epsilons[j - 1]) {
      throw ContractViolation("sweep: epsilons must be sorted ascending");
    }
  }
  std::vector<RolloutStats> out;
  out.reserve(epsilons.size());
  for (std::size_t j = 0; j < epsilons.size(); ++j) {
    EvalOptions opts = options;
    opts.first_rollout_id =
        options.first_rollout_id + static_cast<std::uint64_t>(j) * rollouts;
    out.push_back(MonteCarloEval(env, policy,
                                 NoiseModel{epsilons[j], channel, seed}, cost,
                                 rollouts, opts));
  }
  return out;
}

ScalingFit FitPowerLaw(std::span<const double> epsilons,
                       std::span<const double> responses) {
  if (epsilons.size() != responses.size()) {
    throw ContractViolation("power-law fit: size mismatch");
  }
  ScalingFit fit;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (epsilons[i] > 0.0 && responses[i] > 0.0 && std::isfinite(responses[i])) {
      fit.epsilons.push_back(epsilons[i]);
      fit.responses.push_back(responses[i]);
    } else {
      ++fit.dropped;
    }
  }
  const std::size_t n = fit.epsilons.size();
  if (n < 4) {
    throw FitFailure("power-law fit: only " + std::to_string(n) +
                     " usable points (need 4)");
  }
  Eigen::VectorXd lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(fit.epsilons[i]);
    ly[i] = std::log(fit.responses[i]);
  }
  const double mx = lx.mean();
  const double my = ly.mean();
  const double sxx = (lx.array() - mx).square().sum();
  const double sxy = ((lx.array() - mx) * (ly.array() - my)).sum();
  if (!(sxx > 0.0)) throw FitFailure("power-law fit: all epsilons equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_tot = (ly.array() - my).square().sum();
  const double ss_res =
      (ly.array() - (fit.intercept + fit.slope * lx.array())).square().sum();
  fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return fit;
}

ScalingFit VarianceScalingFit(std::span<const RolloutStats> sweep,
                              ScalingResponse response) {
  std::vector<double> eps, resp;
  int dropped = 0;
  for (const auto& s : sweep) {
    if (s.divergences > 0) {
      ++dropped;
      continue;
    }
    eps.push_back(s.epsilon);
    resp.push_back(response == ScalingResponse::kCostVariance
                       ? s.cost_var
                       : std::abs(s.cost_mean - s.nominal_cost));
  }
  ScalingFit fit = FitPowerLaw(eps, resp);
  fit.response = response;
  fit.dropped += dropped;
  return fit;
}

double LinearizedCostVariance(const DecoupledPolicy& policy,
                              const std::vector<LinearizedModel>& models,
                              const QuadraticCostModel& cost,
                              NoiseChannel channel,
                              const ControlVector& control_half_range) {
  const auto& nom = policy.nominal;
  const int horizon = nom.horizon();
  if (static_cast<int>(models.size()) != horizon) {
    throw ContractViolation("linearized variance: model count mismatch");
  }
  // Adjoint of dJ_1 with respect to the state perturbation, propagated
  // backward through the closed-loop linear dynamics.
  Eigen::VectorXd lambda = TerminalCostPartials(nom.states.back(), cost).first;
  double var = 0.0;
  for (int t = horizon - 1; t >= 0; --t) {
    const Matrix& a = models[t].A;
    const Matrix& b = models[t].B;
    const Matrix& k = policy.gains[t];
    // Noise at step t enters x_{t+1}.
    const Eigen::VectorXd g =
        channel == NoiseChannel::kState
            ? lambda
            : Eigen::VectorXd(control_half_range.asDiagonal() * b.transpose() * lambda);
    var += g.squaredNorm();
    const CostPartials c = ComputeCostPartials(nom.states[t], nom.controls[t], t, cost);
    lambda = c.c_x + k.transpose() * c.c_u + (a + b * k).transpose() * lambda;
  }
  return var;
}

}  // namespace mfctrl

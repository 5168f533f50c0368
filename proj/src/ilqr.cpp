#include "mfctrl/ilqr.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "mfctrl/errors.hpp"
#include "mfctrl/rollout.hpp"

namespace mfctrl {

namespace {

Matrix Symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

BackwardPassResult BackwardPass(const NominalTrajectory& traj,
                                const QuadraticCostModel& cost,
                                const std::vector<LinearizedModel>& models,
                                double mu) {
  const int horizon = traj.horizon();
  if (static_cast<int>(models.size()) != horizon) {
    throw ContractViolation("backward pass: " + std::to_string(models.size()) +
                            " models for horizon " + std::to_string(horizon));
  }
  if (!(mu >= 0.0)) throw ContractViolation("backward pass: mu must be >= 0");
  const int nx = cost.state_dim();
  const int nu = cost.control_dim();
  const Matrix reg = mu * Matrix::Identity(nx, nx);

  BackwardPassResult result;
  result.expansions.resize(horizon);
  IterationGains gains;
  gains.k.resize(horizon);
  gains.K.resize(horizon);

  auto [v_x, v_xx] = TerminalCostPartials(traj.states.back(), cost);
  for (int t = horizon - 1; t >= 0; --t) {
    const Matrix& a = models[t].A;
    const Matrix& b = models[t].B;
    if (a.rows() != nx || a.cols() != nx || b.rows() != nx || b.cols() != nu) {
      throw ContractViolation("backward pass: model dimensions at t=" +
                              std::to_string(t));
    }
    const CostPartials c =
        ComputeCostPartials(traj.states[t], traj.controls[t], t, cost);
    const Matrix v_xx_reg = v_xx + reg;

    QExpansion& q = result.expansions[t];
    q.q_x = c.c_x + a.transpose() * v_x;
    q.q_u = c.c_u + b.transpose() * v_x;
    q.q_xx = c.c_xx + a.transpose() * v_xx * a;
    q.q_ux = c.c_ux + b.transpose() * v_xx_reg * a;
    q.q_uu = Symmetrized(c.c_uu + b.transpose() * v_xx_reg * b);

    Eigen::LLT<Matrix> llt(q.q_uu);
    if (llt.info() != Eigen::Success || !q.q_uu.allFinite()) {
      result.failed_at = t;
      return result;
    }
    gains.k[t] = -llt.solve(q.q_u);
    gains.K[t] = -llt.solve(q.q_ux);
    const Eigen::VectorXd& k = gains.k[t];
    const Matrix& big_k = gains.K[t];

    v_x = q.q_x + big_k.transpose() * q.q_uu * k + big_k.transpose() * q.q_u +
          q.q_ux.transpose() * k;
    v_xx = Symmetrized(q.q_xx + big_k.transpose() * q.q_uu * big_k +
                       big_k.transpose() * q.q_ux + q.q_ux.transpose() * big_k);
  }
  result.gains = std::move(gains);
  return result;
}

ForwardPassResult ForwardPass(const NominalTrajectory& prev,
                              const IterationGains& gains, double alpha,
                              const Environment& env,
                              const QuadraticCostModel& cost, double band,
                              std::optional<double> reference_cost) {
  const int horizon = prev.horizon();
  if (static_cast<int>(gains.k.size()) != horizon ||
      static_cast<int>(gains.K.size()) != horizon) {
    throw ContractViolation("forward pass: gain horizon does not match trajectory");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ContractViolation("forward pass: alpha must lie in [0, 1]");
  }
  NominalTrajectory cand;
  cand.states.reserve(horizon + 1);
  cand.controls.reserve(horizon);
  cand.states.push_back(prev.states.front());

  ForwardPassResult out;
  for (int t = 0; t < horizon; ++t) {
    const StateVector& x = cand.states.back();
    ControlVector u = prev.controls[t] + alpha * gains.k[t] +
                      gains.K[t] * (x - prev.states[t]);
    if (!u.allFinite()) {
      out.diverged = true;
      break;
    }
    cand.controls.push_back(env.Clamp(u));
    StateVector next = env.Step(x, cand.controls.back());
    if (!next.allFinite()) {
      out.diverged = true;
      break;
    }
    cand.states.push_back(std::move(next));
  }
  if (!out.diverged) {
    cand.cost = TotalCost(cand.states, cand.controls, cost);
    out.diverged = !std::isfinite(cand.cost);
  }
  out.candidate_cost =
      out.diverged ? std::numeric_limits<double>::infinity() : cand.cost;

  const double reference = reference_cost.value_or(prev.cost);
  out.accepted = !out.diverged && out.candidate_cost <= reference * (1.0 + band);
  out.trajectory = out.accepted ? std::move(cand) : prev;
  return out;
}

std::vector<double> OptimizerConfig::GeometricAlphas(double first, double ratio,
                                                     int count) {
  std::vector<double> alphas;
  alphas.reserve(count);
  double a = first;
  for (int i = 0; i < count; ++i, a *= ratio) alphas.push_back(a);
  return alphas;
}

void OptimizerConfig::Validate() const {
  if (!(mu >= 0.0)) throw ContractViolation("optimizer: mu must be >= 0");
  if (!(mu_factor > 1.0)) throw ContractViolation("optimizer: mu_factor must be > 1");
  if (!(mu_min > 0.0) || !(mu_min <= mu_max)) {
    throw ContractViolation("optimizer: need 0 < mu_min <= mu_max");
  }
  if (alphas.empty()) throw ContractViolation("optimizer: empty alpha schedule");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0 && alphas[i] <= 1.0)) {
      throw ContractViolation("optimizer: alphas must lie in (0, 1]");
    }
    if (i > 0 && !(alphas[i] < alphas[i - 1])) {
      throw ContractViolation("optimizer: alphas must be strictly decreasing");
    }
  }
  if (!(band >= 0.0)) throw ContractViolation("optimizer: band must be >= 0");
  if (!(conv_tol > 0.0)) throw ContractViolation("optimizer: conv_tol must be > 0");
  if (conv_patience < 1) throw ContractViolation("optimizer: conv_patience must be >= 1");
  if (max_iters < 0) throw ContractViolation("optimizer: max_iters must be >= 0");
}

OptimizeResult Optimize(const Environment& env, const QuadraticCostModel& cost,
                        const StateVector& x0,
                        const std::vector<ControlVector>& u_init,
                        const OptimizerConfig& cfg) {
  cfg.Validate();
  if (u_init.empty()) throw ContractViolation("optimize: empty control sequence");
  cfg.estimator.Validate(env.state_dim(), env.control_dim());
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  };
  const std::int64_t horizon = static_cast<std::int64_t>(u_init.size());

  OptimizeResult result;
  NominalTrajectory current = RolloutOpenLoop(env, x0, u_init, cost);
  result.trajectory = current;
  result.trace.initial_cost = current.cost;
  std::int64_t evals = horizon;
  double mu = cfg.mu;
  int small_changes = 0;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    EstimatorConfig est = cfg.estimator;
    est.seed = DeriveSeed(cfg.estimator.seed, static_cast<std::uint64_t>(iter), 0x11c);
    const std::vector<LinearizedModel> models = IdentifyLtv(env, current, est);
    for (const auto& m : models) evals += m.eval_count;

    IterationRecord rec;
    rec.iteration = iter;
    rec.mu = mu;

    BackwardPassResult back = BackwardPass(current, cost, models, mu);
    if (!back.ok()) {
      if (mu >= cfg.mu_max) {
        throw RegularizationExhausted(
            "regularization exhausted: Q_uu not positive definite at t=" +
            std::to_string(back.failed_at) + " with mu=" + std::to_string(mu));
      }
      mu = std::min(std::max(mu * cfg.mu_factor, cfg.mu_min), cfg.mu_max);
      rec.cost = current.cost;
      rec.wall_time_s = elapsed();
      rec.eval_count = evals;
      result.trace.records.push_back(rec);
      continue;
    }
    rec.backward_success = true;

    std::optional<ForwardPassResult> step;
    for (double alpha : cfg.alphas) {
      ForwardPassResult fp = ForwardPass(current, *back.gains, alpha, env, cost,
                                         cfg.band, result.trajectory.cost);
      evals += horizon;
      if (fp.accepted) {
        rec.alpha = alpha;
        step = std::move(fp);
        break;
      }
    }
    rec.eval_count = evals;
    if (!step) {
      rec.cost = current.cost;
      rec.wall_time_s = elapsed();
      result.trace.records.push_back(rec);
      result.trace.stop_reason = StopReason::kLineSearchExhausted;
      return result;
    }

    const double prev_cost = current.cost;
    current = std::move(step->trajectory);
    if (cfg.decay_mu) mu = std::max(mu / cfg.mu_factor, cfg.mu_min);
    if (current.cost < result.trajectory.cost) result.trajectory = current;

    const double rel_change =
        std::abs(prev_cost - current.cost) /
        std::max(std::abs(prev_cost), std::numeric_limits<double>::min());
    small_changes = rel_change < cfg.conv_tol ? small_changes + 1 : 0;

    rec.accepted = true;
    rec.cost = current.cost;
    rec.wall_time_s = elapsed();
    result.trace.records.push_back(rec);
    if (small_changes >= cfg.conv_patience) {
      result.trace.stop_reason = StopReason::kConverged;
      return result;
    }
  }
  result.trace.stop_reason = StopReason::kMaxIterations;
  return result;
}

}  // namespace mfctrl

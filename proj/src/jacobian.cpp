#include "mfctrl/jacobian.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "mfctrl/errors.hpp"
#include "mfctrl/parallel.hpp"
#include "mfctrl/rollout.hpp"

namespace mfctrl {

void EstimatorConfig::Validate(int n_x, int n_u) const {
  const int ns = ResolvedSamples(n_x, n_u);
  if (ns < n_x + n_u) {
    throw ContractViolation("estimator: n_samples=" + std::to_string(ns) +
                            " must be >= n_x + n_u = " +
                            std::to_string(n_x + n_u));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ContractViolation("estimator: sigma must be > 0");
  }
  if (state_scale.size() != 0 &&
      (state_scale.size() != n_x || !(state_scale.array() > 0).all())) {
    throw ContractViolation("estimator: state_scale needs n_x positive entries");
  }
  if (control_scale.size() != 0 &&
      (control_scale.size() != n_u || !(control_scale.array() > 0).all())) {
    throw ContractViolation("estimator: control_scale needs n_u positive entries");
  }
}

LinearizedModel EstimateLlsCd(const Environment& env, const StateVector& x,
                              const ControlVector& u,
                              const EstimatorConfig& cfg) {
  const int nx = env.state_dim();
  const int nu = env.control_dim();
  const int n = nx + nu;
  if (x.size() != nx || u.size() != nu) {
    throw ContractViolation("LLS-CD: dimension mismatch");
  }
  if (!x.allFinite() || !u.allFinite()) {
    throw ContractViolation("LLS-CD: nominal point not finite");
  }
  cfg.Validate(nx, nu);
  const int ns = cfg.ResolvedSamples(nx, nu);

  Eigen::VectorXd stddev(n);
  stddev.head(nx) = cfg.state_scale.size() ? Eigen::VectorXd(cfg.sigma * cfg.state_scale)
                                           : Eigen::VectorXd::Constant(nx, cfg.sigma);
  stddev.tail(nu) = cfg.control_scale.size()
                        ? Eigen::VectorXd(cfg.sigma * cfg.control_scale)
                        : Eigen::VectorXd::Constant(nu, cfg.sigma);

  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                    static_cast<std::uint32_t>(cfg.seed >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix z(ns, n);
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < n; ++j) z(i, j) = stddev[j] * normal(rng);
  }

  // Half central differences, one row per sample.
  Matrix d(ns, nx);
  for (int i = 0; i < ns; ++i) {
    const Eigen::VectorXd zi = z.row(i).transpose();
    const StateVector plus = env.Step(x + zi.head(nx), u + zi.tail(nu));
    const StateVector minus = env.Step(x - zi.head(nx), u - zi.tail(nu));
    d.row(i) = (0.5 * (plus - minus)).transpose();
  }

  Matrix jt;  // [A B]' as (n x n_x)
  if (cfg.approx_identity) {
    const Eigen::VectorXd var = stddev.array().square() * (ns - 1);
    jt = (z.transpose() * d).array().colwise() / var.array();
  } else {
    Eigen::JacobiSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / sv(n - 1);
    if (!(sv(n - 1) > kRankCutoff * sv(0))) {
      std::ostringstream msg;
      msg << "LLS-CD: perturbation matrix is rank deficient (condition number "
          << cond << ")";
      throw SingularSystemError(msg.str(), cond);
    }
    svd.setThreshold(kRankCutoff);
    jt = svd.solve(d);
  }

  LinearizedModel model;
  model.A = jt.topRows(nx).transpose();
  model.B = jt.bottomRows(nu).transpose();
  model.eval_count = 2LL * ns;
  return model;
}

LinearizedModel EstimateFiniteDifference(const Environment& env,
                                         const StateVector& x,
                                         const ControlVector& u, double h) {
  const int nx = env.state_dim();
  const int nu = env.control_dim();
  if (!(h > 0.0)) throw ContractViolation("finite difference: h must be > 0");
  if (x.size() != nx || u.size() != nu) {
    throw ContractViolation("finite difference: dimension mismatch");
  }
  LinearizedModel model;
  model.A.resize(nx, nx);
  model.B.resize(nx, nu);
  for (int j = 0; j < nx; ++j) {
    StateVector xp = x;
    StateVector xm = x;
    xp[j] += h;
    xm[j] -= h;
    model.A.col(j) = (env.Step(xp, u) - env.Step(xm, u)) / (2.0 * h);
  }
  for (int j = 0; j < nu; ++j) {
    ControlVector up = u;
    ControlVector um = u;
    up[j] += h;
    um[j] -= h;
    model.B.col(j) = (env.Step(x, up) - env.Step(x, um)) / (2.0 * h);
  }
  model.eval_count = 2LL * (nx + nu);
  return model;
}

std::vector<LinearizedModel> IdentifyLtv(const Environment& env,
                                         const NominalTrajectory& traj,
                                         const EstimatorConfig& cfg) {
  const int horizon = traj.horizon();
  if (static_cast<int>(traj.states.size()) != horizon + 1) {
    throw ContractViolation("identify_ltv: trajectory needs N+1 states");
  }
  // Every step reuses the same perturbation draws (common random numbers), so
  // a constant trajectory yields identical models and the estimation error
  // does not jitter from one step to the next.
  std::vector<LinearizedModel> models(horizon);
  ParallelFor(horizon, cfg.threads, [&](int t) {
    try {
      models[t] = EstimateLlsCd(env, traj.states[t], traj.controls[t], cfg);
    } catch (const SingularSystemError& e) {
      throw SingularSystemError("t=" + std::to_string(t) + ": " + e.what(),
                                e.condition_number());
    } catch (const ContractViolation& e) {
      throw ContractViolation("t=" + std::to_string(t) + ": " + e.what());
    }
  });
  return models;
}

}  // namespace mfctrl

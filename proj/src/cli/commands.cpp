#include "mfctrl/cli/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "mfctrl/evaluation.hpp"
#include "mfctrl/ilqr.hpp"
#include "mfctrl/lqr.hpp"
#include "mfctrl/policy_io.hpp"
#include "mfctrl/rollout.hpp"

namespace mfctrl::cli {

namespace fs = std::filesystem;

RunConfig ResolveConfig(const CommandOptions& options) {
  RunConfig config;
  if (!options.config_path.empty()) {
    config = LoadConfig(options.config_path);
  }
  if (options.out_dir) config.out_dir = *options.out_dir;
  if (options.seed) config.seed = *options.seed;
  if (options.trajectory) config.trajectory = *options.trajectory;
  if (options.policy) config.policy = *options.policy;
  config.Validate();
  return config;
}

namespace {

fs::path OutDir(const RunConfig& c) {
  fs::path dir(c.out_dir);
  fs::create_directories(dir);
  return dir;
}

std::ofstream OpenOutput(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractViolation("cannot write " + path.string());
  return out;
}

void EchoConfig(const RunConfig& c, const fs::path& dir, const char* command) {
  auto out = OpenOutput(dir / (std::string("config_") + command + ".ini"));
  WriteConfig(out, c);
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

const char* StopReasonName(StopReason r) {
  switch (r) {
    case StopReason::kConverged: return "converged";
    case StopReason::kLineSearchExhausted: return "line search exhausted";
    case StopReason::kMaxIterations: return "max iterations";
  }
  return "?";
}

void WriteTraceCsv(std::ostream& out, const ConvergenceTrace& trace,
                   bool wall_time) {
  out << "iteration,cost,mu,alpha,accepted,wall_time_s,eval_count\n";
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << FormatDouble(r.cost) << ',' << FormatDouble(r.mu)
        << ',' << FormatDouble(r.alpha) << ',' << (r.accepted ? 1 : 0) << ','
        << FormatDouble(wall_time ? r.wall_time_s : 0.0) << ',' << r.eval_count
        << '\n';
  }
}

void WriteStatsCsv(std::ostream& out, const std::vector<RolloutStats>& rows) {
  out << "epsilon,channel,n_rollouts,divergences,cost_mean,cost_var,"
         "terminal_mse_mean,seed\n";
  for (const auto& s : rows) {
    out << FormatDouble(s.epsilon) << ',' << ToString(s.channel) << ','
        << s.n_rollouts << ',' << s.divergences << ',' << FormatDouble(s.cost_mean)
        << ',' << FormatDouble(s.cost_var) << ','
        << FormatDouble(s.terminal_mse_mean) << ',' << s.seed << '\n';
  }
}

// Exact optimum of the unconstrained LQ problem, for linear environments
// with the goal at the origin.
std::optional<double> LinearOracleCost(const Environment& env,
                                       const QuadraticCostModel& cost) {
  const auto* lin = dynamic_cast<const LinearEnvironment*>(&env);
  if (lin == nullptr || !cost.goal().isZero(0.0)) return std::nullopt;
  std::vector<LinearizedModel> models(env.spec().horizon,
                                      LinearizedModel{lin->a(), lin->b(), 0});
  const RiccatiSolution sol = SolveRiccati(models, cost);
  const StateVector& x0 = env.spec().initial_state;
  return 0.5 * x0.dot(sol.cost_to_go.front() * x0);
}

DecoupledPolicy LoadPolicyFor(const RunConfig& c, const Environment& env) {
  const fs::path path = c.policy.empty() ? fs::path(c.out_dir) / "policy.txt"
                                         : fs::path(c.policy);
  DecoupledPolicy policy = LoadPolicy(path);
  if (policy.env_name != env.name()) {
    throw ContractViolation(path.string() + ": policy is for environment '" +
                            policy.env_name + "', config selects '" + env.name() +
                            "'");
  }
  if (policy.nominal.states.front().size() != env.state_dim() ||
      policy.nominal.controls.front().size() != env.control_dim()) {
    throw ContractViolation(path.string() + ": dimensions do not match " +
                            env.name());
  }
  return policy;
}

EvalOptions MakeEvalOptions(const RunConfig& c) {
  EvalOptions o;
  o.antithetic = c.antithetic;
  o.threads = c.threads;
  return o;
}

}  // namespace

void CmdTrain(const RunConfig& c, std::ostream& out) {
  const EnvironmentPtr env = MakeEnvironment(c);
  const QuadraticCostModel cost = CostWeights(c).ToCost(env->spec());
  OptimizerConfig cfg = c.optimizer;
  cfg.estimator.seed = TrainSeed(c);
  cfg.estimator.threads = c.threads;

  const std::vector<ControlVector> u_init(
      env->spec().horizon, ControlVector::Zero(env->control_dim()));
  const auto start = std::chrono::steady_clock::now();
  const OptimizeResult result =
      Optimize(*env, cost, env->spec().initial_state, u_init, cfg);
  const double elapsed = Seconds(start);

  const fs::path dir = OutDir(c);
  SaveTrajectory(dir / "trajectory.txt", env->name(), result.trajectory);
  {
    auto f = OpenOutput(dir / "trace.csv");
    WriteTraceCsv(f, result.trace, c.record_wall_time);
  }
  EchoConfig(c, dir, "train");

  const auto& traj = result.trajectory;
  const std::int64_t evals =
      result.trace.records.empty() ? 0 : result.trace.records.back().eval_count;
  out << std::setprecision(10);
  out << "env            " << env->name() << '\n'
      << "iterations     " << result.trace.records.size() << " ("
      << StopReasonName(result.trace.stop_reason) << ")\n"
      << "initial cost   " << result.trace.initial_cost << '\n'
      << "final cost     " << traj.cost << '\n'
      << "terminal state " << traj.states.back().transpose() << '\n'
      << "step calls     " << evals << '\n'
      << "wall time [s]  " << elapsed << '\n';
  if (const auto oracle = LinearOracleCost(*env, cost)) {
    out << "riccati cost   " << *oracle << " (relative gap "
        << std::abs(traj.cost - *oracle) / std::abs(*oracle) << ")\n";
  }
}

void CmdFeedback(const RunConfig& c, std::ostream& out) {
  const EnvironmentPtr env = MakeEnvironment(c);
  const fs::path path = c.trajectory.empty()
                            ? fs::path(c.out_dir) / "trajectory.txt"
                            : fs::path(c.trajectory);
  const TrajectoryFile file = LoadTrajectory(path);
  if (file.env_name != env->name()) {
    throw ContractViolation(path.string() + ": trajectory is for environment '" +
                            file.env_name + "', config selects '" + env->name() +
                            "'");
  }
  const auto& nominal = file.trajectory;
  if (nominal.states.front().size() != env->state_dim() ||
      nominal.controls.front().size() != env->control_dim()) {
    throw ContractViolation(path.string() + ": dimensions do not match " +
                            env->name());
  }
  EstimatorConfig est = c.optimizer.estimator;
  est.seed = FeedbackSeed(c);
  est.threads = c.threads;
  const QuadraticCostModel weights = FeedbackWeights(c).ToCost(env->spec());
  const DecoupledPolicy policy = BuildPolicy(*env, nominal, est, weights);

  const fs::path dir = OutDir(c);
  SavePolicy(dir / "policy.txt", policy);
  EchoConfig(c, dir, "feedback");

  double max_gain = 0.0;
  for (const auto& k : policy.gains) max_gain = std::max(max_gain, k.cwiseAbs().maxCoeff());
  out << std::setprecision(10);
  out << "env            " << env->name() << '\n'
      << "horizon        " << policy.gains.size() << '\n'
      << "nominal cost   " << nominal.cost << '\n'
      << "max |K|        " << max_gain << '\n';
}

void CmdEval(const RunConfig& c, std::ostream& out) {
  const EnvironmentPtr env = MakeEnvironment(c);
  const QuadraticCostModel cost = CostWeights(c).ToCost(env->spec());
  const DecoupledPolicy policy = LoadPolicyFor(c, *env);
  const NoiseModel noise{c.epsilon, c.channel, NoiseSeed(c)};
  const EvalOptions opts = MakeEvalOptions(c);

  const RolloutStats closed = MonteCarloEval(*env, policy, noise, cost, c.rollouts, opts);
  const fs::path dir = OutDir(c);
  {
    auto f = OpenOutput(dir / "eval.csv");
    WriteStatsCsv(f, {closed});
  }
  std::optional<RolloutStats> open;
  if (c.open_loop_baseline) {
    open = MonteCarloEval(*env, policy.OpenLoop(), noise, cost, c.rollouts, opts);
    auto f = OpenOutput(dir / "eval_open_loop.csv");
    WriteStatsCsv(f, {*open});
  }
  EchoConfig(c, dir, "eval");

  out << std::setprecision(10);
  out << "env            " << env->name() << '\n'
      << "epsilon        " << c.epsilon << " (" << ToString(c.channel)
      << " channel, " << c.rollouts << " rollouts)\n"
      << "nominal cost   " << closed.nominal_cost << '\n'
      << "cost mean      " << closed.cost_mean << '\n'
      << "cost variance  " << closed.cost_var << '\n'
      << "terminal mse   " << closed.terminal_mse_mean << '\n'
      << "divergences    " << closed.divergences << '\n';
  if (open) {
    out << "open-loop var  " << open->cost_var << '\n'
        << "open-loop mse  " << open->terminal_mse_mean << '\n';
  }
}

void CmdSweep(const RunConfig& c, std::ostream& out) {
  const EnvironmentPtr env = MakeEnvironment(c);
  const QuadraticCostModel cost = CostWeights(c).ToCost(env->spec());
  const DecoupledPolicy policy = LoadPolicyFor(c, *env);
  const EvalOptions opts = MakeEvalOptions(c);

  const auto sweep = EpsilonSweep(*env, policy, c.channel, c.epsilons, c.rollouts,
                                  NoiseSeed(c), cost, opts);
  const fs::path dir = OutDir(c);
  {
    auto f = OpenOutput(dir / "sweep.csv");
    WriteStatsCsv(f, sweep);
  }
  if (c.open_loop_baseline) {
    const auto open = EpsilonSweep(*env, policy.OpenLoop(), c.channel, c.epsilons,
                                   c.rollouts, NoiseSeed(c), cost, opts);
    auto f = OpenOutput(dir / "sweep_open_loop.csv");
    WriteStatsCsv(f, open);
  }

  out << std::setprecision(6);
  auto fit_file = OpenOutput(dir / "fit.csv");
  fit_file << "response,slope,intercept,r_squared,n_points\n";
  for (auto response : {ScalingResponse::kCostVariance, ScalingResponse::kMeanCostGap}) {
    try {
      const ScalingFit fit = VarianceScalingFit(sweep, response);
      fit_file << ToString(response) << ',' << FormatDouble(fit.slope) << ','
               << FormatDouble(fit.intercept) << ',' << FormatDouble(fit.r_squared)
               << ',' << fit.epsilons.size() << '\n';
      out << ToString(response) << ": slope " << fit.slope << ", r^2 "
          << fit.r_squared << " over " << fit.epsilons.size() << " points\n";
    } catch (const FitFailure& e) {
      out << ToString(response) << ": no fit (" << e.what() << ")\n";
    }
  }
  EchoConfig(c, dir, "sweep");
}

void CmdJacobianBench(const RunConfig& c, std::ostream& out) {
  const fs::path dir = OutDir(c);
  auto csv = OpenOutput(dir / "bench.csv");
  csv << "env,method,parameter,wall_time_s,eval_count,max_abs_error_vs_oracle\n";
  out << std::setprecision(4);

  std::uint64_t env_index = 0;
  for (const auto& name : c.bench_envs) {
    const Problem problem = MakeProblem(name);
    const auto counting = std::make_shared<CountingEnvironment>(problem.env);
    const EnvironmentSpec& spec = problem.env->spec();
    const int horizon = spec.horizon;

    // Random controls at half the actuator range give a non-trivial nominal.
    std::mt19937_64 rng(DeriveSeed(BenchSeed(c), env_index++));
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    const ControlVector half = problem.env->ControlHalfRange();
    std::vector<ControlVector> controls(horizon);
    for (auto& u : controls) {
      u.resize(spec.n_u);
      for (int j = 0; j < spec.n_u; ++j) u[j] = 2.0 * half[j] * unit(rng);
    }
    const NominalTrajectory nominal =
        RolloutOpenLoop(*problem.env, spec.initial_state, controls, problem.cost);
    std::vector<JacobianPair> reference;
    for (int t = 0; t < horizon; ++t) {
      reference.push_back(*problem.env->ReferenceJacobian(nominal.states[t],
                                                          nominal.controls[t]));
    }
    auto max_error = [&](const std::vector<LinearizedModel>& models) {
      double e = 0.0;
      for (int t = 0; t < horizon; ++t) {
        e = std::max(e, (models[t].A - reference[t].A).cwiseAbs().maxCoeff());
        e = std::max(e, (models[t].B - reference[t].B).cwiseAbs().maxCoeff());
      }
      return e;
    };
    auto emit = [&](const char* method, const std::string& parameter, double secs,
                    std::int64_t calls, double error) {
      csv << name << ',' << method << ',' << parameter << ','
          << FormatDouble(c.record_wall_time ? secs : 0.0) << ',' << calls << ','
          << FormatDouble(error) << '\n';
      out << std::left << std::setw(12) << name << std::setw(7) << method
          << std::setw(8) << parameter << " calls/step " << std::setw(4) << calls
          << " time/iter " << std::setw(10) << secs << " max err " << error << '\n';
    };

    for (int n_s : c.bench_samples) {
      EstimatorConfig est = c.optimizer.estimator;
      est.n_samples = n_s;
      est.seed = DeriveSeed(BenchSeed(c), env_index, static_cast<std::uint64_t>(n_s));
      est.threads = 1;
      est.Validate(spec.n_x, spec.n_u);
      std::vector<LinearizedModel> models;
      counting->Reset();
      const auto start = std::chrono::steady_clock::now();
      for (int r = 0; r < c.bench_repeats; ++r) models = IdentifyLtv(*counting, nominal, est);
      const double secs = Seconds(start) / c.bench_repeats;
      const std::int64_t calls =
          counting->count() / (static_cast<std::int64_t>(c.bench_repeats) * horizon);
      emit("lls_cd", std::to_string(est.ResolvedSamples(spec.n_x, spec.n_u)), secs,
           calls, max_error(models));
    }
    for (double h : c.bench_fd_steps) {
      std::vector<LinearizedModel> models(horizon);
      counting->Reset();
      const auto start = std::chrono::steady_clock::now();
      for (int r = 0; r < c.bench_repeats; ++r) {
        for (int t = 0; t < horizon; ++t) {
          models[t] = EstimateFiniteDifference(*counting, nominal.states[t],
                                               nominal.controls[t], h);
        }
      }
      const double secs = Seconds(start) / c.bench_repeats;
      const std::int64_t calls =
          counting->count() / (static_cast<std::int64_t>(c.bench_repeats) * horizon);
      emit("fd", FormatDouble(h), secs, calls, max_error(models));
    }
  }
  EchoConfig(c, dir, "jacobian-bench");
}

int RunCommand(std::string_view command, const CommandOptions& options,
               std::ostream& out, std::ostream& err) {
  try {
    const RunConfig config = ResolveConfig(options);
    if (command == "train") {
      CmdTrain(config, out);
    } else if (command == "feedback") {
      CmdFeedback(config, out);
    } else if (command == "eval") {
      CmdEval(config, out);
    } else if (command == "sweep") {
      CmdSweep(config, out);
    } else if (command == "jacobian-bench") {
      CmdJacobianBench(config, out);
    } else {
      err << "error: unknown command '" << command << "'\n";
      return kExitConfig;
    }
    return kExitOk;
  } catch (const NumericalFailure& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace mfctrl::cli

#include <gtest/gtest.h>

#include <cmath>

#include "mfctrl/errors.hpp"
#include "mfctrl/evaluation.hpp"
#include "mfctrl/ilqr.hpp"
#include "mfctrl/problems.hpp"
#include "mfctrl/rollout.hpp"
#include "oracles.hpp"

namespace mfctrl {
namespace {

ControlVector U(double v) { return ControlVector::Constant(1, v); }
Matrix M1(double v) { return Matrix::Constant(1, 1, v); }

DecoupledPolicy TrainedPolicy(const Problem& p) {
  OptimizerConfig cfg;
  cfg.estimator.seed = 1;
  const auto res = Optimize(*p.env, p.cost, p.env->spec().initial_state,
                            std::vector<ControlVector>(p.env->spec().horizon, U(0)), cfg);
  EstimatorConfig est;
  est.seed = 2;
  return BuildPolicy(*p.env, res.trajectory, est, p.cost);
}

const DecoupledPolicy& PendulumPolicy() {
  static const DecoupledPolicy policy = TrainedPolicy(MakeProblem("pendulum"));
  return policy;
}

TEST(MonteCarlo, ZeroNoiseIsExact) {
  const Problem p = MakeProblem("pendulum");
  const auto& policy = PendulumPolicy();
  const auto stats = MonteCarloEval(*p.env, policy, NoiseModel{0.0, NoiseChannel::kState, 3},
                                    p.cost, 257);
  EXPECT_EQ(stats.cost_var, 0.0);
  EXPECT_EQ(stats.cost_mean, policy.nominal.cost);
  EXPECT_EQ(stats.terminal_mse_mean,
            (policy.nominal.states.back() - p.cost.goal()).squaredNorm());
  EXPECT_EQ(stats.n_rollouts, 257);
  EXPECT_EQ(stats.divergences, 0);
}

TEST(MonteCarlo, BitIdenticalAcrossRunsAndThreadCounts) {
  const Problem p = MakeProblem("pendulum");
  const NoiseModel noise{0.05, NoiseChannel::kControl, 8};
  const auto a = MonteCarloEval(*p.env, PendulumPolicy(), noise, p.cost, 500);
  const auto b = MonteCarloEval(*p.env, PendulumPolicy(), noise, p.cost, 500);
  EvalOptions opts;
  opts.threads = 4;
  const auto c = MonteCarloEval(*p.env, PendulumPolicy(), noise, p.cost, 500, opts);
  for (const auto* s : {&b, &c}) {
    EXPECT_EQ(a.cost_mean, s->cost_mean);
    EXPECT_EQ(a.cost_var, s->cost_var);
    EXPECT_EQ(a.terminal_mse_mean, s->terminal_mse_mean);
  }
}

TEST(MonteCarlo, RejectsEmptyBudget) {
  const Problem p = MakeProblem("pendulum");
  EXPECT_THROW(MonteCarloEval(*p.env, PendulumPolicy(), NoiseModel{}, p.cost, 0),
               ContractViolation);
}

// Scalar x_{t+1} = a x_t + u_t + eps w_t, K = 0, nominal decaying from 1.
TEST(MonteCarlo, ScalarCostVarianceMatchesLinearGaussianOracle) {
  const double a = 0.95, eps = 0.01;
  const int N = 20;
  EnvironmentSpec spec;
  spec.name = "scalar";
  spec.n_x = spec.n_u = 1;
  spec.dt = 1;
  spec.horizon = N;
  spec.control_lower = U(-100);
  spec.control_upper = U(100);
  spec.initial_state = StateVector::Constant(1, 1.0);
  spec.goal_state = StateVector::Zero(1);
  LinearEnvironment env(spec, M1(a), M1(1.0));
  QuadraticCostModel cost(M1(1.0), M1(1.0), M1(2.0), StateVector::Zero(1));
  const auto nominal = RolloutOpenLoop(env, spec.initial_state,
                                       std::vector<ControlVector>(N, U(0)), cost);
  DecoupledPolicy policy{"scalar", nominal, std::vector<Matrix>(N, M1(0.0)), cost};

  std::vector<Matrix> A(N, M1(a)), B(N, M1(1.0)), K(N, M1(0.0)), G(N, M1(1.0));
  std::vector<Eigen::VectorXd> cx, cu;
  for (int t = 0; t < N; ++t) {
    cx.push_back(nominal.states[t]);
    cu.push_back(Eigen::VectorXd::Zero(1));
  }
  const double var1 = oracle::FirstOrderCostVariance(A, B, K, G, cx, cu,
                                                     2.0 * nominal.states.back());
  const auto stats = MonteCarloEval(env, policy, NoiseModel{eps, NoiseChannel::kState, 4},
                                    cost, 10000);
  EXPECT_NEAR(stats.cost_var, eps * eps * var1, 0.10 * eps * eps * var1);

  const std::vector<LinearizedModel> models(N, LinearizedModel{M1(a), M1(1.0), 0});
  EXPECT_NEAR(LinearizedCostVariance(policy, models, cost, NoiseChannel::kState, U(100)),
              var1, 1e-10 * var1);
}

TEST(LinearizedCostVariance, MatchesTransitionMatrixOracleOnBothChannels) {
  const Problem p = MakeProblem("pendulum");
  const auto& policy = PendulumPolicy();
  EstimatorConfig est;
  est.seed = 2;
  const auto models = IdentifyLtv(*p.env, policy.nominal, est);
  std::vector<Matrix> A, B, G_state, G_control;
  std::vector<Eigen::VectorXd> cx, cu;
  const ControlVector half = p.env->ControlHalfRange();
  for (int t = 0; t < 30; ++t) {
    A.push_back(models[t].A);
    B.push_back(models[t].B);
    G_state.push_back(Matrix::Identity(2, 2));
    G_control.push_back(models[t].B * half.asDiagonal());
    const auto partials =
        ComputeCostPartials(policy.nominal.states[t], policy.nominal.controls[t], t, p.cost);
    cx.push_back(partials.c_x);
    cu.push_back(partials.c_u);
  }
  const Eigen::VectorXd cN = TerminalCostPartials(policy.nominal.states.back(), p.cost).first;
  const double s_ref = oracle::FirstOrderCostVariance(A, B, policy.gains, G_state, cx, cu, cN);
  const double c_ref = oracle::FirstOrderCostVariance(A, B, policy.gains, G_control, cx, cu, cN);
  EXPECT_NEAR(LinearizedCostVariance(policy, models, p.cost, NoiseChannel::kState, half), s_ref,
              1e-9 * s_ref);
  EXPECT_NEAR(LinearizedCostVariance(policy, models, p.cost, NoiseChannel::kControl, half), c_ref,
              1e-9 * c_ref);
}

TEST(LinearizedCostVariance, PredictsSmallNoiseMonteCarlo) {
  const Problem p = MakeProblem("pendulum");
  const auto& policy = PendulumPolicy();
  const auto models = IdentifyLtv(*p.env, policy.nominal, EstimatorConfig{});
  const double eps = 0.005;
  const double predicted = eps * eps *
      LinearizedCostVariance(policy, models, p.cost, NoiseChannel::kControl,
                             p.env->ControlHalfRange());
  const auto stats = MonteCarloEval(*p.env, policy, NoiseModel{eps, NoiseChannel::kControl, 6},
                                    p.cost, 10000);
  EXPECT_NEAR(stats.cost_var, predicted, 0.1 * predicted);
}

TEST(EpsilonSweep, SingleZeroEntry) {
  const Problem p = MakeProblem("pendulum");
  const std::vector<double> eps = {0.0};
  const auto sweep = EpsilonSweep(*p.env, PendulumPolicy(), NoiseChannel::kState, eps, 50, 1,
                                  p.cost);
  ASSERT_EQ(sweep.size(), 1u);
  EXPECT_EQ(sweep[0].cost_var, 0.0);
}

TEST(EpsilonSweep, UsesDisjointStreamsPerEpsilon) {
  const Problem p = MakeProblem("pendulum");
  const std::vector<double> eps = {0.05, 0.05};
  const auto sweep = EpsilonSweep(*p.env, PendulumPolicy(), NoiseChannel::kState, eps, 200, 1,
                                  p.cost);
  EXPECT_NE(sweep[0].cost_mean, sweep[1].cost_mean);
  EvalOptions opts;
  opts.first_rollout_id = 200;
  const auto second = MonteCarloEval(*p.env, PendulumPolicy(),
                                     NoiseModel{0.05, NoiseChannel::kState, 1}, p.cost, 200, opts);
  EXPECT_EQ(second.cost_mean, sweep[1].cost_mean);
}

TEST(EpsilonSweep, RejectsUnsortedOrNegative) {
  const Problem p = MakeProblem("pendulum");
  const std::vector<double> unsorted = {0.02, 0.01};
  const std::vector<double> negative = {-0.01, 0.01};
  EXPECT_THROW(EpsilonSweep(*p.env, PendulumPolicy(), NoiseChannel::kState, unsorted, 10, 1, p.cost),
               ContractViolation);
  EXPECT_THROW(EpsilonSweep(*p.env, PendulumPolicy(), NoiseChannel::kState, negative, 10, 1, p.cost),
               ContractViolation);
}

TEST(EpsilonSweep, PendulumTerminalErrorTrendsUpward) {
  const Problem p = MakeProblem("pendulum");
  const std::vector<double> eps = {0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.15, 0.2};
  const auto sweep = EpsilonSweep(*p.env, PendulumPolicy(), NoiseChannel::kControl, eps, 1000, 3,
                                  p.cost);
  std::vector<double> mse;
  for (const auto& s : sweep) mse.push_back(s.terminal_mse_mean);
  EXPECT_GT(oracle::Spearman(eps, mse), 0.9);
}

TEST(EpsilonSweep, FeedbackLowersTerminalErrorOnPairedSeeds) {
  const Problem p = MakeProblem("pendulum");
  const std::vector<double> eps = {0.01, 0.02, 0.04, 0.06, 0.08, 0.1};
  for (auto ch : {NoiseChannel::kState, NoiseChannel::kControl}) {
    const auto closed = EpsilonSweep(*p.env, PendulumPolicy(), ch, eps, 1000, 5, p.cost);
    const auto open = EpsilonSweep(*p.env, PendulumPolicy().OpenLoop(), ch, eps, 1000, 5, p.cost);
    for (std::size_t j = 0; j < eps.size(); ++j) {
      EXPECT_LT(closed[j].terminal_mse_mean, open[j].terminal_mse_mean) << eps[j];
    }
  }
}

TEST(MonteCarlo, DivergentRolloutsAreCountedAndExcluded) {
  // Unstable scalar system with enough noise that some rollouts overflow.
  EnvironmentSpec spec;
  spec.name = "unstable";
  spec.n_x = spec.n_u = 1;
  spec.dt = 1;
  spec.horizon = 400;
  spec.control_lower = U(-1);
  spec.control_upper = U(1);
  spec.initial_state = StateVector::Zero(1);
  spec.goal_state = StateVector::Zero(1);
  LinearEnvironment env(spec, M1(6.0), M1(1.0));
  QuadraticCostModel cost(M1(0.0), M1(1.0), M1(0.0), StateVector::Zero(1));
  const auto nominal = RolloutOpenLoop(env, spec.initial_state,
                                       std::vector<ControlVector>(400, U(0)), cost);
  DecoupledPolicy policy{"unstable", nominal, std::vector<Matrix>(400, M1(0.0)), cost};
  const auto stats = MonteCarloEval(env, policy, NoiseModel{0.5, NoiseChannel::kState, 1},
                                    cost, 20);
  EXPECT_EQ(stats.divergences, 20);
  EXPECT_TRUE(std::isnan(stats.cost_mean));
}

TEST(PowerLawFit, ExactSquareLaw) {
  const std::vector<double> eps = {0.01, 0.02, 0.04, 0.08};
  std::vector<double> y;
  for (double e : eps) y.push_back(3.7 * e * e);
  const ScalingFit fit = FitPowerLaw(eps, y);
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(std::exp(fit.intercept), 3.7, 1e-10);
}

TEST(PowerLawFit, DropsNonPositiveAndNeedsFourPoints) {
  const std::vector<double> eps = {0.0, 0.01, 0.02, 0.04, 0.08};
  const std::vector<double> y = {0.0, 1e-4, 4e-4, 16e-4, 64e-4};
  const ScalingFit fit = FitPowerLaw(eps, y);
  EXPECT_EQ(fit.dropped, 1);
  EXPECT_EQ(fit.epsilons.size(), 4u);
  const std::vector<double> y2 = {1.0, 1e-4, -4e-4, 16e-4, 64e-4};
  EXPECT_THROW(FitPowerLaw(eps, y2), FitFailure);
}

TEST(PowerLawFit, RSquaredInUnitInterval) {
  const std::vector<double> eps = {0.01, 0.02, 0.04, 0.08, 0.16};
  const std::vector<double> y = {3.0, 1.0, 4.0, 1.0, 5.0};
  const ScalingFit fit = FitPowerLaw(eps, y);
  EXPECT_GE(fit.r_squared, 0.0);
  EXPECT_LE(fit.r_squared, 1.0);
}

TEST(VarianceScalingFit, SkipsSweepEntriesWithDivergences) {
  std::vector<RolloutStats> sweep(5);
  const double eps[] = {0.01, 0.02, 0.04, 0.08, 0.16};
  for (int i = 0; i < 5; ++i) {
    sweep[i].epsilon = eps[i];
    sweep[i].cost_var = eps[i] * eps[i];
    sweep[i].cost_mean = 1.0 + eps[i] * eps[i];
    sweep[i].nominal_cost = 1.0;
  }
  sweep[4].divergences = 1;
  sweep[4].cost_var = 1e9;
  const auto fit = VarianceScalingFit(sweep, ScalingResponse::kCostVariance);
  EXPECT_EQ(fit.dropped, 1);
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  const auto gap = VarianceScalingFit(sweep, ScalingResponse::kMeanCostGap);
  EXPECT_NEAR(gap.slope, 2.0, 1e-6);
}

TEST(VarianceScalingFit, LinearTestSlopeIsTwo) {
  const Problem p = MakeProblem("linear_test");
  const DecoupledPolicy policy = TrainedPolicy(p);
  const std::vector<double> eps = {0.01, 0.02, 0.04, 0.08};
  const auto sweep = EpsilonSweep(*p.env, policy, NoiseChannel::kState, eps, 10000, 9, p.cost);
  const auto fit = VarianceScalingFit(sweep, ScalingResponse::kCostVariance);
  EXPECT_GE(fit.slope, 1.9);
  EXPECT_LE(fit.slope, 2.1);
}

TEST(PairwiseSum, MatchesNaiveSumOnIntegers) {
  std::vector<double> v(1000);
  for (int i = 0; i < 1000; ++i) v[i] = i;
  EXPECT_EQ(PairwiseSum(v), 999.0 * 1000.0 / 2.0);
  EXPECT_EQ(PairwiseSum(std::vector<double>{}), 0.0);
}

}  // namespace
}  // namespace mfctrl

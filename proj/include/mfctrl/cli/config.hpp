#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfctrl/environment.hpp"
#include "mfctrl/errors.hpp"
#include "mfctrl/ilqr.hpp"
#include "mfctrl/noise.hpp"
#include "mfctrl/problems.hpp"

namespace mfctrl::cli {

/// Malformed config. what() starts with "<source>:<line>: " when the problem
/// can be pinned to a line.
class ConfigError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

/// Optional overrides of the diagonal weights; unset fields fall back to a
/// base set of weights.
struct WeightOverrides {
  std::optional<Eigen::VectorXd> q;
  std::optional<double> r;
  std::optional<double> q_terminal;

  DiagonalWeights Apply(DiagonalWeights base) const;
};

struct RunConfig {
  // [run]
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = "out";
  bool record_wall_time = false;
  std::string trajectory;  // input for feedback; default <out_dir>/trajectory.txt
  std::string policy;      // input for eval/sweep; default <out_dir>/policy.txt

  // [env]
  std::string env = "pendulum";
  int linear_horizon = 30;
  PendulumParams pendulum;
  CartPoleParams cartpole;

  // [cost], [feedback]
  WeightOverrides cost;
  WeightOverrides feedback;  // unset fields reuse the effective cost weights

  // [optimizer], [estimator]
  OptimizerConfig optimizer;

  // [noise]
  NoiseChannel channel = NoiseChannel::kControl;
  double epsilon = 0.05;
  int rollouts = 1000;
  std::vector<double> epsilons = {0.01, 0.02, 0.04, 0.08, 0.16};
  bool antithetic = true;
  bool open_loop_baseline = false;

  // [bench]
  std::vector<std::string> bench_envs = {"linear_test", "pendulum", "cartpole"};
  std::vector<int> bench_samples = {0};
  std::vector<double> bench_fd_steps = {1e-4};
  int bench_repeats = 5;

  void Validate() const;
};

/// Parses `[section]` / `key = value` text. '#' starts a comment. Lists are
/// comma separated. Unknown sections, unknown keys, duplicate keys and keys
/// that do not apply to the selected environment are errors.
RunConfig ParseConfig(std::istream& in, const std::string& source = "<config>");
RunConfig LoadConfig(const std::filesystem::path& path);

/// Every effective setting in the same syntax; ParseConfig(WriteConfig(c))
/// reproduces c.
void WriteConfig(std::ostream& out, const RunConfig& config);

EnvironmentPtr MakeEnvironment(const RunConfig& config);
DiagonalWeights CostWeights(const RunConfig& config);
DiagonalWeights FeedbackWeights(const RunConfig& config);

/// Independent sub-seeds for each consumer of the global seed.
std::uint64_t TrainSeed(const RunConfig& config);
std::uint64_t FeedbackSeed(const RunConfig& config);
std::uint64_t NoiseSeed(const RunConfig& config);
std::uint64_t BenchSeed(const RunConfig& config);

}  // namespace mfctrl::cli

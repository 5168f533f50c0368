#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mfctrl/cli/commands.hpp"
#include "mfctrl/cli/config.hpp"
#include "mfctrl/policy_io.hpp"
#include "mfctrl/problems.hpp"
#include "mfctrl/rollout.hpp"
#include "oracles.hpp"

namespace mfctrl::cli {
namespace {

namespace fs = std::filesystem;

using Row = std::map<std::string, std::string>;

std::vector<Row> ReadCsv(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    Row row;
    for (const auto& h : header) {
      std::getline(ss, cell, ',');
      row[h] = cell;
    }
    rows.push_back(row);
  }
  return rows;
}

double Num(const Row& row, const std::string& key) { return std::stod(row.at(key)); }

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CommandsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("mfctrl_cmd_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Writes the config with out_dir pointing into the test directory.
  std::string Config(const std::string& body, const std::string& name = "run.ini") {
    const fs::path path = dir_ / name;
    std::ofstream(path) << "[run]\nout_dir = " << (dir_ / "out").string() << '\n'
                        << body;
    return path.string();
  }

  int Run(const std::string& command, const std::string& config_path) {
    CommandOptions opts;
    opts.config_path = config_path;
    out_.str("");
    err_.str("");
    return RunCommand(command, opts, out_, err_);
  }

  fs::path Out(const std::string& file) const { return dir_ / "out" / file; }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CommandsTest, TrainWritesBestTrajectoryConsistentWithTrace) {
  const std::string cfg = Config("[env]\nname = pendulum\n");
  ASSERT_EQ(Run("train", cfg), kExitOk) << err_.str();
  const TrajectoryFile file = LoadTrajectory(Out("trajectory.txt"));
  EXPECT_EQ(file.env_name, "pendulum");
  const Problem p = MakeProblem("pendulum");
  const auto replay = RolloutOpenLoop(*p.env, p.env->spec().initial_state,
                                      file.trajectory.controls, p.cost);
  const auto trace = ReadCsv(Out("trace.csv"));
  ASSERT_FALSE(trace.empty());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : trace) best = std::min(best, Num(r, "cost"));
  EXPECT_NEAR(replay.cost, best, 1e-9 * best);
  EXPECT_NEAR(replay.cost, file.trajectory.cost, 1e-12 * best);
  EXPECT_NEAR(std::abs(file.trajectory.states.back()[0] - M_PI), 0.0, 0.1);
  for (const auto& r : trace) EXPECT_EQ(Num(r, "wall_time_s"), 0.0);
  EXPECT_TRUE(fs::exists(Out("config_train.ini")));
  EXPECT_NE(out_.str().find("final cost"), std::string::npos);
}

TEST_F(CommandsTest, TrainLinearMatchesBatchOracle) {
  const std::string cfg = Config("[env]\nname = linear_test\n");
  ASSERT_EQ(Run("train", cfg), kExitOk) << err_.str();
  const TrajectoryFile file = LoadTrajectory(Out("trajectory.txt"));
  const auto env = MakeLinearTest();
  const auto cost = DefaultWeights("linear_test").ToCost(env->spec());
  const auto lq = oracle::SolveBatchLq(env->a(), env->b(), cost.state_weight(0),
                                       cost.control_weight(0), cost.terminal_weight(),
                                       env->spec().initial_state, env->spec().horizon);
  EXPECT_NEAR(file.trajectory.cost, lq.cost, 1e-8);
  EXPECT_NE(out_.str().find("riccati cost"), std::string::npos);
}

TEST_F(CommandsTest, ZeroIterationsKeepsInitialRollout) {
  const std::string cfg = Config("[env]\nname = linear_test\n[optimizer]\nmax_iters = 0\n");
  ASSERT_EQ(Run("train", cfg), kExitOk) << err_.str();
  const TrajectoryFile file = LoadTrajectory(Out("trajectory.txt"));
  for (const auto& u : file.trajectory.controls) EXPECT_EQ(u[0], 0.0);
  EXPECT_EQ(ReadCsv(Out("trace.csv")).size(), 0u);
}

TEST_F(CommandsTest, FeedbackMatchesRiccatiOnLinearSystem) {
  const std::string cfg = Config("[env]\nname = linear_test\n");
  ASSERT_EQ(Run("train", cfg), kExitOk) << err_.str();
  ASSERT_EQ(Run("feedback", cfg), kExitOk) << err_.str();
  const DecoupledPolicy policy = LoadPolicy(Out("policy.txt"));
  const auto env = MakeLinearTest();
  const auto w = DefaultWeights("linear_test").ToCost(env->spec());
  const int N = env->spec().horizon;
  const auto ref = oracle::Riccati(std::vector<Eigen::MatrixXd>(N, env->a()),
                                   std::vector<Eigen::MatrixXd>(N, env->b()),
                                   w.state_weight(0), w.control_weight(0),
                                   w.terminal_weight());
  ASSERT_EQ(policy.gains.size(), static_cast<std::size_t>(N));
  for (int t = 0; t < N; ++t) {
    EXPECT_LE((policy.gains[t] - ref.K[t]).cwiseAbs().maxCoeff(), 1e-6) << t;
  }
  // Policy file round-trip is bit-exact.
  std::ostringstream a, b;
  WritePolicy(a, policy);
  std::istringstream in(a.str());
  WritePolicy(b, ReadPolicy(in));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str(), Slurp(Out("policy.txt")));
}

TEST_F(CommandsTest, FeedbackWithoutTrajectoryIsInputError) {
  const std::string cfg = Config("[env]\nname = pendulum\n");
  EXPECT_EQ(Run("feedback", cfg), kExitConfig);
  EXPECT_FALSE(err_.str().empty());
}

TEST_F(CommandsTest, PolicyForOtherEnvironmentIsRejected) {
  ASSERT_EQ(Run("train", Config("[env]\nname = linear_test\n")), kExitOk);
  ASSERT_EQ(Run("feedback", Config("[env]\nname = linear_test\n")), kExitOk);
  EXPECT_EQ(Run("eval", Config("[env]\nname = pendulum\n", "other.ini")), kExitConfig);
  EXPECT_NE(err_.str().find("linear_test"), std::string::npos);
}

TEST_F(CommandsTest, EvalAtZeroNoiseReproducesNominal) {
  const std::string cfg =
      Config("[env]\nname = pendulum\n[noise]\nepsilon = 0\nrollouts = 16\n");
  ASSERT_EQ(Run("train", cfg), kExitOk) << err_.str();
  ASSERT_EQ(Run("feedback", cfg), kExitOk) << err_.str();
  ASSERT_EQ(Run("eval", cfg), kExitOk) << err_.str();
  const auto rows = ReadCsv(Out("eval.csv"));
  ASSERT_EQ(rows.size(), 1u);
  const TrajectoryFile file = LoadTrajectory(Out("trajectory.txt"));
  EXPECT_EQ(Num(rows[0], "cost_mean"), file.trajectory.cost);
  EXPECT_EQ(Num(rows[0], "cost_var"), 0.0);
  EXPECT_EQ(rows[0].at("channel"), "control");
}

TEST_F(CommandsTest, SweepRowsAndSlopes) {
  const std::string cfg = Config(
      "[env]\nname = pendulum\n"
      "[noise]\nrollouts = 2000\nepsilons = 0.01, 0.02, 0.04, 0.08\n"
      "open_loop_baseline = true\n");
  ASSERT_EQ(Run("train", cfg), kExitOk) << err_.str();
  ASSERT_EQ(Run("feedback", cfg), kExitOk) << err_.str();
  ASSERT_EQ(Run("sweep", cfg), kExitOk) << err_.str();
  EXPECT_EQ(ReadCsv(Out("sweep.csv")).size(), 4u);
  EXPECT_EQ(ReadCsv(Out("sweep_open_loop.csv")).size(), 4u);
  const auto fit = ReadCsv(Out("fit.csv"));
  ASSERT_EQ(fit.size(), 2u);
  EXPECT_EQ(fit[0].at("response"), "cost_var");
  EXPECT_GE(Num(fit[0], "slope"), 1.7);
  EXPECT_LE(Num(fit[0], "slope"), 2.3);
}

TEST_F(CommandsTest, JacobianBenchCountsAndAccuracy) {
  const std::string cfg = Config("[bench]\nrepeats = 1\n");
  ASSERT_EQ(Run("jacobian-bench", cfg), kExitOk) << err_.str();
  const auto rows = ReadCsv(Out("bench.csv"));
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& r : rows) {
    const Problem p = MakeProblem(r.at("env"));
    const int nx = p.env->state_dim(), nu = p.env->control_dim();
    if (r.at("method") == "lls_cd") {
      const int ns = std::stoi(r.at("parameter"));
      EXPECT_EQ(Num(r, "eval_count"), 2 * ns);
      EXPECT_GE(ns, nx + nu);
    } else {
      EXPECT_EQ(Num(r, "eval_count"), 2 * (nx + nu));
    }
    if (r.at("env") == "pendulum" && r.at("method") == "lls_cd") {
      EXPECT_LE(Num(r, "max_abs_error_vs_oracle"), 1e-4);
    }
  }
}

TEST_F(CommandsTest, MalformedConfigIsLineAnchored) {
  const std::string cfg = Config("[noise]\nepsilon = 0.1\nepsilonz = 0.2\n");
  EXPECT_EQ(Run("train", cfg), kExitConfig);
  EXPECT_NE(err_.str().find("run.ini:5:"), std::string::npos) << err_.str();
}

TEST_F(CommandsTest, UnknownCommand) {
  EXPECT_EQ(Run("fly", Config("")), kExitConfig);
}

// A time step so large that every perturbed step overflows: the Jacobian
// estimates are non-finite, the backward pass never succeeds and the
// regularizer runs out.
TEST_F(CommandsTest, RegularizationExhaustionIsNumericalExit) {
  const std::string cfg = Config("[env]\nname = pendulum\ndt = 1e100\n");
  EXPECT_EQ(Run("train", cfg), kExitNumerical) << err_.str();
  EXPECT_NE(err_.str().find("regularization"), std::string::npos) << err_.str();
}

TEST_F(CommandsTest, OverridesTakePrecedence) {
  CommandOptions opts;
  opts.config_path = Config("");
  opts.seed = 77;
  opts.out_dir = (dir_ / "elsewhere").string();
  const RunConfig c = ResolveConfig(opts);
  EXPECT_EQ(c.seed, 77u);
  EXPECT_EQ(c.out_dir, (dir_ / "elsewhere").string());
}

}  // namespace
}  // namespace mfctrl::cli

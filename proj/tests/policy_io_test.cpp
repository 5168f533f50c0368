#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "mfctrl/errors.hpp"
#include "mfctrl/policy_io.hpp"
#include "mfctrl/problems.hpp"
#include "mfctrl/rollout.hpp"

namespace mfctrl {
namespace {

ControlVector U(double v) { return ControlVector::Constant(1, v); }

DecoupledPolicy SamplePolicy() {
  const Problem p = MakeProblem("cartpole");
  std::vector<ControlVector> us;
  for (int t = 0; t < 30; ++t) us.push_back(U(std::sin(1.7 * t) * 9.3));
  const auto traj = RolloutOpenLoop(*p.env, p.env->spec().initial_state, us, p.cost);
  EstimatorConfig est;
  est.seed = 5;
  return BuildPolicy(*p.env, traj, est, p.cost);
}

TEST(FormatDouble, RoundTripsExactly) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 10000; ++i) {
    std::uint64_t b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    EXPECT_EQ(ParseDouble(FormatDouble(v)), v);
  }
  EXPECT_EQ(FormatDouble(0.1), "0.1");
  EXPECT_EQ(ParseDouble("-0"), 0.0);
  EXPECT_TRUE(std::signbit(ParseDouble("-0")));
}

TEST(ParseDouble, RejectsGarbage) {
  EXPECT_THROW(ParseDouble("1.0x"), ContractViolation);
  EXPECT_THROW(ParseDouble(""), ContractViolation);
  EXPECT_THROW(ParseDouble("abc"), ContractViolation);
}

TEST(PolicyFile, RoundTripIsBitExact) {
  const DecoupledPolicy policy = SamplePolicy();
  std::stringstream ss;
  WritePolicy(ss, policy);
  const std::string first = ss.str();
  const DecoupledPolicy back = ReadPolicy(ss);
  EXPECT_EQ(back.env_name, policy.env_name);
  EXPECT_EQ(back.nominal.states, policy.nominal.states);
  EXPECT_EQ(back.nominal.controls, policy.nominal.controls);
  EXPECT_EQ(back.nominal.cost, policy.nominal.cost);
  ASSERT_EQ(back.gains.size(), policy.gains.size());
  for (std::size_t t = 0; t < back.gains.size(); ++t) EXPECT_EQ(back.gains[t], policy.gains[t]);
  EXPECT_EQ(back.lqr_weights.terminal_weight(), policy.lqr_weights.terminal_weight());
  EXPECT_EQ(back.lqr_weights.goal(), policy.lqr_weights.goal());
  std::stringstream again;
  WritePolicy(again, back);
  EXPECT_EQ(again.str(), first);
}

TEST(TrajectoryFile, RoundTripIsBitExact) {
  const DecoupledPolicy policy = SamplePolicy();
  std::stringstream ss;
  WriteTrajectory(ss, "cartpole", policy.nominal);
  const TrajectoryFile back = ReadTrajectory(ss);
  EXPECT_EQ(back.env_name, "cartpole");
  EXPECT_EQ(back.trajectory.states, policy.nominal.states);
  EXPECT_EQ(back.trajectory.controls, policy.nominal.controls);
  EXPECT_EQ(back.trajectory.cost, policy.nominal.cost);
}

TEST(PolicyFile, ErrorsCarryLineNumbers) {
  std::stringstream good;
  WritePolicy(good, SamplePolicy());
  std::string text = good.str();
  // Corrupt a number on the first state row (line 8).
  const auto pos = text.find("states\n") + 7;
  text.replace(pos, 1, "z");
  std::stringstream bad(text);
  try {
    ReadPolicy(bad);
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("line 8"), std::string::npos) << e.what();
  }
}

TEST(PolicyFile, RejectsWrongKindAndTruncation) {
  std::stringstream traj;
  WriteTrajectory(traj, "cartpole", SamplePolicy().nominal);
  EXPECT_THROW(ReadPolicy(traj), ContractViolation);
  std::stringstream good;
  WritePolicy(good, SamplePolicy());
  std::stringstream cut(good.str().substr(0, good.str().size() / 2));
  EXPECT_THROW(ReadPolicy(cut), ContractViolation);
  std::stringstream weights(std::string("format mfctrl-policy 1\nenv x\nhorizon 1\nn_x 1\nn_u 1\n"
                                        "cost 0\nstates\n0\n0\ncontrols\n0\ngains\n0\n"
                                        "weights a 1\n"));
  EXPECT_THROW(ReadPolicy(weights), ContractViolation);
}

TEST(PolicyFile, MissingFileIsAContractViolation) {
  EXPECT_THROW(LoadPolicy("/nonexistent/policy.txt"), ContractViolation);
  EXPECT_THROW(LoadTrajectory("/nonexistent/trajectory.txt"), ContractViolation);
}

}  // namespace
}  // namespace mfctrl

#include "mfctrl/noise.hpp"

#include <cmath>
#include <random>
#include <string>

#include "mfctrl/errors.hpp"
#include "mfctrl/rollout.hpp"

namespace mfctrl {

std::string_view ToString(NoiseChannel channel) {
  return channel == NoiseChannel::kState ? "state" : "control";
}

NoiseChannel ParseNoiseChannel(std::string_view text) {
  if (text == "state") return NoiseChannel::kState;
  if (text == "control") return NoiseChannel::kControl;
  throw ContractViolation("unknown noise channel '" + std::string(text) +
                          "' (expected state or control)");
}

void NoiseModel::Validate() const {
  if (!(epsilon >= 0.0) || !(epsilon < 1.0)) {
    throw ContractViolation("noise: epsilon must lie in [0, 1), got " +
                            std::to_string(epsilon));
  }
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t rollout_id, int dim,
                         int horizon, bool negated)
    : draws_(dim, horizon) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rollout_id),
                    static_cast<std::uint32_t>(rollout_id >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < horizon; ++t) {
    for (int i = 0; i < dim; ++i) {
      draws_(i, t) = normal(rng);
    }
  }
  if (negated) draws_ = -draws_;
}

Eigen::VectorXd NoiseStream::omega(int t) const {
  if (t < 0 || t >= horizon()) {
    throw ContractViolation("noise stream: t=" + std::to_string(t) +
                            " outside horizon " + std::to_string(horizon()));
  }
  return draws_.col(t);
}

int NoiseDim(const Environment& env, NoiseChannel channel) {
  return channel == NoiseChannel::kState ? env.state_dim() : env.control_dim();
}

StateVector StepNoisy(const Environment& env, const StateVector& x,
                      const ControlVector& u, const NoiseModel& noise,
                      const NoiseStream& stream, int t) {
  if (stream.dim() != NoiseDim(env, noise.channel)) {
    throw ContractViolation("noise stream dimension does not match channel");
  }
  if (noise.epsilon == 0.0) return env.Step(x, u);
  if (noise.channel == NoiseChannel::kState) {
    return env.Step(x, u) + noise.epsilon * stream.omega(t);
  }
  const ControlVector perturbed =
      u + noise.epsilon *
              env.ControlHalfRange().cwiseProduct(stream.omega(t));
  return env.Step(x, perturbed);
}

// ---------------------------------------------------------------------------

namespace {
std::uint64_t SplitMix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return SplitMix64(SplitMix64(SplitMix64(seed) ^ a) ^ b);
}

NominalTrajectory RolloutOpenLoop(const Environment& env, const StateVector& x0,
                                  const std::vector<ControlVector>& controls,
                                  const QuadraticCostModel& cost) {
  NominalTrajectory traj;
  traj.states.reserve(controls.size() + 1);
  traj.controls.reserve(controls.size());
  traj.states.push_back(x0);
  for (std::size_t t = 0; t < controls.size(); ++t) {
    traj.controls.push_back(env.Clamp(controls[t]));
    StateVector next = env.Step(traj.states.back(), traj.controls.back());
    if (!next.allFinite()) {
      throw NumericalFailure(env.name() + ": open-loop rollout diverged at t=" +
                             std::to_string(t));
    }
    traj.states.push_back(std::move(next));
  }
  traj.cost = TotalCost(traj.states, traj.controls, cost);
  return traj;
}

RealizedRollout RolloutClosedLoop(const Environment& env,
                                  const NominalTrajectory& nominal,
                                  const std::vector<Matrix>& gains,
                                  const NoiseModel& noise,
                                  const NoiseStream& stream,
                                  const QuadraticCostModel& cost) {
  const int horizon = nominal.horizon();
  if (static_cast<int>(gains.size()) != horizon) {
    throw ContractViolation("closed-loop rollout: gain count " +
                            std::to_string(gains.size()) +
                            " does not match horizon " + std::to_string(horizon));
  }
  RealizedRollout out;
  out.states.reserve(horizon + 1);
  out.controls.reserve(horizon);
  out.states.push_back(nominal.states.front());
  for (int t = 0; t < horizon; ++t) {
    const StateVector& x = out.states.back();
    ControlVector u = env.Clamp(nominal.controls[t] +
                                gains[t] * (x - nominal.states[t]));
    StateVector next = StepNoisy(env, x, u, noise, stream, t);
    out.controls.push_back(std::move(u));
    if (!next.allFinite()) {
      out.diverged = true;
      return out;
    }
    out.states.push_back(std::move(next));
  }
  out.cost = TotalCost(out.states, out.controls, cost);
  if (!std::isfinite(out.cost)) out.diverged = true;
  return out;
}

}  // namespace mfctrl

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "mfctrl/environment.hpp"

namespace mfctrl {

enum class NoiseChannel { kState, kControl };

std::string_view ToString(NoiseChannel channel);
NoiseChannel ParseNoiseChannel(std::string_view text);

/// Scaled white Gaussian process noise. On the state channel the realized
/// transition is f(x, u) + eps * w; on the control channel it is
/// f(x, clamp(u + eps * s * w)) with s the control half-range.
struct NoiseModel {
  double epsilon = 0.0;
  NoiseChannel channel = NoiseChannel::kState;
  std::uint64_t seed = 0;

  void Validate() const;
};

/// Standard-normal draws for one rollout, keyed by (seed, rollout id).
/// Draws are fixed up front so omega(t) is random access and identical no
/// matter which thread or in which order rollouts execute. A negated stream
/// returns -omega(t) (antithetic partner).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t rollout_id, int dim,
              int horizon, bool negated = false);

  Eigen::VectorXd omega(int t) const;
  int dim() const { return static_cast<int>(draws_.rows()); }
  int horizon() const { return static_cast<int>(draws_.cols()); }

 private:
  Eigen::MatrixXd draws_;
};

/// Dimension of omega for a channel in this environment.
int NoiseDim(const Environment& env, NoiseChannel channel);

StateVector StepNoisy(const Environment& env, const StateVector& x,
                      const ControlVector& u, const NoiseModel& noise,
                      const NoiseStream& stream, int t);

}  // namespace mfctrl

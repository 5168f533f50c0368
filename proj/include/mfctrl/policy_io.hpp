#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mfctrl/lqr.hpp"

namespace mfctrl {

// Line-oriented text formats. Every real number is written as the shortest
// decimal that parses back to the same double, so a write/read cycle is
// bit-exact.
//
//   format mfctrl-policy 1        (or mfctrl-trajectory 1)
//   env <name>
//   horizon <N>
//   n_x <n>
//   n_u <m>
//   cost <J>
//   states      followed by N+1 rows of n_x numbers
//   controls    followed by N rows of n_u numbers
//   gains       N rows of n_u*n_x numbers, row-major     (policy only)
//   weights <count_Q> <count_R>                          (policy only)
//               count_Q rows of Q_t, count_R rows of R_t, one row Q_N,
//               one row goal, all row-major
//   end

inline constexpr int kFileFormatVersion = 1;

struct TrajectoryFile {
  std::string env_name;
  NominalTrajectory trajectory;
};

void WriteTrajectory(std::ostream& out, const std::string& env_name,
                     const NominalTrajectory& traj);
TrajectoryFile ReadTrajectory(std::istream& in);

void WritePolicy(std::ostream& out, const DecoupledPolicy& policy);
DecoupledPolicy ReadPolicy(std::istream& in);

void SaveTrajectory(const std::filesystem::path& path,
                    const std::string& env_name, const NominalTrajectory& traj);
TrajectoryFile LoadTrajectory(const std::filesystem::path& path);
void SavePolicy(const std::filesystem::path& path, const DecoupledPolicy& policy);
DecoupledPolicy LoadPolicy(const std::filesystem::path& path);

/// Shortest round-trip decimal for a double.
std::string FormatDouble(double value);
/// Strict parse of a full token; throws ContractViolation.
double ParseDouble(std::string_view token);

}  // namespace mfctrl

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "mfctrl/cli/config.hpp"

namespace mfctrl::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,     // usage, config or input-file error
  kExitNumerical = 2,  // regularization exhausted, synthesis failure, ...
};

/// Command-line values that take precedence over the config file.
struct CommandOptions {
  std::string config_path;  // empty: built-in defaults
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> trajectory;
  std::optional<std::string> policy;
};

/// Loads the config, applies overrides and validates.
RunConfig ResolveConfig(const CommandOptions& options);

// Each command writes its files under config.out_dir, including an echo of
// the effective config, and prints a short summary to `out`. Errors are
// thrown; RunCommand maps them to exit codes.
void CmdTrain(const RunConfig& config, std::ostream& out);
void CmdFeedback(const RunConfig& config, std::ostream& out);
void CmdEval(const RunConfig& config, std::ostream& out);
void CmdSweep(const RunConfig& config, std::ostream& out);
void CmdJacobianBench(const RunConfig& config, std::ostream& out);

/// Dispatches by name ("train", "feedback", "eval", "sweep",
/// "jacobian-bench") and returns the exit code. Messages go to `err`.
int RunCommand(std::string_view command, const CommandOptions& options,
               std::ostream& out, std::ostream& err);

}  // namespace mfctrl::cli

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mfctrl/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Model-free ILQR with LQR feedback and Monte-Carlo evaluation"};
  app.require_subcommand(1, 1);

  mfctrl::cli::CommandOptions options;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string trajectory;
  std::string policy;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", options.config_path, "Config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides run.out_dir)");
    sub->add_option("--seed", seed, "Global seed (overrides run.seed)");
  };
  CLI::App* train = app.add_subcommand("train", "Optimize the nominal trajectory");
  CLI::App* feedback =
      app.add_subcommand("feedback", "Fit LQR feedback around a trajectory");
  CLI::App* eval = app.add_subcommand("eval", "Monte-Carlo evaluation at one epsilon");
  CLI::App* sweep = app.add_subcommand("sweep", "Epsilon sweep and power-law fits");
  CLI::App* bench =
      app.add_subcommand("jacobian-bench", "Compare LLS-CD and finite differences");
  for (auto* sub : {train, feedback, eval, sweep, bench}) add_common(sub);
  feedback->add_option("--trajectory", trajectory, "Trajectory file");
  for (auto* sub : {eval, sweep}) sub->add_option("--policy", policy, "Policy file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mfctrl::cli::kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--out")) options.out_dir = out_dir;
  if (chosen->count("--seed")) options.seed = seed;
  if (chosen->get_option_no_throw("--trajectory") && chosen->count("--trajectory")) {
    options.trajectory = trajectory;
  }
  if (chosen->get_option_no_throw("--policy") && chosen->count("--policy")) {
    options.policy = policy;
  }
  return mfctrl::cli::RunCommand(chosen->get_name(), options, std::cout, std::cerr);
}

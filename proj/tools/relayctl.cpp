// Command-line front end: solves relay transmission-control models from
// flat config files, runs the structural checkers, extracts thresholds,
// simulates induced chains and drives suites of experiment specs.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "ncrelay/experiment.hpp"
#include "ncrelay/policy_tools.hpp"

using namespace ncrelay;

namespace {

int report_result(const ExperimentResult& result, bool verbose_checks) {
  if (result.exit_code == 2) {
    std::cerr << result.name << ": error: " << result.error << "\n";
    return 2;
  }
  std::cout << result.name << ": solved in " << result.solver_iterations
            << " sweeps (residual " << result.solver_residual << ")\n";
  for (const CheckOutcome& outcome : result.checks) {
    std::cout << "  " << outcome.key << ": " << (outcome.pass ? "PASS" : "FAIL");
    if (outcome.expected)
      std::cout << " (expected " << (*outcome.expected ? "PASS" : "FAIL") << ")"
                << (outcome.matches_expectation ? "" : " [MISMATCH]");
    std::cout << "\n";
    if (verbose_checks && !outcome.pass) std::cout << outcome.report_text;
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transmission-control MDP solver and policy-structure checker"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", spec_dir;
  bool assert_mode = false;
  bool export_kernel = false;
  int threads = 1;
  long horizon = -1;
  int replications = -1;
  long long seed = -1;
  std::string initial_state;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config)
      cmd->add_option("--config", config_path, "experiment spec file")->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--threads", threads, "worker threads");
    cmd->add_option("--seed", seed, "simulation seed override");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve the model and export policy CSVs");
  add_common(solve, true);
  solve->add_flag("--export-kernel", export_kernel,
                  "also write the transition kernel and cost table CSVs");

  CLI::App* check = app.add_subcommand("check", "run the spec's structural checks");
  add_common(check, true);
  check->add_flag("--assert", assert_mode, "exit 1 when an expected verdict mismatches");

  CLI::App* thresholds =
      app.add_subcommand("thresholds", "solve and export threshold surfaces");
  add_common(thresholds, true);

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo over the induced chain");
  add_common(simulate, true);
  simulate->add_option("--horizon", horizon, "epochs per replication");
  simulate->add_option("--reps", replications, "number of replications");
  simulate->add_option("--initial-state", initial_state, "b1,b2,g1,g2");

  CLI::App* suite = app.add_subcommand("suite", "run every *.cfg spec in a directory");
  suite->add_option("--dir", spec_dir, "directory of spec files")->required();
  suite->add_option("--out", out_dir, "output directory");
  suite->add_option("--threads", threads, "worker threads");
  suite->add_option("--seed", seed, "simulation seed override");
  suite->add_flag("--assert", assert_mode, "exit nonzero when any expected verdict mismatches");

  CLI11_PARSE(app, argc, argv);

  RunOptions options;
  options.out_dir = out_dir;
  options.assert_mode = assert_mode;
  options.threads = threads;
  options.export_kernel = export_kernel;
  if (seed >= 0) options.seed_override = static_cast<uint64_t>(seed);

  if (suite->parsed()) {
    const SuiteResult result = run_suite(spec_dir, options);
    std::cout << result.table;
    return result.exit_code;
  }

  try {
    ExperimentSpec spec = load_experiment(config_path);
    if (simulate->parsed()) {
      spec.sim.enabled = true;
      if (horizon > 0) spec.sim.horizon = horizon;
      if (replications > 0) spec.sim.replications = replications;
      if (!initial_state.empty()) spec.sim.initial = parse_state_string(initial_state);
    }
    const ExperimentResult result = run_experiment(spec, options);
    return report_result(result, check->parsed() || assert_mode);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

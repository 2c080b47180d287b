#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ncrelay/config.hpp"
#include "ncrelay/model.hpp"
#include "ncrelay/policy_tools.hpp"
#include "ncrelay/solver.hpp"
#include "ncrelay/structure.hpp"

namespace ncrelay {

// One verification request from an experiment spec. The key grammar:
//   check.cond.queue_monotone         sufficient-condition predicates
//   check.cond.joint_queue_monotone
//   check.cond.channel_monotone
//   check.monotone.<comp>.<axes>      comp in {a1, a2, a1a2};
//                                     axes: '_'-joined from {b1,b2,g1,g2}
//   check.threshold.<1|2>.<axes>      threshold surface nonincreasing
//   check.game                        coordination equilibria at interior states
//   check.lnatural_q.<1|2>            Q slices discretely convex in (b_i, a_i)
//   check.multimodular_q.<1|2>        the transformed slices multimodular
//   check.submodular_q.<1|2>          Q submodular over (b_i, g_-i, a_i)
// Values: pass | fail | report. pass/fail are asserted in assert mode;
// report entries are executed and recorded only.
struct CheckRequest {
  std::string key;
  std::optional<bool> expect;  // empty for report-only entries
};

struct SimSettings {
  bool enabled = false;
  long horizon = 1000;
  int replications = 200;
  uint64_t seed = 1;
  State initial{0, 0, 1, 1};
  double burn_in_fraction = 0.1;
};

struct ExperimentSpec {
  std::string name;
  ModelParams params;
  SolveOptions solver;
  std::vector<CheckRequest> checks;
  SimSettings sim;
};

ExperimentSpec experiment_from_config(const KeyValues& kv);
ExperimentSpec load_experiment(const std::string& path);

// Parses a "b1,b2,g1,g2" tuple, as used by initial_state keys and flags.
State parse_state_string(const std::string& text);

struct CheckOutcome {
  std::string key;
  bool pass = false;
  std::optional<bool> expected;
  bool matches_expectation = true;  // true for report-only entries
  std::string report_text;
};

struct RunOptions {
  std::string out_dir;         // artifacts land here; created if missing
  bool assert_mode = false;    // expectation mismatches drive the exit code
  std::optional<uint64_t> seed_override;
  int threads = 1;
  bool export_kernel = false;  // also write kernel.csv and costs.csv
};

struct ExperimentResult {
  // 0 = ok, 1 = assert-mode expectation failed, 2 = configuration error.
  int exit_code = 0;
  std::string name;
  long solver_iterations = 0;
  double solver_residual = 0.0;
  std::vector<CheckOutcome> checks;
  std::vector<std::string> files;  // artifact paths written
  std::string error;               // set when exit_code == 2
};

// Builds the model, solves it, runs the requested checks and writes the
// artifact set (policy.csv, thresholds.csv, channel CSVs, checks.txt,
// iterations.log, metrics.csv when simulation is enabled, and a
// manifest.json with a parameter echo and a content hash per file).
// Deterministic: the same spec and seed produce byte-identical CSVs.
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options);

// Convenience wrapper that loads the spec first; load errors become
// exit_code 2 instead of exceptions.
ExperimentResult run_experiment_file(const std::string& config_path,
                                     const RunOptions& options);

struct SuiteResult {
  int exit_code = 0;  // worst exit code across specs; load errors win
  std::vector<ExperimentResult> experiments;
  std::string table;  // aggregate text table, one line per spec
};

// Runs every *.cfg in the directory (sorted by name), each into its own
// subdirectory of out_dir. A malformed spec is reported and does not stop
// the others.
SuiteResult run_suite(const std::string& spec_dir, const RunOptions& options);

}  // namespace ncrelay

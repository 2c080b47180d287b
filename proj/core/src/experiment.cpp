#include "ncrelay/experiment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ncrelay/csv.hpp"

namespace ncrelay {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  parts.push_back(current);
  return parts;
}

std::optional<bool> parse_expectation(const std::string& key, const std::string& value) {
  if (value == "pass") return true;
  if (value == "fail") return false;
  if (value == "report") return std::nullopt;
  throw std::invalid_argument("config key '" + key +
                              "': expected pass, fail or report, got '" + value + "'");
}

int parse_axis(const std::string& key, const std::string& token) {
  if (token == "b1") return kAxisB1;
  if (token == "b2") return kAxisB2;
  if (token == "g1") return kAxisG1;
  if (token == "g2") return kAxisG2;
  throw std::invalid_argument("config key '" + key + "': unknown axis '" + token + "'");
}

std::vector<int> parse_axes(const std::string& key, const std::string& joined) {
  std::vector<int> axes;
  for (const auto& token : split(joined, '_')) axes.push_back(parse_axis(key, token));
  if (axes.empty()) throw std::invalid_argument("config key '" + key + "': no axes");
  return axes;
}

// Validates the key up front so malformed specs fail at load, not mid-run.
void validate_check_key(const std::string& key) {
  const auto parts = split(key, '.');
  if (parts.size() < 2 || parts[0] != "check")
    throw std::invalid_argument("bad check key '" + key + "'");
  const std::string& kind = parts[1];
  if (kind == "cond") {
    if (parts.size() != 3 ||
        (parts[2] != "queue_monotone" && parts[2] != "joint_queue_monotone" &&
         parts[2] != "channel_monotone"))
      throw std::invalid_argument("bad condition check '" + key + "'");
  } else if (kind == "monotone") {
    if (parts.size() != 4 || (parts[2] != "a1" && parts[2] != "a2" && parts[2] != "a1a2"))
      throw std::invalid_argument("bad monotonicity check '" + key + "'");
    parse_axes(key, parts[3]);
  } else if (kind == "threshold") {
    if (parts.size() != 4 || (parts[2] != "1" && parts[2] != "2"))
      throw std::invalid_argument("bad threshold check '" + key + "'");
    parse_axes(key, parts[3]);
  } else if (kind == "game") {
    if (parts.size() != 2) throw std::invalid_argument("bad game check '" + key + "'");
  } else if (kind == "lnatural_q" || kind == "multimodular_q" || kind == "submodular_q") {
    if (parts.size() != 3 || (parts[2] != "1" && parts[2] != "2"))
      throw std::invalid_argument("bad Q-structure check '" + key + "'");
  } else {
    throw std::invalid_argument("unknown check kind in '" + key + "'");
  }
}

}  // namespace

ExperimentSpec experiment_from_config(const KeyValues& kv) {
  ExperimentSpec spec;
  spec.name = get_string(kv, "name").value_or("experiment");
  spec.params = params_from_config(kv);
  spec.solver.tolerance = get_double(kv, "solver.tolerance", spec.solver.tolerance);
  spec.solver.max_iters = get_long(kv, "solver.max_iters", spec.solver.max_iters);
  for (const auto& [key, value] : kv) {
    if (key.rfind("check.", 0) != 0) continue;
    validate_check_key(key);
    spec.checks.push_back({key, parse_expectation(key, value)});
  }
  if (kv.count("sim.horizon") || kv.count("sim.replications") || kv.count("sim.seed")) {
    spec.sim.enabled = true;
    spec.sim.horizon = get_long(kv, "sim.horizon", spec.sim.horizon);
    spec.sim.replications =
        static_cast<int>(get_long(kv, "sim.replications", spec.sim.replications));
    spec.sim.seed = static_cast<uint64_t>(get_long(kv, "sim.seed", 1));
    spec.sim.burn_in_fraction = get_double(kv, "sim.burn_in", spec.sim.burn_in_fraction);
  }
  if (const auto initial = get_string(kv, "initial_state"))
    spec.sim.initial = parse_state_string(*initial);
  return spec;
}

State parse_state_string(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4)
    throw std::invalid_argument("initial_state must be 'b1,b2,g1,g2', got '" + text + "'");
  return State{std::stoi(parts[0]), std::stoi(parts[1]), std::stoi(parts[2]),
               std::stoi(parts[3])};
}

ExperimentSpec load_experiment(const std::string& path) {
  ExperimentSpec spec = experiment_from_config(load_flat_config(path));
  if (spec.name == "experiment") spec.name = fs::path(path).stem().string();
  return spec;
}

namespace {

CheckReport evaluate_check(const Model& model, const SolveResult& solve,
                           const ThresholdSurface& thresholds, const std::string& key) {
  const auto parts = split(key, '.');
  const std::string& kind = parts[1];
  if (kind == "cond") {
    SufficientCondition which = SufficientCondition::kQueueMonotone;
    if (parts[2] == "joint_queue_monotone") which = SufficientCondition::kJointQueueMonotone;
    if (parts[2] == "channel_monotone") which = SufficientCondition::kChannelMonotone;
    return check_sufficient_conditions(model.params(), model.channel1(), model.channel2(),
                                       which);
  }
  if (kind == "monotone") {
    std::vector<int> components;
    if (parts[2] == "a1" || parts[2] == "a1a2") components.push_back(0);
    if (parts[2] == "a2" || parts[2] == "a1a2") components.push_back(1);
    const std::vector<int> axes = parse_axes(key, parts[3]);
    return check_monotone_policy(model, solve.policy, components, axes);
  }
  if (kind == "threshold") {
    const int queue = parts[2] == "1" ? 1 : 2;
    const std::vector<int> axes = parse_axes(key, parts[3]);
    return check_threshold_nonincreasing(model, thresholds, queue, axes);
  }
  if (kind == "game") return check_coordination_equilibria(model, solve.q);
  const int queue = parts[2] == "1" ? 1 : 2;
  if (kind == "lnatural_q") return check_q_lnatural_queue_slices(model, solve.q, queue);
  if (kind == "multimodular_q")
    return check_q_multimodular_transformed_slices(model, solve.q, queue);
  return check_q_submodular_channel_slices(model, solve.q, queue);
}

void write_policy_csv(const std::string& path, const Model& model,
                      const SolveResult& solve) {
  std::ofstream out(path);
  out << "b1,b2,g1,g2,a1,a2,value\n";
  for (int xi = 0; xi < model.space().size(); ++xi) {
    const State s = model.space().state(xi);
    const Action a = solve.policy.at(xi);
    out << s.b1 << ',' << s.b2 << ',' << s.g1 << ',' << s.g2 << ',' << a.a1 << ','
        << a.a2 << ',' << format_double(solve.value[xi]) << '\n';
  }
}

void write_thresholds_csv(const std::string& path, const ThresholdSurface& surface) {
  std::ofstream out(path);
  out << "queue,b_other,g1,g2,threshold\n";
  for (int queue = 1; queue <= 2; ++queue)
    for (int b = 0; b < surface.other_levels(queue); ++b)
      for (int g1 = 1; g1 <= surface.k1(); ++g1)
        for (int g2 = 1; g2 <= surface.k2(); ++g2)
          out << queue << ',' << b << ',' << g1 << ',' << g2 << ','
              << surface.threshold(queue, b, g1, g2) << '\n';
}

void write_channel_csvs(const std::string& dir, const std::string& label,
                        const ChannelModel& ch, std::vector<std::string>& files) {
  const std::string states_path = dir + "/" + label + "_states.csv";
  {
    std::ofstream out(states_path);
    out << "g,lower_snr,stationary,error_prob\n";
    for (int g = 1; g <= ch.num_states(); ++g)
      out << g << ',' << format_double(ch.boundary(g)) << ','
          << format_double(ch.stationary(g)) << ',' << format_double(ch.error_prob(g))
          << '\n';
    out << (ch.num_states() + 1) << ",inf,0," << format_double(ch.error_prob(ch.num_states() + 1))
        << '\n';
  }
  files.push_back(states_path);
  const std::string trans_path = dir + "/" + label + "_transitions.csv";
  {
    std::ofstream out(trans_path);
    out << "g,g_next,prob\n";
    for (int g = 1; g <= ch.num_states(); ++g)
      for (int h = 1; h <= ch.num_states(); ++h)
        if (ch.transition(g, h) > 0.0)
          out << g << ',' << h << ',' << format_double(ch.transition(g, h)) << '\n';
  }
  files.push_back(trans_path);
}

void write_kernel_csv(const std::string& path, const Model& model) {
  std::ofstream out(path);
  out << "b1,b2,g1,g2,a1,a2,b1_next,b2_next,g1_next,g2_next,prob\n";
  for (int xi = 0; xi < model.space().size(); ++xi) {
    const State s = model.space().state(xi);
    for (int ai = 0; ai < kNumActions; ++ai) {
      const Action a = kActions[ai];
      for (const Transition& t : model.kernel().row(xi, ai)) {
        const State next = model.space().state(t.next);
        out << s.b1 << ',' << s.b2 << ',' << s.g1 << ',' << s.g2 << ',' << a.a1 << ','
            << a.a2 << ',' << next.b1 << ',' << next.b2 << ',' << next.g1 << ','
            << next.g2 << ',' << format_double(t.prob) << '\n';
      }
    }
  }
}

void write_costs_csv(const std::string& path, const Model& model) {
  std::ofstream out(path);
  out << "b1,b2,g1,g2,a1,a2,cost\n";
  for (int xi = 0; xi < model.space().size(); ++xi) {
    const State s = model.space().state(xi);
    for (int ai = 0; ai < kNumActions; ++ai) {
      const Action a = kActions[ai];
      out << s.b1 << ',' << s.b2 << ',' << s.g1 << ',' << s.g2 << ',' << a.a1 << ','
          << a.a2 << ',' << format_double(model.cost(xi, ai)) << '\n';
    }
  }
}

void write_metrics_csv(const std::string& path, const ChainMetrics& sim,
                       const ChainMetrics& exact) {
  std::ofstream out(path);
  out << "metric,simulated,stderr,exact\n";
  out << "discounted_cost," << format_double(sim.discounted_cost) << ','
      << format_double(sim.discounted_cost_se) << ','
      << format_double(exact.discounted_cost) << '\n';
  out << "truncation_bias_bound," << format_double(sim.truncation_bias_bound) << ",0,0\n";
  out << "avg_held_symbols," << format_double(sim.avg_held_symbols) << ",,"
      << format_double(exact.avg_held_symbols) << '\n';
  out << "avg_transmissions," << format_double(sim.avg_transmissions) << ",,"
      << format_double(exact.avg_transmissions) << '\n';
  out << "avg_coded_broadcasts," << format_double(sim.avg_coded_broadcasts) << ",,"
      << format_double(exact.avg_coded_broadcasts) << '\n';
  out << "avg_overflow_symbols," << format_double(sim.avg_overflow_symbols) << ",,"
      << format_double(exact.avg_overflow_symbols) << '\n';
  out << "avg_symbol_errors," << format_double(sim.avg_symbol_errors) << ",,"
      << format_double(exact.avg_symbol_errors) << '\n';
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  ExperimentResult result;
  result.name = spec.name;
  try {
    fs::create_directories(options.out_dir);
    const Model model = Model::build(spec.params);
    SolveOptions solver = spec.solver;
    solver.threads = options.threads;
    const SolveResult solve = value_iteration(model, solver);
    result.solver_iterations = solve.iterations;
    result.solver_residual = solve.final_residual;
    const ThresholdSurface thresholds = extract_thresholds(model, solve.policy);

    const std::string policy_path = options.out_dir + "/policy.csv";
    write_policy_csv(policy_path, model, solve);
    result.files.push_back(policy_path);

    const std::string thresholds_path = options.out_dir + "/thresholds.csv";
    write_thresholds_csv(thresholds_path, thresholds);
    result.files.push_back(thresholds_path);

    write_channel_csvs(options.out_dir, "channel1", model.channel1(), result.files);
    write_channel_csvs(options.out_dir, "channel2", model.channel2(), result.files);

    {
      const std::string log_path = options.out_dir + "/iterations.log";
      std::ofstream out(log_path);
      for (size_t i = 0; i < solve.residuals.size(); ++i)
        out << (i + 1) << ' ' << format_double(solve.residuals[i]) << '\n';
      result.files.push_back(log_path);
    }

    if (options.export_kernel) {
      const std::string kernel_path = options.out_dir + "/kernel.csv";
      write_kernel_csv(kernel_path, model);
      result.files.push_back(kernel_path);
      const std::string costs_path = options.out_dir + "/costs.csv";
      write_costs_csv(costs_path, model);
      result.files.push_back(costs_path);
    }

    std::ostringstream checks_text;
    for (const CheckRequest& request : spec.checks) {
      const CheckReport report = evaluate_check(model, solve, thresholds, request.key);
      CheckOutcome outcome;
      outcome.key = request.key;
      outcome.pass = report.pass;
      outcome.expected = request.expect;
      outcome.matches_expectation = !request.expect || *request.expect == report.pass;
      outcome.report_text = report.to_text();
      checks_text << request.key << ": " << (report.pass ? "PASS" : "FAIL");
      if (request.expect)
        checks_text << " (expected " << (*request.expect ? "PASS" : "FAIL") << ") "
                    << (outcome.matches_expectation ? "[ok]" : "[MISMATCH]");
      else
        checks_text << " (report only)";
      checks_text << '\n' << outcome.report_text;
      result.checks.push_back(std::move(outcome));
    }
    {
      const std::string checks_path = options.out_dir + "/checks.txt";
      std::ofstream out(checks_path);
      out << checks_text.str();
      result.files.push_back(checks_path);
    }

    if (spec.sim.enabled) {
      SimOptions sim_options;
      sim_options.horizon = spec.sim.horizon;
      sim_options.replications = spec.sim.replications;
      sim_options.seed = options.seed_override.value_or(spec.sim.seed);
      sim_options.initial = spec.sim.initial;
      sim_options.burn_in_fraction = spec.sim.burn_in_fraction;
      sim_options.threads = options.threads;
      const ChainMetrics sim = simulate_chain(model, solve.policy, sim_options);
      const ChainMetrics exact = stationary_metrics(model, solve.policy, spec.sim.initial);
      const std::string metrics_path = options.out_dir + "/metrics.csv";
      write_metrics_csv(metrics_path, sim, exact);
      result.files.push_back(metrics_path);
    }

    nlohmann::json manifest;
    manifest["name"] = spec.name;
    manifest["params"] = {
        {"L1", spec.params.L1},
        {"L2", spec.params.L2},
        {"p1", spec.params.p1},
        {"p2", spec.params.p2},
        {"lambda_hold", spec.params.lambda_hold},
        {"xi_overflow", spec.params.xi_overflow},
        {"tau_tx", spec.params.tau_tx},
        {"eta_err", spec.params.eta_err},
        {"beta", spec.params.beta},
        {"channel1",
         {{"K", spec.params.channel1.num_states},
          {"mean_snr", spec.params.channel1.mean_snr},
          {"doppler_symbol_product", spec.params.channel1.doppler_symbol_product}}},
        {"channel2",
         {{"K", spec.params.channel2.num_states},
          {"mean_snr", spec.params.channel2.mean_snr},
          {"doppler_symbol_product", spec.params.channel2.doppler_symbol_product}}},
    };
    manifest["solver"] = {{"iterations", solve.iterations},
                          {"final_residual", solve.final_residual},
                          {"tolerance", solver.tolerance}};
    if (spec.sim.enabled)
      manifest["seed"] = options.seed_override.value_or(spec.sim.seed);
    for (const CheckOutcome& outcome : result.checks) {
      manifest["checks"][outcome.key] = {
          {"verdict", outcome.pass ? "pass" : "fail"},
          {"expected", outcome.expected ? (*outcome.expected ? "pass" : "fail") : "report"},
          {"ok", outcome.matches_expectation}};
    }
    for (const std::string& file : result.files) {
      char hex[32];
      std::snprintf(hex, sizeof hex, "fnv1a64:%016llx",
                    static_cast<unsigned long long>(fnv1a64_file(file)));
      manifest["files"][fs::path(file).filename().string()] = hex;
    }
    const std::string manifest_path = options.out_dir + "/manifest.json";
    std::ofstream out(manifest_path);
    out << manifest.dump(2) << '\n';
    result.files.push_back(manifest_path);
  } catch (const std::exception& e) {
    result.exit_code = 2;
    result.error = e.what();
    return result;
  }

  if (options.assert_mode)
    for (const CheckOutcome& outcome : result.checks)
      if (!outcome.matches_expectation) result.exit_code = 1;
  return result;
}

ExperimentResult run_experiment_file(const std::string& config_path,
                                     const RunOptions& options) {
  ExperimentSpec spec;
  try {
    spec = load_experiment(config_path);
  } catch (const std::exception& e) {
    ExperimentResult result;
    result.name = fs::path(config_path).stem().string();
    result.exit_code = 2;
    result.error = e.what();
    return result;
  }
  return run_experiment(spec, options);
}

SuiteResult run_suite(const std::string& spec_dir, const RunOptions& options) {
  SuiteResult suite;
  std::vector<std::string> paths;
  if (!fs::is_directory(spec_dir)) {
    suite.exit_code = 2;
    suite.table = "not a directory: " + spec_dir + "\n";
    return suite;
  }
  for (const auto& entry : fs::directory_iterator(spec_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".cfg")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());

  std::ostringstream table;
  for (const std::string& path : paths) {
    RunOptions each = options;
    each.out_dir = options.out_dir + "/" + fs::path(path).stem().string();
    ExperimentResult result = run_experiment_file(path, each);
    table << result.name << ": ";
    if (result.exit_code == 2) {
      table << "ERROR (" << result.error << ")";
      suite.exit_code = 2;
    } else {
      int mismatches = 0;
      for (const CheckOutcome& outcome : result.checks)
        if (!outcome.matches_expectation) ++mismatches;
      table << result.checks.size() << " checks, " << mismatches << " mismatches";
      if (result.exit_code == 1 && suite.exit_code == 0) suite.exit_code = 1;
    }
    table << '\n';
    suite.experiments.push_back(std::move(result));
  }
  if (paths.empty()) table << "no specs found\n";
  suite.table = table.str();
  return suite;
}

}  // namespace ncrelay

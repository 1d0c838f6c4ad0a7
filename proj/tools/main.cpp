// gpushare: run, compare and sweep scheduling policies on a simulated GPU
// cluster; generate traces; check the pair-scheduling endpoint rule.

#include <charconv>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gpushare/commands.hpp"

using namespace gpushare;

namespace {

struct Flags {
  std::string trace, cluster, profiles, interference, out = "out", preset = "simulation", policy = "sjf-bsbf";
  std::vector<std::string> formats{"csv"};
  std::uint64_t seed = 1;
  double load = 1.0;
  std::vector<double> thresholds{3600.0};
  double penalty = 30.0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--trace", f.trace, "JSON-lines trace (default: generate from --preset)");
  cmd->add_option("--preset", f.preset, "physical | simulation")->capture_default_str();
  cmd->add_option("--cluster", f.cluster, "cluster JSON (default: preset cluster)");
  cmd->add_option("--profiles", f.profiles, "profile JSON (default: built-in reference profiles)");
  cmd->add_option("--interference", f.interference, "interference JSON path or a constant ratio");
  cmd->add_option("--seed", f.seed, "seed for generated traces and tables")->capture_default_str();
  cmd->add_option("--load", f.load, "load scale for generated traces")->capture_default_str();
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_option("--format", f.formats, "csv and/or json")->delimiter(',')->capture_default_str();
  cmd->add_option("--tiresias-thresholds", f.thresholds, "LAS queue boundaries in GPU-seconds")->delimiter(',');
  cmd->add_option("--preemption-penalty", f.penalty, "restart delay after preemption, s")->capture_default_str();
}

bool parse_number(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

RunConfig to_config(const Flags& f) {
  RunConfig c;
  c.trace_path = f.trace;
  c.preset = parse_preset(f.preset);
  c.cluster_path = f.cluster;
  c.profiles_path = f.profiles;
  if (double xi = 0.0; !f.interference.empty() && parse_number(f.interference, xi)) {
    c.interference_xi = xi;
  } else {
    c.interference_path = f.interference;
  }
  c.policy.kind = parse_policy(f.policy);
  c.policy.tiresias_thresholds = f.thresholds;
  c.policy.preemption_penalty = f.penalty;
  c.seed = f.seed;
  c.load_scale = f.load;
  c.out_dir = f.out;
  c.formats = f.formats;
  return c;
}

std::vector<PolicyKind> to_policies(const std::vector<std::string>& names) {
  std::vector<PolicyKind> out;
  for (const auto& n : names) out.push_back(parse_policy(n));
  return out;
}

void print_table(const std::vector<SimMetrics>& runs) {
  std::cout << kSummaryHeader << '\n';
  for (const auto& m : runs) std::cout << summary_row(m) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GPU-sharing cluster scheduling simulator"};
  app.require_subcommand(1);
  Flags f;
  std::vector<std::string> policies;
  for (PolicyKind k : all_policies()) policies.push_back(policy_name(k));

  auto* run_cmd = app.add_subcommand("run", "simulate one policy");
  add_common(run_cmd, f);
  run_cmd->add_option("--policy", f.policy, "fifo | sjf | tiresias | sjf-ffs | sjf-bsbf")->capture_default_str();

  auto* compare_cmd = app.add_subcommand("compare", "simulate several policies on the same trace");
  add_common(compare_cmd, f);
  compare_cmd->add_option("--policies", policies, "policies to compare")->delimiter(',')->capture_default_str();

  std::string dimension = "interference";
  std::vector<double> grid;
  auto* sweep_cmd = app.add_subcommand("sweep", "grid over interference ratio or load");
  add_common(sweep_cmd, f);
  sweep_cmd->add_option("--dimension", dimension, "interference | load")->capture_default_str();
  sweep_cmd->add_option("--grid", grid, "grid values (default: dimension's standard grid)")->delimiter(',');
  sweep_cmd->add_option("--policies", policies, "policies per grid point")->delimiter(',')->capture_default_str();

  std::string trace_out = "trace.jsonl";
  auto* gen_cmd = app.add_subcommand("gen-trace", "write a generated workload as JSON lines");
  gen_cmd->add_option("--preset", f.preset, "physical | simulation")->capture_default_str();
  gen_cmd->add_option("--seed", f.seed)->capture_default_str();
  gen_cmd->add_option("--load", f.load)->capture_default_str();
  gen_cmd->add_option("--out", trace_out, "output file")->capture_default_str();

  int samples = 1000, grid_points = 201;
  auto* verify_cmd = app.add_subcommand("verify-theorem", "check endpoint optimality against a kappa grid");
  verify_cmd->add_option("--samples", samples)->capture_default_str();
  verify_cmd->add_option("--grid-points", grid_points)->capture_default_str();
  verify_cmd->add_option("--seed", f.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      print_table({cmd_run(to_config(f))});
    } else if (*compare_cmd) {
      print_table(cmd_compare(to_config(f), to_policies(policies)));
    } else if (*sweep_cmd) {
      const auto dim = parse_dimension(dimension);
      if (!sweep_cmd->get_option("--grid")->count()) grid = default_grid(dim);
      const auto rows = cmd_sweep(to_config(f), dim, grid, to_policies(policies));
      std::cout << kSweepHeaderPrefix << kSummaryHeader << '\n';
      for (const auto& r : rows) std::cout << dimension << ',' << r.value << ',' << summary_row(r.metrics) << '\n';
    } else if (*gen_cmd) {
      const auto jobs = cmd_gen_trace(parse_preset(f.preset), f.seed, f.load, trace_out);
      std::cout << "wrote " << jobs.size() << " jobs to " << trace_out << '\n';
    } else if (*verify_cmd) {
      const auto report = cmd_verify_theorem(samples, grid_points, f.seed);
      std::cout << report.to_json().dump(2) << '\n';
      if (!theorem_holds(report)) return kExitInvariant;
    }
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const ConstraintError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

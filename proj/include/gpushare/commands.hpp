#pragma once

// Subcommand bodies behind tools/gpushare. Each takes a resolved config and
// writes its outputs; errors propagate as exceptions and exit_code_for maps
// them to process exit codes.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "gpushare/cluster.hpp"
#include "gpushare/errors.hpp"
#include "gpushare/io.hpp"
#include "gpushare/pair_sched.hpp"
#include "gpushare/policies.hpp"
#include "gpushare/profiles.hpp"
#include "gpushare/report.hpp"
#include "gpushare/simulator.hpp"
#include "gpushare/trace.hpp"

namespace gpushare {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInvariant = 3;

enum class Preset { physical, simulation };

inline Preset parse_preset(const std::string& name) {
  if (name == "physical") return Preset::physical;
  if (name == "simulation") return Preset::simulation;
  throw ConfigError("unknown preset '" + name + "' (expected physical | simulation)");
}

inline WorkloadSpec preset_workload(Preset p, std::uint64_t seed) {
  return p == Preset::physical ? physical_preset(seed) : simulation_preset(seed);
}

inline ClusterSpec preset_cluster(Preset p) {
  return p == Preset::physical ? ClusterSpec{4, 4, 11e9} : ClusterSpec{16, 4, 11e9};
}

struct RunConfig {
  std::string trace_path;     // empty: generate from the preset
  Preset preset = Preset::simulation;
  std::string cluster_path;   // empty: preset cluster
  std::string profiles_path;  // empty: built-in reference profiles
  // Interference: a JSON table path or a constant ratio; with neither, a
  // seeded table with ratios drawn from [1.1, 2.0].
  std::string interference_path;
  std::optional<double> interference_xi;
  PolicyConfig policy;
  std::uint64_t seed = 1;
  double load_scale = 1.0;
  std::string out_dir = "out";
  std::vector<std::string> formats{"csv"};
};

inline void validate(const RunConfig& c) {
  for (const auto* p : {&c.trace_path, &c.cluster_path, &c.profiles_path, &c.interference_path}) {
    if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError("path '" + *p + "' does not exist");
  }
  if (!c.interference_path.empty() && c.interference_xi) {
    throw ConfigError("interference table and constant ratio are mutually exclusive");
  }
  if (c.interference_xi && !(*c.interference_xi >= 1.0)) throw ConfigError("constant interference ratio must be >= 1");
  if (!(c.load_scale > 0.0)) throw ConfigError("load scale must be > 0");
  for (const auto& f : c.formats) {
    if (f != "csv" && f != "json") throw ConfigError("unknown output format '" + f + "' (expected csv | json)");
  }
  validate(c.policy);
}

// Everything a simulation needs, loaded once.
struct Inputs {
  std::vector<JobSpec> trace;
  ClusterSpec cluster;
  ProfileSet profiles;
  InterferenceTable interference;
};

inline Inputs load_inputs(const RunConfig& c) {
  validate(c);
  Inputs in;
  if (c.trace_path.empty()) {
    WorkloadSpec ws = preset_workload(c.preset, c.seed);
    ws.load_scale = c.load_scale;
    in.trace = generate_workload(ws);
  } else {
    in.trace = load_trace_file(c.trace_path);
  }
  in.cluster = c.cluster_path.empty() ? preset_cluster(c.preset) : cluster_from_json(detail::read_json_file(c.cluster_path));
  DefaultProfileOptions popt;
  popt.gpus_per_server = in.cluster.gpus_per_server;
  popt.gpu_memory = in.cluster.gpu_memory;
  popt.max_gpus = in.cluster.total_gpus();
  in.profiles = c.profiles_path.empty() ? default_profiles(popt) : load_profiles(c.profiles_path);
  if (!c.interference_path.empty()) {
    in.interference = load_interference(c.interference_path);
  } else if (c.interference_xi) {
    in.interference = InterferenceTable::constant(*c.interference_xi);
  } else {
    std::vector<std::string> tasks;
    for (const auto& [name, p] : in.profiles) tasks.push_back(name);
    in.interference = random_interference(tasks, 1.1, 2.0, c.seed);
  }
  return in;
}

inline bool wants(const RunConfig& c, const std::string& format) {
  return std::find(c.formats.begin(), c.formats.end(), format) != c.formats.end();
}

inline std::ofstream open_output(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << std::setprecision(10);
  return out;
}

// One policy on one workload: jobs.csv + summary.csv and/or summary.json.
inline SimMetrics cmd_run(const RunConfig& c) {
  const Inputs in = load_inputs(c);
  SimMetrics m = run(in.trace, in.cluster, c.policy, in.profiles, in.interference, c.seed);
  if (wants(c, "csv")) {
    auto jobs = open_output(c.out_dir, "jobs.csv");
    write_jobs_csv(jobs, m);
    auto summary = open_output(c.out_dir, "summary.csv");
    write_summary_csv(summary, {m});
  }
  if (wants(c, "json")) open_output(c.out_dir, "summary.json") << metrics_json(m).dump(2) << '\n';
  return m;
}

// Every listed policy on the identical trace.
inline std::vector<SimMetrics> cmd_compare(const RunConfig& c, const std::vector<PolicyKind>& policies) {
  if (policies.empty()) throw ConfigError("policy list is empty");
  const Inputs in = load_inputs(c);
  std::vector<SimMetrics> runs;
  for (PolicyKind k : policies) {
    PolicyConfig p = c.policy;
    p.kind = k;
    runs.push_back(run(in.trace, in.cluster, p, in.profiles, in.interference, c.seed));
  }
  if (wants(c, "csv")) {
    auto out = open_output(c.out_dir, "compare.csv");
    write_summary_csv(out, runs);
  }
  if (wants(c, "json")) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& m : runs) doc.push_back(metrics_json(m));
    open_output(c.out_dir, "compare.json") << doc.dump(2) << '\n';
  }
  return runs;
}

enum class SweepDimension { interference, load };

inline SweepDimension parse_dimension(const std::string& name) {
  if (name == "interference") return SweepDimension::interference;
  if (name == "load") return SweepDimension::load;
  throw ConfigError("unknown sweep dimension '" + name + "' (expected interference | load)");
}

inline std::vector<double> default_grid(SweepDimension d) {
  if (d == SweepDimension::interference) return {1.0, 1.25, 1.5, 1.75, 2.0};
  return {0.5, 1.0, 1.5, 2.0};
}

struct SweepRow {
  double value = 0.0;
  SimMetrics metrics;
};

inline constexpr const char* kSweepHeaderPrefix = "dimension,value,";

// Interference: constant ratio per grid point on the configured trace.
// Load: the preset regenerated with the grid value as load scale (job count
// and arrival rate scale together).
inline std::vector<SweepRow> cmd_sweep(const RunConfig& c, SweepDimension dim, const std::vector<double>& grid,
                                       const std::vector<PolicyKind>& policies) {
  if (grid.empty()) throw ValidationError("sweep grid is empty");
  if (policies.empty()) throw ConfigError("policy list is empty");
  if (dim == SweepDimension::load && !c.trace_path.empty()) {
    throw ConfigError("load sweeps regenerate the preset workload; drop --trace");
  }
  for (double v : grid) {
    if (dim == SweepDimension::interference && !(v >= 1.0)) throw ValidationError("interference grid values must be >= 1");
    if (dim == SweepDimension::load && !(v > 0.0)) throw ValidationError("load grid values must be > 0");
  }
  std::vector<SweepRow> rows;
  for (double v : grid) {
    RunConfig point = c;
    if (dim == SweepDimension::interference) {
      point.interference_path.clear();
      point.interference_xi = v;
    } else {
      point.load_scale = v;
    }
    const Inputs in = load_inputs(point);
    for (PolicyKind k : policies) {
      PolicyConfig p = c.policy;
      p.kind = k;
      rows.push_back({v, run(in.trace, in.cluster, p, in.profiles, in.interference, c.seed)});
    }
  }
  const std::string name = dim == SweepDimension::interference ? "interference" : "load";
  if (wants(c, "csv")) {
    auto out = open_output(c.out_dir, "sweep_" + name + ".csv");
    out << kSweepHeaderPrefix << kSummaryHeader << '\n';
    for (const auto& r : rows) out << name << ',' << r.value << ',' << summary_row(r.metrics) << '\n';
  }
  if (wants(c, "json")) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& r : rows) {
      auto j = metrics_json(r.metrics);
      j["dimension"] = name;
      j["value"] = r.value;
      doc.push_back(j);
    }
    open_output(c.out_dir, "sweep_" + name + ".json") << doc.dump(2) << '\n';
  }
  return rows;
}

inline std::vector<JobSpec> cmd_gen_trace(Preset preset, std::uint64_t seed, double load_scale,
                                          const std::string& out_path) {
  WorkloadSpec ws = preset_workload(preset, seed);
  ws.load_scale = load_scale;
  auto jobs = generate_workload(ws);
  save_trace_file(out_path, jobs);
  return jobs;
}

struct TheoremReport {
  int samples = 0;
  int grid_points = 0;
  std::uint64_t seed = 0;
  int violations = 0;
  double max_violation = 0.0;  // (predicted - brute force) / brute force, positive when the endpoint rule loses
  JobSnapshot worst_running;
  JobSnapshot worst_arriving;
  int unit_xi_samples = 0;
  int unit_xi_shared = 0;
  int sign_checked = 0;
  int sign_disagreements = 0;

  nlohmann::json to_json() const {
    auto snap = [](const JobSnapshot& s) {
      return nlohmann::json{{"solo_iter", s.solo_iter}, {"remaining_iters", s.remaining_iters}, {"xi", s.xi}};
    };
    return {{"samples", samples},
            {"grid_points", grid_points},
            {"seed", seed},
            {"violations", violations},
            {"max_violation", max_violation},
            {"worst_case", {{"running", snap(worst_running)}, {"arriving", snap(worst_arriving)}}},
            {"unit_xi", {{"samples", unit_xi_samples}, {"shared", unit_xi_shared}}},
            {"sign_condition", {{"checked", sign_checked}, {"disagreements", sign_disagreements}}}};
  }
};

// Random pairs with t in [0.01, 10] s, i in [10, 1e4], xi in [1, 6]; every
// tenth sample uses xi = 1 for both jobs.
inline TheoremReport cmd_verify_theorem(int samples, int grid_points, std::uint64_t seed) {
  if (samples < 1) throw ValidationError("samples must be >= 1");
  if (grid_points < 2) throw ValidationError("grid points must be >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> t(0.01, 10.0), iters(10.0, 1e4), xi(1.0, 6.0);
  TheoremReport r;
  r.samples = samples;
  r.grid_points = grid_points;
  r.seed = seed;
  r.max_violation = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const bool unit = k % 10 == 0;
    JobSnapshot running{t(rng), iters(rng), xi(rng)};
    JobSnapshot arriving{t(rng), iters(rng), xi(rng)};
    if (unit) running.xi = arriving.xi = 1.0;
    const PairSchedule best = best_pair_schedule(running, arriving);
    const KappaSearch grid = brute_force_kappa(running, arriving, grid_points);
    const double gap = (best.avg_jct - grid.best_avg) / grid.best_avg;
    if (gap > 1e-9) ++r.violations;
    if (gap > r.max_violation) {
      r.max_violation = gap;
      r.worst_running = running;
      r.worst_arriving = arriving;
    }
    if (unit) {
      ++r.unit_xi_samples;
      r.unit_xi_shared += best.share ? 1 : 0;
    }
    if (running_finishes_first(running, arriving) && sign_coefficient(running.xi, arriving.xi) != 0.0) {
      ++r.sign_checked;
      const bool sign_share = sign_condition(running.xi, arriving.xi) == SharingDecision::share;
      if (sign_share != best.share) ++r.sign_disagreements;
    }
  }
  return r;
}

inline bool theorem_holds(const TheoremReport& r) {
  return r.violations == 0 && r.sign_disagreements == 0 && r.unit_xi_shared == r.unit_xi_samples;
}

}  // namespace gpushare

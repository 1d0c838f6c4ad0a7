#pragma once

// Synthetic workload generation and JSON-lines trace files.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gpushare/errors.hpp"
#include "gpushare/job.hpp"
#include "gpushare/perf_model.hpp"

namespace gpushare {

struct TaskChoice {
  std::string name;
  std::vector<int> batch_choices;  // per-GPU batch sizes a job may request
};

inline std::vector<TaskChoice> reference_task_catalogue() {
  return {{"bert", {8, 16}},       {"cifar10", {64, 128}}, {"deepspeech2", {16, 32}},
          {"imagenet", {32, 64}},  {"ncf", {512, 1024}},   {"yolov3", {8, 16}}};
}

struct WorkloadSpec {
  int total_jobs = 240;
  std::vector<std::pair<int, double>> gpu_histogram;  // (gpus, probability)
  int iteration_min = 100;
  int iteration_max = 5000;
  double horizon = 8 * 3600.0;            // Poisson rate = total_jobs / horizon
  std::vector<double> explicit_arrivals;  // overrides the Poisson process when non-empty
  double load_scale = 1.0;
  std::uint64_t seed = 1;
  // Draw GPU counts by exact quota (largest remainder) instead of i.i.d.
  bool stratified = false;
  std::vector<TaskChoice> tasks = reference_task_catalogue();
};

inline void validate(const WorkloadSpec& s) {
  if (s.gpu_histogram.empty()) throw ValidationError("GPU demand histogram is empty");
  double total = 0.0;
  for (const auto& [gpus, p] : s.gpu_histogram) {
    if (gpus < 1) throw ValidationError("histogram GPU counts must be >= 1");
    if (!(p >= 0.0)) throw ValidationError("histogram probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("histogram must sum to 1, sums to " + std::to_string(total));
  if (s.iteration_min < 1 || s.iteration_max < s.iteration_min) {
    throw ValidationError("iteration range must satisfy 1 <= min <= max");
  }
  if (!(s.load_scale > 0.0)) throw ValidationError("load_scale must be > 0");
  if (s.explicit_arrivals.empty() && s.total_jobs < 0) throw ValidationError("total_jobs must be >= 0");
  if (s.explicit_arrivals.empty() && !(s.horizon > 0.0)) throw ValidationError("horizon must be > 0");
  if (s.tasks.empty()) throw ValidationError("task catalogue is empty");
  for (const auto& t : s.tasks) {
    if (t.batch_choices.empty()) throw ValidationError("task '" + t.name + "' has no batch choices");
  }
}

inline std::vector<JobSpec> generate_workload(const WorkloadSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);

  std::vector<double> arrivals;
  if (!spec.explicit_arrivals.empty()) {
    for (double t : spec.explicit_arrivals) arrivals.push_back(t / spec.load_scale);
    std::sort(arrivals.begin(), arrivals.end());
  } else {
    const int n = static_cast<int>(std::lround(spec.total_jobs * spec.load_scale));
    std::exponential_distribution<double> gap(spec.total_jobs / spec.horizon * spec.load_scale);
    double t = 0.0;
    for (int i = 0; i < n; ++i) {
      arrivals.push_back(t);
      t += gap(rng);
    }
  }
  const std::size_t n = arrivals.size();

  std::vector<int> demands;
  if (spec.stratified) {
    // Largest-remainder quota, then shuffled.
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < spec.gpu_histogram.size(); ++k) {
      const double exact = spec.gpu_histogram[k].second * static_cast<double>(n);
      const auto whole = static_cast<std::size_t>(std::floor(exact));
      demands.insert(demands.end(), whole, spec.gpu_histogram[k].first);
      assigned += whole;
      remainders.emplace_back(exact - static_cast<double>(whole), k);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < n; ++r, ++assigned) {
      demands.push_back(spec.gpu_histogram[remainders[r % remainders.size()].second].first);
    }
    std::shuffle(demands.begin(), demands.end(), rng);
  } else {
    std::vector<double> weights;
    for (const auto& [gpus, p] : spec.gpu_histogram) weights.push_back(p);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    for (std::size_t i = 0; i < n; ++i) demands.push_back(spec.gpu_histogram[pick(rng)].first);
  }

  std::uniform_int_distribution<int> iters(spec.iteration_min, spec.iteration_max);
  std::uniform_int_distribution<std::size_t> task(0, spec.tasks.size() - 1);
  std::vector<JobSpec> jobs;
  jobs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& choice = spec.tasks[task(rng)];
    std::uniform_int_distribution<std::size_t> batch(0, choice.batch_choices.size() - 1);
    JobSpec j;
    j.job_id = static_cast<JobId>(i);
    j.task_name = choice.name;
    j.arrival = arrivals[i];
    j.gpus = demands[i];
    j.batch_per_gpu = choice.batch_choices[batch(rng)];
    j.iterations = iters(rng);
    jobs.push_back(std::move(j));
  }
  return jobs;
}

// 30 jobs for a 16-GPU testbed: two thirds request at most 8 GPUs, one third
// request 12 or 16.
inline WorkloadSpec physical_preset(std::uint64_t seed = 1) {
  WorkloadSpec s;
  s.total_jobs = 30;
  s.gpu_histogram = {{1, 1.0 / 6}, {2, 1.0 / 6}, {4, 1.0 / 6}, {8, 1.0 / 6}, {12, 1.0 / 6}, {16, 1.0 / 6}};
  s.iteration_min = 100;
  s.iteration_max = 5000;
  s.horizon = 1200.0;
  s.stratified = true;
  s.seed = seed;
  return s;
}

// 240 jobs over an 8-hour window for a 64-GPU cluster.
inline WorkloadSpec simulation_preset(std::uint64_t seed = 1) {
  WorkloadSpec s;
  s.total_jobs = 240;
  s.gpu_histogram = {{1, 0.45}, {2, 0.20}, {4, 0.20}, {8, 0.10}, {16, 0.05}};
  s.iteration_min = 500;
  s.iteration_max = 30000;
  s.horizon = 8 * 3600.0;
  s.stratified = true;
  s.seed = seed;
  return s;
}

// Order-sensitive pairwise ratios drawn uniformly from [lo, hi] for every
// ordered pair of tasks, self-pairs included.
inline InterferenceTable random_interference(const std::vector<std::string>& tasks, double lo, double hi,
                                             std::uint64_t seed, double default_xi = 1.0) {
  if (!(lo >= 1.0) || hi < lo) throw ValidationError("interference range must satisfy 1 <= lo <= hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> xi(lo, hi);
  InterferenceTable table(default_xi);
  for (std::size_t a = 0; a < tasks.size(); ++a) {
    for (std::size_t b = a; b < tasks.size(); ++b) {
      const double first = xi(rng);
      const double second = a == b ? first : xi(rng);
      table.set_pair(tasks[a], tasks[b], first, second);
    }
  }
  return table;
}

inline nlohmann::json to_json(const JobSpec& j) {
  return {{"job_id", j.job_id},       {"task_name", j.task_name},         {"arrival", j.arrival},
          {"gpus", j.gpus},           {"batch_per_gpu", j.batch_per_gpu}, {"iterations", j.iterations}};
}

namespace detail {

template <typename T>
T required_field(const nlohmann::json& rec, const char* name, std::size_t record) {
  auto it = rec.find(name);
  if (it == rec.end()) throw ParseError(std::string("missing required field '") + name + "'", record);
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string("field '") + name + "' has the wrong type", record);
  }
}

}  // namespace detail

inline JobSpec job_from_json(const nlohmann::json& rec, std::size_t record) {
  if (!rec.is_object()) throw ParseError("record is not an object", record);
  JobSpec j;
  j.job_id = detail::required_field<JobId>(rec, "job_id", record);
  j.task_name = detail::required_field<std::string>(rec, "task_name", record);
  j.arrival = detail::required_field<double>(rec, "arrival", record);
  j.gpus = detail::required_field<int>(rec, "gpus", record);
  j.batch_per_gpu = detail::required_field<int>(rec, "batch_per_gpu", record);
  j.iterations = detail::required_field<int>(rec, "iterations", record);
  try {
    validate(j);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), record);
  }
  return j;
}

// One JSON object per line; blank lines are skipped. Records are numbered by
// line, starting at 1.
inline std::vector<JobSpec> load_trace(std::istream& in) {
  std::vector<JobSpec> jobs;
  std::set<JobId> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    JobSpec j = job_from_json(rec, line_no);
    if (!ids.insert(j.job_id).second) {
      throw ValidationError("duplicate job_id " + std::to_string(j.job_id) + " at record " + std::to_string(line_no));
    }
    jobs.push_back(std::move(j));
  }
  return jobs;
}

inline void save_trace(std::ostream& out, const std::vector<JobSpec>& jobs) {
  for (const auto& j : jobs) out << to_json(j).dump() << '\n';
}

inline std::vector<JobSpec> load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file '" + path + "'");
  return load_trace(in);
}

inline void save_trace_file(const std::string& path, const std::vector<JobSpec>& jobs) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trace file '" + path + "'");
  out.precision(17);
  save_trace(out, jobs);
}

}  // namespace gpushare

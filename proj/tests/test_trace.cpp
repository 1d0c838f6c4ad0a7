#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "gpushare/io.hpp"
#include "gpushare/profiles.hpp"
#include "gpushare/trace.hpp"

using namespace gpushare;

TEST(Workload, DeterministicForSeed) {
  const auto a = generate_workload(simulation_preset(3));
  const auto b = generate_workload(simulation_preset(3));
  const auto c = generate_workload(simulation_preset(4));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(a.size(), 240u);
}

TEST(Workload, PhysicalPresetSplit) {
  const auto jobs = generate_workload(physical_preset(2));
  ASSERT_EQ(jobs.size(), 30u);
  int small = 0, big = 0;
  for (const auto& j : jobs) {
    (j.gpus <= 8 ? small : big)++;
    EXPECT_TRUE(j.gpus <= 8 || j.gpus == 12 || j.gpus == 16);
    EXPECT_GE(j.iterations, 100);
    EXPECT_LE(j.iterations, 5000);
  }
  EXPECT_EQ(small, 20);
  EXPECT_EQ(big, 10);
}

TEST(Workload, ArrivalsSortedFromZero) {
  const auto jobs = generate_workload(simulation_preset(1));
  EXPECT_DOUBLE_EQ(jobs.front().arrival, 0.0);
  for (std::size_t i = 1; i < jobs.size(); ++i) EXPECT_GE(jobs[i].arrival, jobs[i - 1].arrival);
}

TEST(Workload, HistogramFrequenciesMatch) {
  WorkloadSpec s = simulation_preset(17);
  s.stratified = false;
  s.total_jobs = 10000;
  s.horizon = 1e6;
  const auto jobs = generate_workload(s);
  std::map<int, int> counts;
  std::map<std::string, int> tasks;
  for (const auto& j : jobs) counts[j.gpus]++, tasks[j.task_name]++;
  for (const auto& [g, p] : s.gpu_histogram) {
    // 4 standard deviations of a binomial count.
    const double sd = std::sqrt(10000 * p * (1 - p));
    EXPECT_NEAR(counts[g], 10000 * p, 4 * sd) << g;
  }
  for (const auto& [t, n] : tasks) EXPECT_NEAR(n, 10000 / 6.0, 4 * std::sqrt(10000 / 6.0 * 5 / 6)) << t;
  // Mean inter-arrival gap near horizon / total_jobs.
  EXPECT_NEAR(jobs.back().arrival / (jobs.size() - 1), 100.0, 4.0);
}

TEST(Workload, LoadScaleScalesJobCount) {
  WorkloadSpec s = simulation_preset(1);
  s.load_scale = 0.5;
  EXPECT_EQ(generate_workload(s).size(), 120u);
  s.load_scale = 2.0;
  EXPECT_EQ(generate_workload(s).size(), 480u);
}

TEST(Workload, ExplicitArrivals) {
  WorkloadSpec s = physical_preset(1);
  s.explicit_arrivals = {5.0, 1.0, 3.0};
  const auto jobs = generate_workload(s);
  ASSERT_EQ(jobs.size(), 3u);
  EXPECT_DOUBLE_EQ(jobs[0].arrival, 1.0);
  EXPECT_DOUBLE_EQ(jobs[2].arrival, 5.0);
}

TEST(Workload, InvalidSpecs) {
  WorkloadSpec s = physical_preset(1);
  s.gpu_histogram.clear();
  EXPECT_THROW(generate_workload(s), ValidationError);
  s = physical_preset(1);
  s.gpu_histogram = {{1, 0.5}, {2, 0.2}};
  EXPECT_THROW(generate_workload(s), ValidationError);
  s = physical_preset(1);
  s.iteration_min = 10;
  s.iteration_max = 5;
  EXPECT_THROW(generate_workload(s), ValidationError);
}

TEST(TraceIo, RoundTrip) {
  const auto jobs = generate_workload(physical_preset(5));
  std::stringstream ss;
  save_trace(ss, jobs);
  EXPECT_EQ(load_trace(ss), jobs);
}

TEST(TraceIo, ParseErrorNamesRecordAndField) {
  std::stringstream ss;
  ss << R"({"job_id":0,"task_name":"bert","arrival":0,"gpus":1,"batch_per_gpu":8,"iterations":10})" << '\n'
     << R"({"job_id":1,"task_name":"bert","arrival":0,"batch_per_gpu":8,"iterations":10})" << '\n';
  try {
    load_trace(ss);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.record(), 2u);
    EXPECT_NE(std::string(e.what()).find("gpus"), std::string::npos);
  }
  std::stringstream garbage("{not json\n");
  EXPECT_THROW(load_trace(garbage), ParseError);
}

TEST(TraceIo, DuplicateIdsRejected) {
  std::stringstream ss;
  ss << R"({"job_id":3,"task_name":"bert","arrival":0,"gpus":1,"batch_per_gpu":8,"iterations":10})" << '\n'
     << R"({"job_id":3,"task_name":"ncf","arrival":1,"gpus":1,"batch_per_gpu":8,"iterations":10})" << '\n';
  EXPECT_THROW(load_trace(ss), ValidationError);
}

TEST(ProfileIo, RoundTrip) {
  const auto profiles = default_profiles();
  const auto back = profiles_from_json(to_json(profiles));
  ASSERT_EQ(back.size(), profiles.size());
  for (const auto& [name, p] : profiles) {
    const auto& q = back.at(name);
    EXPECT_EQ(q.max_batch, p.max_batch);
    EXPECT_DOUBLE_EQ(iter_time(16, 2, q, 8), iter_time(16, 2, p, 8));
  }
  EXPECT_THROW(profiles_from_json(json::parse(R"({"x":{"gpus":{"1":{"alpha_comp":0.1}}}})")), ConfigError);
}

TEST(InterferenceIo, RoundTrip) {
  const auto t = random_interference(reference_task_names(), 1.1, 2.0, 3);
  const auto back = interference_from_json(to_json(t));
  for (const auto& a : reference_task_names()) {
    for (const auto& b : reference_task_names()) EXPECT_DOUBLE_EQ(back.lookup(a, b), t.lookup(a, b));
  }
  EXPECT_THROW(interference_from_json(json::parse(R"({"default_xi":0.5})")), ConfigError);
}

TEST(ClusterIo, RejectsBadShape) {
  EXPECT_EQ(cluster_from_json(json::parse(R"({"num_servers":2,"gpus_per_server":8})")).total_gpus(), 16);
  EXPECT_THROW(cluster_from_json(json::parse(R"({"num_servers":0,"gpus_per_server":8})")), ConfigError);
  EXPECT_THROW(cluster_from_json(json::parse(R"({"gpus_per_server":8})")), ConfigError);
}

// Acceptance report: one PASS/FAIL line per criterion. Exits 0 after
// reporting; pass --strict to exit 1 when any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gpushare/commands.hpp"
#include "gpushare/fit.hpp"

using namespace gpushare;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

PolicyConfig policy(PolicyKind k) {
  PolicyConfig p;
  p.kind = k;
  return p;
}

Outcome endpoint_optimality() {
  const auto t0 = Clock::now();
  const auto r = cmd_verify_theorem(1000, 201, 2024);
  const double s = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "1000 pairs, 201-point grid: %d violations, max gap %.3g, %.2f s", r.violations,
                r.max_violation, s);
  return {r.violations == 0 && s < 10.0, buf};
}

Outcome canonical_fixtures() {
  const auto share = best_pair_schedule({1, 200, 1.2}, {1, 100, 1.2});
  const auto seq = best_pair_schedule({1, 200, 2.5}, {1, 100, 2.5});
  ModelProfile p;
  p.task_name = "unit";
  p.by_gpus[1] = {{0.5, 0.5}, {0.0, 0.0, 1.0}, 1.0};
  p.mem_base = 1e8;
  p.mem_per_sample = 1e6;
  const ProfileSet profiles{{"unit", p}};
  const std::vector<JobSpec> trace{{0, "unit", 0, 1, 1, 200}, {1, "unit", 1e-6, 1, 1, 100}};
  const double sim_share =
      run(trace, {1, 1, 11e9}, policy(PolicyKind::sjf_bsbf), profiles, InterferenceTable(1.2)).average_jct;
  const double sim_seq =
      run(trace, {1, 1, 11e9}, policy(PolicyKind::sjf_bsbf), profiles, InterferenceTable(2.5)).average_jct;
  const bool ok = share.share && std::abs(share.avg_jct - 170) < 1e-9 && !seq.share &&
                  std::abs(seq.avg_jct - 250) < 1e-9 && std::abs(sim_share - 170) <= 170 * 1e-6 &&
                  std::abs(sim_seq - 250) <= 250 * 1e-6;
  char buf[160];
  std::snprintf(buf, sizeof buf, "model %.6f / %.6f, simulator %.6f / %.6f", share.avg_jct, seq.avg_jct, sim_share,
                sim_seq);
  return {ok, buf};
}

Outcome sign_consistency() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> t(0.01, 10), n(10, 1e4), xi(1, 6);
  int samples = 0, disagreements = 0;
  while (samples < 1000) {
    const JobSnapshot a{t(rng), n(rng), xi(rng)}, b{t(rng), n(rng), xi(rng)};
    if (!running_finishes_first(a, b)) continue;
    ++samples;
    const bool by_sign = sign_condition(a.xi, b.xi) == SharingDecision::share;
    if (by_sign != best_pair_schedule(a, b).share) ++disagreements;
  }
  return {disagreements == 0, std::to_string(samples) + " samples, " + std::to_string(disagreements) + " disagreements"};
}

Outcome physical_ordering() {
  const auto profiles = default_profiles();
  int ordered = 0;
  double gain = 0;
  for (int seed = 1; seed <= 20; ++seed) {
    const auto trace = generate_workload(physical_preset(seed));
    const auto xi = random_interference(reference_task_names(), 1.1, 2.0, 1000 + seed);
    auto jct = [&](PolicyKind k) { return run(trace, {4, 4, 11e9}, policy(k), profiles, xi, seed).average_jct; };
    const double fifo = jct(PolicyKind::fifo), sjf = jct(PolicyKind::sjf), ffs = jct(PolicyKind::sjf_ffs),
                 bsbf = jct(PolicyKind::sjf_bsbf);
    gain += 1 - bsbf / sjf;
    if (bsbf <= ffs && ffs <= sjf && sjf <= fifo && bsbf <= 0.9 * sjf) ++ordered;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "ordering with >=10%% gain in %d/20 seeds (need 16); mean SJF-BSBF gain over SJF %.1f%%",
                ordered, 100 * gain / 20);
  return {ordered >= 16, buf};
}

Outcome interference_sweep() {
  const auto profiles = default_profiles();
  int ok_seeds = 0;
  std::string misses;
  for (int seed = 1; seed <= 10; ++seed) {
    const auto trace = generate_workload(simulation_preset(seed));
    bool ok = true;
    for (double x : {1.0, 1.25, 1.5, 1.75, 2.0}) {
      const auto t = InterferenceTable::constant(x);
      const double b = run(trace, {16, 4, 11e9}, policy(PolicyKind::sjf_bsbf), profiles, t, seed).average_jct;
      const double f = run(trace, {16, 4, 11e9}, policy(PolicyKind::sjf_ffs), profiles, t, seed).average_jct;
      const double red = 1 - b / f;
      const bool point = x <= 1.25 ? b == f : red >= 0.05 && red <= 0.15;
      if (!point) {
        char buf[48];
        std::snprintf(buf, sizeof buf, " s%d@%.2f:%.1f%%", seed, x, 100 * red);
        misses += buf;
      }
      ok = ok && point;
    }
    ok_seeds += ok;
  }
  return {ok_seeds >= 7, "band met in " + std::to_string(ok_seeds) + "/10 seeds (need 7); misses" + misses};
}

Outcome queuing_claim() {
  const auto profiles = default_profiles();
  int ok = 0;
  for (int seed = 1; seed <= 10; ++seed) {
    const auto trace = generate_workload(simulation_preset(seed));
    const auto xi = random_interference(reference_task_names(), 1.1, 2.0, 1000 + seed);
    auto q = [&](PolicyKind k) { return run(trace, {16, 4, 11e9}, policy(k), profiles, xi, seed).average_queuing; };
    const double sharing = std::max(q(PolicyKind::sjf_bsbf), q(PolicyKind::sjf_ffs));
    const double exclusive = std::min({q(PolicyKind::fifo), q(PolicyKind::sjf), q(PolicyKind::tiresias)});
    ok += sharing < exclusive;
  }
  return {ok >= 8, "sharing policies queue less in " + std::to_string(ok) + "/10 seeds (need 8)"};
}

Outcome fit_round_trip() {
  auto truth = [](double b) {
    const double tc = 0.01 + 0.001 * b;
    return b / std::sqrt(tc * tc + 0.05 * 0.05);
  };
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0, 0.02);
  std::vector<ThroughputSample> clean, noisy;
  for (int b = 1; b <= 512; ++b) {
    clean.push_back({1, double(b), truth(b)});
    noisy.push_back({1, double(b), truth(b) * (1 + noise(rng))});
  }
  auto worst = [](const GpuCountParams& p) {
    return std::max({std::abs(p.comp.alpha_comp / 0.01 - 1), std::abs(p.comp.beta_comp / 0.001 - 1),
                     std::abs(p.delta / 2.0 - 1)});
  };
  const double e_clean = worst(fit_profile("synthetic", clean).profile.at(1));
  const double e_noisy = worst(fit_profile("synthetic", noisy).profile.at(1));
  char buf[160];
  std::snprintf(buf, sizeof buf, "worst relative error %.3g%% noiseless, %.3g%% with 2%% noise", 100 * e_clean,
                100 * e_noisy);
  return {e_clean <= 0.01 && e_noisy <= 0.10, buf};
}

Outcome simulator_invariants() {
  WorkloadSpec ws = simulation_preset(1);
  ws.load_scale = 2.0;
  const auto trace = generate_workload(ws);
  const auto profiles = default_profiles();
  const auto xi = random_interference(reference_task_names(), 1.1, 2.0, 1);
  const auto t0 = Clock::now();
  std::size_t audits = 0;
  try {
    for (auto k : all_policies()) audits += run(trace, {16, 4, 11e9}, policy(k), profiles, xi, 1).audits;
  } catch (const std::exception& e) {
    return {false, std::string("violation: ") + e.what()};
  }
  const double s = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu jobs x 5 policies on 64 GPUs, %zu audited events, 0 violations, %.2f s",
                trace.size(), audits, s);
  return {s < 30.0, buf};
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"1 endpoint optimality vs kappa grid", endpoint_optimality},
      {"2 canonical pair fixtures + simulator", canonical_fixtures},
      {"3 sign-condition consistency", sign_consistency},
      {"4 policy ordering, physical preset", physical_ordering},
      {"5 interference sweep SJF-BSBF vs SJF-FFS", interference_sweep},
      {"6 queuing time, sharing vs exclusive", queuing_claim},
      {"7 model-fit round trip", fit_round_trip},
      {"8 simulator invariants, 480 jobs / 64 GPUs", simulator_invariants},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const Outcome o = check();
    failed += !o.pass;
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return strict && failed ? 1 : 0;
}

#include <gtest/gtest.h>

#include <random>

#include "gpushare/pair_sched.hpp"

using namespace gpushare;

namespace {

// Independent oracle: step both jobs forward in small time increments.
PairJct step_timeline(const JobSnapshot& p, const JobSnapshot& q, double kappa, double dt) {
  double left_p = p.remaining_iters, left_q = q.remaining_iters, t = 0.0;
  PairJct out{-1, -1};
  while (out.running < 0 || out.arriving < 0) {
    const bool p_on = left_p > 0, q_on = left_q > 0 && t >= kappa - 1e-12;
    const bool both = p_on && q_on;
    if (p_on) left_p -= dt / (p.solo_iter * (both ? p.xi : 1.0));
    if (q_on) left_q -= dt / (q.solo_iter * (both ? q.xi : 1.0));
    t += dt;
    if (left_p <= 0 && out.running < 0) out.running = t;
    if (left_q <= 0 && out.arriving < 0) out.arriving = t;
  }
  return out;
}

ModelProfile flat_profile(double a, double b, double mem_base, double per_sample) {
  ModelProfile p;
  p.task_name = "m";
  p.by_gpus[1] = {{a, b}, {0.02, 0.0, 1.0}, 1.5};
  p.mem_base = mem_base;
  p.mem_per_sample = per_sample;
  p.max_batch = 1024;
  return p;
}

}  // namespace

TEST(PairJct, CanonicalShareFixture) {
  const JobSnapshot p{1.0, 200, 1.2}, q{1.0, 100, 1.2};
  const auto s = best_pair_schedule(p, q);
  EXPECT_TRUE(s.share);
  EXPECT_DOUBLE_EQ(s.kappa, 0.0);
  EXPECT_NEAR(s.avg_jct, 170.0, 1e-9);
  const auto j = pair_jct(p, q, 0.0);
  EXPECT_NEAR(j.arriving, 120.0, 1e-9);
  EXPECT_NEAR(j.running, 220.0, 1e-9);
}

TEST(PairJct, CanonicalSequentialFixture) {
  const JobSnapshot p{1.0, 200, 2.5}, q{1.0, 100, 2.5};
  const auto s = best_pair_schedule(p, q);
  EXPECT_FALSE(s.share);
  EXPECT_DOUBLE_EQ(s.kappa, 200.0);
  EXPECT_NEAR(s.avg_jct, 250.0, 1e-9);
}

TEST(PairJct, UnitRatioGivesSoloTimes) {
  const JobSnapshot p{0.5, 300, 1.0}, q{2.0, 40, 1.0};
  const auto j = pair_jct(p, q, 0.0);
  EXPECT_NEAR(j.running, 150.0, 1e-9);
  EXPECT_NEAR(j.arriving, 80.0, 1e-9);
  EXPECT_TRUE(best_pair_schedule(p, q).share);
}

TEST(PairJct, SequentialEndpointIsBackToBack) {
  const JobSnapshot p{0.3, 1000, 1.7}, q{0.9, 250, 1.4};
  const auto j = pair_jct(p, q, full_sequential_delay(p));
  EXPECT_NEAR(j.running, 300.0, 1e-9);
  EXPECT_NEAR(j.arriving, 300.0 + 225.0, 1e-9);
}

TEST(PairJct, KappaOutsideRangeIsDomainError) {
  const JobSnapshot p{1.0, 10, 1.2}, q{1.0, 10, 1.2};
  EXPECT_THROW(pair_jct(p, q, -1.0), DomainError);
  EXPECT_THROW(pair_jct(p, q, 11.0), DomainError);
}

TEST(PairJct, MatchesTimelineStepper) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> t(0.05, 1.0), n(20, 300), xi(1.0, 3.0), frac(0.0, 1.0);
  for (int k = 0; k < 40; ++k) {
    const JobSnapshot p{t(rng), n(rng), xi(rng)}, q{t(rng), n(rng), xi(rng)};
    const double kappa = frac(rng) * full_sequential_delay(p);
    const auto exact = pair_jct(p, q, kappa);
    const auto stepped = step_timeline(p, q, kappa, 1e-3);
    EXPECT_NEAR(exact.running, stepped.running, 2e-2) << k;
    EXPECT_NEAR(exact.arriving, stepped.arriving, 2e-2) << k;
  }
}

TEST(PairJct, GridNeverBeatsEndpoints) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> t(0.01, 10), n(10, 1e4), xi(1, 6);
  for (int k = 0; k < 300; ++k) {
    const JobSnapshot p{t(rng), n(rng), xi(rng)}, q{t(rng), n(rng), xi(rng)};
    const auto best = best_pair_schedule(p, q);
    const auto grid = brute_force_kappa(p, q, 257);
    EXPECT_LE(best.avg_jct, grid.best_avg * (1 + 1e-9)) << k;
  }
}

TEST(SignCondition, AgreesWithEndpointsWhenRunningFinishesFirst) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> t(0.01, 10), n(10, 1e4), xi(1, 6);
  int checked = 0;
  for (int k = 0; k < 2000; ++k) {
    const JobSnapshot p{t(rng), n(rng), xi(rng)}, q{t(rng), n(rng), xi(rng)};
    if (!running_finishes_first(p, q)) continue;
    ++checked;
    const bool by_sign = sign_condition(p.xi, q.xi) == SharingDecision::share;
    EXPECT_EQ(by_sign, best_pair_schedule(p, q).share) << k;
  }
  EXPECT_GT(checked, 500);
}

TEST(SignCondition, KnownValues) {
  EXPECT_EQ(sign_condition(1.2, 1.2), SharingDecision::share);
  EXPECT_EQ(sign_condition(2.5, 2.5), SharingDecision::sequential);
  EXPECT_DOUBLE_EQ(sign_coefficient(1.5, 1.5), 0.0);
  EXPECT_EQ(sign_condition(1.5, 1.5), SharingDecision::sequential);
  EXPECT_THROW(sign_condition(0.5, 1.2), ValidationError);
}

TEST(CandidateSubBatches, HalvingWithCeil) {
  EXPECT_EQ(candidate_sub_batches(100), (std::vector<int>{100, 50, 25, 13, 7, 4, 2, 1}));
  EXPECT_EQ(candidate_sub_batches(1), (std::vector<int>{1}));
  EXPECT_THROW(candidate_sub_batches(0), DomainError);
}

TEST(BatchSizeScaling, MatchesEnumerationOracle) {
  const auto prof = flat_profile(0.01, 0.002, 1e9, 5e7);
  const JobSnapshot running{0.2, 500, 1.3};
  for (double cap : {4e9, 6e9, 11e9}) {
    for (int batch : {1, 7, 64, 100}) {
      const ArrivingJob q{&prof, 1, batch, 800, 1.25};
      // Oracle: evaluate every halving candidate in full.
      double best = 1e300;
      int best_sub = -1;
      double b = batch;
      while (true) {
        const int c = static_cast<int>(std::ceil(b));
        const int steps = (batch + c - 1) / c;
        const int sub = (batch + steps - 1) / steps;
        if (prof.mem_base + prof.mem_per_sample * sub + 2e9 <= cap) {
          const JobSnapshot in{iter_time(batch, steps, prof.at(1)), 800, 1.25};
          const double share = pair_jct(running, in, 0.0).average();
          const double seq = pair_jct(running, in, full_sequential_delay(running)).average();
          const double v = std::min(share, seq);
          if (v <= best) best = v, best_sub = sub;
        }
        if (c <= 1) break;
        b /= 2;
      }
      const auto got = try_batch_size_scaling(running, 2e9, q, cap);
      if (best_sub < 0) {
        EXPECT_FALSE(got.has_value());
        EXPECT_THROW(batch_size_scaling(running, 2e9, q, cap), InfeasiblePairError);
      } else {
        ASSERT_TRUE(got.has_value());
        EXPECT_EQ(got->sub_batch, best_sub) << cap << " " << batch;
        EXPECT_NEAR(got->avg_jct, best, 1e-9 * best);
      }
    }
  }
}

TEST(BatchSizeScaling, NothingFitsThrows) {
  const auto prof = flat_profile(0.01, 0.002, 10e9, 1e8);
  const ArrivingJob q{&prof, 1, 16, 100, 1.1};
  EXPECT_THROW(batch_size_scaling({1.0, 10, 1.1}, 5e9, q, 11e9), InfeasiblePairError);
  EXPECT_THROW(batch_size_scaling({1.0, 10, 1.1}, 0, {&prof, 1, 0, 100, 1.1}, 11e9), DomainError);
}

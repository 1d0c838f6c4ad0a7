#pragma once

// Decision engine for one running job and one arriving job that would share
// the same GPUs.
//
// Timeline model: the running job progresses alone at 1/t during [0, kappa);
// from kappa both progress at their shared rates 1/(t * xi); once one of them
// finishes the survivor reverts to its solo rate. Completion times are measured
// from the decision instant, so the arriving job's wait kappa is part of its
// JCT. Average JCT over the pair is concave piecewise-linear in kappa, so its
// minimum sits at kappa = 0 or at kappa = full sequential delay.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gpushare/errors.hpp"
#include "gpushare/perf_model.hpp"

namespace gpushare {

struct JobSnapshot {
  double solo_iter = 1.0;        // seconds per iteration when alone
  double remaining_iters = 0.0;  // iterations still to run
  double xi = 1.0;               // slowdown while sharing with the other job
};

struct PairJct {
  double running = 0.0;
  double arriving = 0.0;

  double average() const { return 0.5 * (running + arriving); }
};

struct PairSchedule {
  bool share = false;
  double kappa = 0.0;
  int sub_batch = 0;    // arriving job's per-step batch; 0 when not chosen
  int accum_steps = 1;
  double avg_jct = 0.0;
  double arriving_solo_iter = 0.0;
};

enum class SharingDecision { share, sequential };

inline void validate(const JobSnapshot& s) {
  if (!(s.solo_iter > 0.0)) throw ValidationError("snapshot solo_iter must be > 0");
  if (!(s.remaining_iters >= 0.0)) throw ValidationError("snapshot remaining_iters must be >= 0");
  if (!(s.xi >= 1.0)) throw ValidationError("snapshot xi must be >= 1");
}

// Delay before the arriving job starts when the pair runs back to back.
inline double full_sequential_delay(const JobSnapshot& running) {
  return running.solo_iter * running.remaining_iters;
}

inline PairJct pair_jct(const JobSnapshot& running, const JobSnapshot& arriving, double kappa) {
  const double full = full_sequential_delay(running);
  if (!(kappa >= 0.0) || kappa > full * (1.0 + 1e-12)) {
    throw DomainError("kappa " + std::to_string(kappa) + " outside [0, " + std::to_string(full) + "]");
  }
  kappa = std::min(kappa, full);

  const double running_left =
      kappa >= full ? 0.0 : std::max(running.remaining_iters - kappa / running.solo_iter, 0.0);
  // Remaining work of each job expressed in solo seconds.
  const double running_work = running.solo_iter * running_left;
  const double arriving_work = arriving.solo_iter * arriving.remaining_iters;
  const double running_span = running_work * running.xi;
  const double arriving_span = arriving_work * arriving.xi;

  // While both run, each solo second of progress costs xi wall seconds; the
  // survivor finishes its leftover work at full speed.
  PairJct out;
  if (arriving_span <= running_span) {
    out.arriving = kappa + arriving_span;
    out.running = kappa + running_work + arriving_span * (1.0 - 1.0 / running.xi);
  } else {
    out.running = kappa + running_span;
    out.arriving = kappa + arriving_work + running_span * (1.0 - 1.0 / arriving.xi);
  }
  return out;
}

// Compares the fully overlapped and fully sequential endpoints. Ties go to
// sequential.
inline PairSchedule best_pair_schedule(const JobSnapshot& running, const JobSnapshot& arriving) {
  const double full = full_sequential_delay(running);
  const double concurrent = pair_jct(running, arriving, 0.0).average();
  const double sequential = pair_jct(running, arriving, full).average();
  PairSchedule out;
  out.share = concurrent < sequential;
  out.kappa = out.share ? 0.0 : full;
  out.avg_jct = out.share ? concurrent : sequential;
  out.arriving_solo_iter = arriving.solo_iter;
  return out;
}

// Slope sign of the average JCT in kappa when the running job would finish
// first under full overlap.
inline double sign_coefficient(double xi_running, double xi_arriving) {
  return 2.0 * xi_arriving + xi_running - 2.0 * xi_running * xi_arriving;
}

inline SharingDecision sign_condition(double xi_running, double xi_arriving) {
  if (!(xi_running >= 1.0) || !(xi_arriving >= 1.0)) throw ValidationError("interference ratios must be >= 1");
  return sign_coefficient(xi_running, xi_arriving) > 0.0 ? SharingDecision::share : SharingDecision::sequential;
}

// True when, sharing from time zero, the running job finishes before the
// arriving one. Average JCT is then linear in kappa and sign_condition
// decides the endpoint.
inline bool running_finishes_first(const JobSnapshot& running, const JobSnapshot& arriving) {
  return running.solo_iter * running.xi * running.remaining_iters <
         arriving.solo_iter * arriving.xi * arriving.remaining_iters;
}

struct KappaSearch {
  double best_kappa = 0.0;
  double best_avg = 0.0;
};

// Uniform grid over [0, full sequential delay], endpoints included.
inline KappaSearch brute_force_kappa(const JobSnapshot& running, const JobSnapshot& arriving, int grid_points) {
  if (grid_points < 2) throw DomainError("grid_points must be >= 2");
  const double full = full_sequential_delay(running);
  KappaSearch best{0.0, std::numeric_limits<double>::infinity()};
  for (int k = 0; k < grid_points; ++k) {
    const double kappa = k == grid_points - 1 ? full : full * k / (grid_points - 1);
    const double avg = pair_jct(running, arriving, kappa).average();
    if (avg < best.best_avg) best = {kappa, avg};
  }
  return best;
}

// Per-step batch sizes visited by the halving search: ceil(B), ceil(B/2), ... 1.
inline std::vector<int> candidate_sub_batches(int requested_batch) {
  if (requested_batch < 1) throw DomainError("requested batch must be >= 1");
  std::vector<int> out;
  double b = requested_batch;
  while (true) {
    const int sub = static_cast<int>(std::ceil(b));
    if (out.empty() || out.back() != sub) out.push_back(sub);
    if (sub <= 1) break;
    b /= 2.0;
  }
  return out;
}

struct ArrivingJob {
  const ModelProfile* profile = nullptr;
  int gpu_count = 1;
  int requested_batch = 1;
  double iterations = 0.0;
  double xi = 1.0;
};

// Halving search over the arriving job's sub-batch. Each memory-feasible
// candidate is scored with best_pair_schedule; the smallest average JCT wins,
// later (smaller) candidates winning ties. Returns nullopt when no candidate
// fits next to the running job.
inline std::optional<PairSchedule> try_batch_size_scaling(const JobSnapshot& running, double running_footprint,
                                                          const ArrivingJob& arriving, double memory_cap) {
  if (arriving.profile == nullptr) throw ConfigError("arriving job has no profile");
  const GpuCountParams& params = arriving.profile->at(arriving.gpu_count);
  std::optional<PairSchedule> best;
  for (int candidate : candidate_sub_batches(arriving.requested_batch)) {
    const int steps = (arriving.requested_batch + candidate - 1) / candidate;
    const int sub = sub_batch_for(arriving.requested_batch, steps);
    if (arriving.profile->footprint(sub) + running_footprint > memory_cap) continue;
    const JobSnapshot incoming{iter_time(arriving.requested_batch, steps, params), arriving.iterations, arriving.xi};
    PairSchedule sched = best_pair_schedule(running, incoming);
    sched.sub_batch = sub;
    sched.accum_steps = steps;
    if (!best || sched.avg_jct <= best->avg_jct) best = sched;
  }
  return best;
}

inline PairSchedule batch_size_scaling(const JobSnapshot& running, double running_footprint,
                                       const ArrivingJob& arriving, double memory_cap) {
  if (arriving.requested_batch < 1) throw DomainError("requested batch must be >= 1");
  auto best = try_batch_size_scaling(running, running_footprint, arriving, memory_cap);
  if (!best) {
    throw InfeasiblePairError("no memory-feasible sub-batch for '" + arriving.profile->task_name +
                              "' next to a job holding " + std::to_string(running_footprint) + " bytes");
  }
  return *best;
}

}  // namespace gpushare

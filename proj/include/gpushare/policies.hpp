#pragma once

// Scheduling policies. A pass maps (pending jobs, cluster state, running-job
// view, clock) to a list of actions; it never mutates the caller's state.

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpushare/cluster.hpp"
#include "gpushare/errors.hpp"
#include "gpushare/job.hpp"
#include "gpushare/pair_sched.hpp"
#include "gpushare/perf_model.hpp"

namespace gpushare {

enum class PolicyKind { fifo, sjf, tiresias, sjf_ffs, sjf_bsbf };

struct PolicyConfig {
  PolicyKind kind = PolicyKind::sjf_bsbf;
  // Attained-service boundaries (GPU-seconds) between LAS queues; n
  // thresholds give n + 1 queues.
  std::vector<double> tiresias_thresholds{3600.0};
  double preemption_penalty = 30.0;  // s of dead time when a preempted job resumes
};

inline std::string policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::fifo: return "fifo";
    case PolicyKind::sjf: return "sjf";
    case PolicyKind::tiresias: return "tiresias";
    case PolicyKind::sjf_ffs: return "sjf-ffs";
    case PolicyKind::sjf_bsbf: return "sjf-bsbf";
  }
  return "unknown";
}

inline PolicyKind parse_policy(const std::string& name) {
  for (auto k : {PolicyKind::fifo, PolicyKind::sjf, PolicyKind::tiresias, PolicyKind::sjf_ffs, PolicyKind::sjf_bsbf}) {
    if (policy_name(k) == name) return k;
  }
  throw ConfigError("unknown policy '" + name + "' (expected fifo | sjf | tiresias | sjf-ffs | sjf-bsbf)");
}

inline const std::vector<PolicyKind>& all_policies() {
  static const std::vector<PolicyKind> kAll{PolicyKind::fifo, PolicyKind::sjf, PolicyKind::tiresias,
                                            PolicyKind::sjf_ffs, PolicyKind::sjf_bsbf};
  return kAll;
}

inline bool is_preemptive(PolicyKind k) { return k == PolicyKind::tiresias; }

inline void validate(const PolicyConfig& p) {
  if (!(p.preemption_penalty >= 0.0)) throw ValidationError("preemption penalty must be >= 0");
  for (std::size_t i = 0; i < p.tiresias_thresholds.size(); ++i) {
    if (!(p.tiresias_thresholds[i] > 0.0)) throw ValidationError("tiresias thresholds must be > 0");
    if (i > 0 && !(p.tiresias_thresholds[i] > p.tiresias_thresholds[i - 1])) {
      throw ValidationError("tiresias thresholds must be strictly increasing");
    }
  }
}

// Execution configuration fixed when a job starts.
struct JobConfig {
  int sub_batch = 1;
  int accum_steps = 1;
  double solo_iter = 0.0;  // s per iteration without interference

  bool operator==(const JobConfig&) const = default;
};

struct PendingJob {
  const JobSpec* spec = nullptr;
  const ModelProfile* profile = nullptr;
  double remaining_iters = 0.0;
  double expected_remaining = 0.0;  // solo time to finish at the requested batch
  double attained_service = 0.0;    // GPU-seconds, for LAS
};

struct RunningJob {
  const JobSpec* spec = nullptr;
  const ModelProfile* profile = nullptr;
  JobConfig config;
  double remaining_iters = 0.0;
  double attained_service = 0.0;

  double remaining_solo_time() const { return remaining_iters * config.solo_iter; }
  double footprint() const { return profile->footprint(config.sub_batch); }
};

struct SchedulingContext {
  const InterferenceTable* interference = nullptr;
  const std::map<JobId, RunningJob>* running = nullptr;
  double clock = 0.0;
};

struct Action {
  enum class Kind { start, preempt, defer };
  Kind kind = Kind::defer;
  JobId job = 0;
  std::vector<GpuId> gpus;
  JobConfig config;
  std::vector<JobId> shared_with;  // residents on the chosen GPUs
  double predicted_pair_jct = 0.0;  // best pair average JCT, sjf-bsbf sharing starts only

  bool operator==(const Action&) const = default;
};

// Largest halving-search sub-batch whose footprint plus `co_runner_bytes`
// fits in `memory_cap`.
inline std::optional<JobConfig> fit_config(const JobSpec& spec, const ModelProfile& profile, double memory_cap,
                                           double co_runner_bytes = 0.0) {
  for (int candidate : candidate_sub_batches(spec.batch_per_gpu)) {
    const int steps = (spec.batch_per_gpu + candidate - 1) / candidate;
    const int sub = sub_batch_for(spec.batch_per_gpu, steps);
    if (profile.footprint(sub) + co_runner_bytes <= memory_cap) {
      return JobConfig{sub, steps, iter_time(spec.batch_per_gpu, steps, profile, spec.gpus)};
    }
  }
  return std::nullopt;
}

inline JobConfig solo_config(const JobSpec& spec, const ModelProfile& profile, double memory_cap) {
  auto cfg = fit_config(spec, profile, memory_cap);
  if (!cfg) {
    throw ConfigError("job " + std::to_string(spec.job_id) + " ('" + spec.task_name +
                      "') does not fit in GPU memory even with a sub-batch of 1");
  }
  return *cfg;
}

// LAS queue index: 0 is the highest priority.
inline int tiresias_priority(double attained_service, const std::vector<double>& thresholds) {
  return static_cast<int>(std::upper_bound(thresholds.begin(), thresholds.end(), attained_service) -
                          thresholds.begin());
}

namespace detail {

inline const RunningJob& resident(const SchedulingContext& ctx, JobId id) {
  auto it = ctx.running->find(id);
  if (it == ctx.running->end()) throw ConstraintError("GPU occupant " + std::to_string(id) + " is not running");
  return it->second;
}

inline std::vector<GpuId> take_free(const ClusterState& state, int count) {
  auto free = state.free_gpus();
  free.resize(static_cast<std::size_t>(count));
  return free;
}

inline Action start_action(JobId job, std::vector<GpuId> gpus, const JobConfig& cfg) {
  Action a;
  a.kind = Action::Kind::start;
  a.job = job;
  a.gpus = std::move(gpus);
  a.config = cfg;
  return a;
}

inline Action defer_action(JobId job) {
  Action a;
  a.kind = Action::Kind::defer;
  a.job = job;
  return a;
}

inline void apply_start(ClusterState& state, Action& a, const JobSpec& spec, double clock) {
  for (GpuId g : a.gpus) {
    for (JobId other : state.slot(g).occupants) {
      if (std::find(a.shared_with.begin(), a.shared_with.end(), other) == a.shared_with.end()) {
        a.shared_with.push_back(other);
      }
    }
  }
  std::sort(a.shared_with.begin(), a.shared_with.end());
  state.allocate(spec.job_id, a.gpus, spec.gpus, clock);
}

// Shortest expected remaining time first; ties by arrival, then id.
inline std::vector<const PendingJob*> sjf_order(std::span<const PendingJob> pending) {
  std::vector<const PendingJob*> order;
  for (const auto& p : pending) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(), [](const PendingJob* a, const PendingJob* b) {
    if (a->expected_remaining != b->expected_remaining) return a->expected_remaining < b->expected_remaining;
    if (a->spec->arrival != b->spec->arrival) return a->spec->arrival < b->spec->arrival;
    return a->spec->job_id < b->spec->job_id;
  });
  return order;
}

inline std::vector<const PendingJob*> fifo_order(std::span<const PendingJob> pending) {
  std::vector<const PendingJob*> order;
  for (const auto& p : pending) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(), [](const PendingJob* a, const PendingJob* b) {
    if (a->spec->arrival != b->spec->arrival) return a->spec->arrival < b->spec->arrival;
    return a->spec->job_id < b->spec->job_id;
  });
  return order;
}

}  // namespace detail

// GPUs holding a single job, grouped by resident and ordered by the
// resident's remaining solo time (soonest to finish first), then resident id,
// then GPU id. Both sharing policies scan in this order.
inline std::vector<GpuId> sharing_scan_order(const ClusterState& state, const SchedulingContext& ctx) {
  auto gpus = state.one_job_gpus();
  std::stable_sort(gpus.begin(), gpus.end(), [&](GpuId a, GpuId b) {
    const JobId ja = state.slot(a).occupants.front();
    const JobId jb = state.slot(b).occupants.front();
    if (ja == jb) return a < b;
    const double ra = detail::resident(ctx, ja).remaining_solo_time();
    const double rb = detail::resident(ctx, jb).remaining_solo_time();
    if (ra != rb) return ra < rb;
    return ja < jb;
  });
  return gpus;
}

struct ShareCandidate {
  JobId resident = 0;
  std::vector<GpuId> gpus;  // resident's one-job GPUs in scan order
  PairSchedule schedule;
};

// Pairs the pending job with every single-job resident through the
// batch-size search, sorted by predicted pair JCT when sharing now. With
// require_benefit only pairs where sharing now beats waiting are kept.
inline std::vector<ShareCandidate> sharing_candidates(const PendingJob& job, const ClusterState& state,
                                                      const SchedulingContext& ctx, bool require_benefit = true) {
  std::vector<ShareCandidate> candidates;
  for (GpuId g : sharing_scan_order(state, ctx)) {
    const JobId rid = state.slot(g).occupants.front();
    if (!candidates.empty() && candidates.back().resident == rid) {
      candidates.back().gpus.push_back(g);
      continue;
    }
    candidates.push_back({rid, {g}, {}});
  }

  const std::string& task = job.spec->task_name;
  std::vector<ShareCandidate> kept;
  for (auto& c : candidates) {
    const RunningJob& r = detail::resident(ctx, c.resident);
    const JobSnapshot running{r.config.solo_iter, r.remaining_iters,
                              ctx.interference->lookup(r.spec->task_name, task)};
    const ArrivingJob arriving{job.profile, job.spec->gpus, job.spec->batch_per_gpu, job.remaining_iters,
                               ctx.interference->lookup(task, r.spec->task_name)};
    auto sched = try_batch_size_scaling(running, r.footprint(), arriving, state.spec().gpu_memory);
    if (!sched || (require_benefit && !sched->share)) continue;
    if (!sched->share) {
      sched->avg_jct = pair_jct(running, {sched->arriving_solo_iter, job.remaining_iters, arriving.xi}, 0.0).average();
    }
    c.schedule = *sched;
    kept.push_back(std::move(c));
  }
  std::stable_sort(kept.begin(), kept.end(), [](const ShareCandidate& a, const ShareCandidate& b) {
    return a.schedule.avg_jct < b.schedule.avg_jct;
  });
  return kept;
}

// Sharing path: whole candidate GPU sets in candidate order (a prefix of the
// last one), then free GPUs only if the candidates run out. SJF-BSBF keeps
// beneficial pairs only; SJF-FFS takes every resident that fits in memory.
inline std::optional<Action> ranked_share(const PendingJob& job, const ClusterState& state,
                                          const SchedulingContext& ctx, bool require_benefit) {
  const JobSpec& spec = *job.spec;
  std::vector<GpuId> chosen;
  int sub_batch = spec.batch_per_gpu;
  double best_jct = std::numeric_limits<double>::infinity();
  for (const auto& c : sharing_candidates(job, state, ctx, require_benefit)) {
    if (static_cast<int>(chosen.size()) == spec.gpus) break;
    for (GpuId g : c.gpus) {
      if (static_cast<int>(chosen.size()) == spec.gpus) break;
      chosen.push_back(g);
    }
    sub_batch = std::min(sub_batch, c.schedule.sub_batch);
    best_jct = std::min(best_jct, c.schedule.avg_jct);
  }
  if (chosen.empty()) return std::nullopt;
  const int missing = spec.gpus - static_cast<int>(chosen.size());
  if (missing > state.free_count()) return std::nullopt;
  for (GpuId g : detail::take_free(state, missing)) chosen.push_back(g);

  const int steps = (spec.batch_per_gpu + sub_batch - 1) / sub_batch;
  const JobConfig cfg{sub_batch_for(spec.batch_per_gpu, steps), steps,
                      iter_time(spec.batch_per_gpu, steps, *job.profile, spec.gpus)};
  Action a = detail::start_action(spec.job_id, std::move(chosen), cfg);
  if (require_benefit) a.predicted_pair_jct = best_jct;
  return a;
}

namespace detail {

inline std::vector<Action> exclusive_pass(const std::vector<const PendingJob*>& order, ClusterState& state,
                                          double clock, bool blocking) {
  std::vector<Action> actions;
  bool blocked = false;
  for (const PendingJob* job : order) {
    const JobSpec& spec = *job->spec;
    if (!blocked && state.free_count() >= spec.gpus) {
      Action a = start_action(spec.job_id, take_free(state, spec.gpus),
                              solo_config(spec, *job->profile, state.spec().gpu_memory));
      apply_start(state, a, spec, clock);
      actions.push_back(std::move(a));
    } else {
      blocked = blocking;
      actions.push_back(defer_action(spec.job_id));
    }
  }
  return actions;
}

inline std::vector<Action> sharing_pass(const std::vector<const PendingJob*>& order, ClusterState& state,
                                        const SchedulingContext& ctx, bool best_benefit) {
  // Jobs started in this pass become residents for later jobs in the pass.
  std::map<JobId, RunningJob> running = *ctx.running;
  SchedulingContext local = ctx;
  local.running = &running;

  std::vector<Action> actions;
  for (const PendingJob* job : order) {
    const JobSpec& spec = *job->spec;
    std::optional<Action> a;
    if (state.free_count() >= spec.gpus) {
      a = start_action(spec.job_id, take_free(state, spec.gpus),
                       solo_config(spec, *job->profile, state.spec().gpu_memory));
    } else if (state.free_count() + state.one_job_count() >= spec.gpus) {
      a = ranked_share(*job, state, local, best_benefit);
    }
    if (!a) {
      actions.push_back(defer_action(spec.job_id));
      continue;
    }
    apply_start(state, *a, spec, ctx.clock);
    running[spec.job_id] = RunningJob{job->spec, job->profile, a->config, job->remaining_iters, job->attained_service};
    actions.push_back(std::move(*a));
  }
  return actions;
}

inline std::vector<Action> tiresias_pass(const PolicyConfig& policy, std::span<const PendingJob> pending,
                                         ClusterState& state, const SchedulingContext& ctx) {
  struct Entry {
    int queue;
    double arrival;
    JobId id;
    int gpus;
    const PendingJob* pending;  // null for running jobs
  };
  std::vector<Entry> entries;
  for (const auto& [id, r] : *ctx.running) {
    entries.push_back({tiresias_priority(r.attained_service, policy.tiresias_thresholds), r.spec->arrival, id,
                       r.spec->gpus, nullptr});
  }
  for (const auto& p : pending) {
    entries.push_back({tiresias_priority(p.attained_service, policy.tiresias_thresholds), p.spec->arrival,
                       p.spec->job_id, p.spec->gpus, &p});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.queue != b.queue) return a.queue < b.queue;
    if (a.arrival != b.arrival) return a.arrival < b.arrival;
    return a.id < b.id;
  });

  int budget = state.spec().total_gpus();
  std::vector<const Entry*> keep;
  std::vector<const Entry*> evict;
  std::vector<const Entry*> wait;
  for (const auto& e : entries) {
    if (e.gpus <= budget) {
      budget -= e.gpus;
      keep.push_back(&e);
    } else if (e.pending) {
      wait.push_back(&e);
    } else {
      evict.push_back(&e);
    }
  }

  std::vector<Action> actions;
  for (const Entry* e : evict) {
    state.release(e->id);
    Action a;
    a.kind = Action::Kind::preempt;
    a.job = e->id;
    actions.push_back(std::move(a));
  }
  for (const Entry* e : keep) {
    if (!e->pending) continue;
    const JobSpec& spec = *e->pending->spec;
    Action a = start_action(spec.job_id, take_free(state, spec.gpus),
                            solo_config(spec, *e->pending->profile, state.spec().gpu_memory));
    apply_start(state, a, spec, ctx.clock);
    actions.push_back(std::move(a));
  }
  for (const Entry* e : wait) actions.push_back(defer_action(e->id));
  return actions;
}

}  // namespace detail

// One scheduling decision round. `state` is copied; the returned actions
// are meant to be applied in order (preemptions first, then starts).
inline std::vector<Action> schedule_pass(const PolicyConfig& policy, std::span<const PendingJob> pending,
                                         ClusterState state, const SchedulingContext& ctx) {
  switch (policy.kind) {
    case PolicyKind::fifo: return detail::exclusive_pass(detail::fifo_order(pending), state, ctx.clock, true);
    case PolicyKind::sjf: return detail::exclusive_pass(detail::sjf_order(pending), state, ctx.clock, false);
    case PolicyKind::tiresias: return detail::tiresias_pass(policy, pending, state, ctx);
    case PolicyKind::sjf_ffs: return detail::sharing_pass(detail::sjf_order(pending), state, ctx, false);
    case PolicyKind::sjf_bsbf: return detail::sharing_pass(detail::sjf_order(pending), state, ctx, true);
  }
  return {};
}

}  // namespace gpushare

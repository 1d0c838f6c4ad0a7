#pragma once

// Discrete-event cluster simulator with fluid job progress. Rates are
// piecewise constant between events: arrivals, completions, and the end of a
// post-preemption restart delay. Events at one timestamp are handled as
// completions, then arrivals, then a single scheduling pass.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gpushare/cluster.hpp"
#include "gpushare/errors.hpp"
#include "gpushare/job.hpp"
#include "gpushare/perf_model.hpp"
#include "gpushare/policies.hpp"

namespace gpushare {

enum class JobState { pending, running, finished };

struct GpuSetChange {
  double time = 0.0;
  std::vector<GpuId> gpus;  // empty when the job lost its GPUs
};

struct JobRuntime {
  const JobSpec* spec = nullptr;
  const ModelProfile* profile = nullptr;
  JobState state = JobState::pending;
  double progress = 0.0;      // iterations completed
  double current_rate = 0.0;  // iterations per second
  std::set<JobId> co_runners;
  double xi = 1.0;
  JobConfig config;
  double start_time = -1.0;  // first start
  double completion_time = -1.0;
  double queuing_time = 0.0;  // total time spent pending
  double pending_since = 0.0;
  double attained_service = 0.0;  // GPU-seconds
  double stall_until = 0.0;
  std::vector<GpuId> gpu_set;
  int preemptions = 0;
  bool ever_shared = false;
  std::vector<GpuSetChange> gpu_history;

  double remaining_iters() const { return spec->iterations - progress; }
};

// Advances progress over [from_t, to_t] at the current rate, clamping to the
// target when within 1e-9 iterations of it.
inline void progress_update(JobRuntime& job, double from_t, double to_t) {
  if (to_t < from_t) throw InvariantViolation("negative progress interval");
  job.progress += job.current_rate * (to_t - from_t);
  const double target = job.spec->iterations;
  if (job.progress > target || target - job.progress <= 1e-9) job.progress = std::min(job.progress, target);
}

inline double completion_time_of(const JobRuntime& job, double now) {
  if (!(job.current_rate > 0.0)) throw InvariantViolation("job " + std::to_string(job.spec->job_id) + " has zero rate");
  return now + std::max(job.remaining_iters(), 0.0) / job.current_rate;
}

struct JobRecord {
  JobSpec spec;
  double start_time = 0.0;
  double completion_time = 0.0;
  double jct = 0.0;
  double queuing_time = 0.0;
  int sub_batch = 0;
  int accum_steps = 1;
  int preemptions = 0;
  bool shared = false;
  std::vector<GpuSetChange> gpu_history;
};

struct ClassSummary {
  int jobs = 0;
  double average_jct = 0.0;
  double average_queuing = 0.0;

  bool operator==(const ClassSummary&) const = default;
};

struct SimMetrics {
  std::string policy;
  std::uint64_t seed = 0;
  std::vector<JobRecord> jobs;  // in trace order
  double average_jct = 0.0;
  double makespan = 0.0;
  double average_queuing = 0.0;
  ClassSummary large;
  ClassSummary small;
  std::map<std::string, ClassSummary> by_task;
  std::size_t events = 0;
  std::size_t passes = 0;
  std::size_t audits = 0;
};

struct SimOptions {
  bool audit = true;  // check gang, capacity and progress invariants at every event
};

namespace detail {

inline ClassSummary summarize(const std::vector<const JobRecord*>& recs) {
  ClassSummary s;
  s.jobs = static_cast<int>(recs.size());
  if (recs.empty()) return s;
  for (const auto* r : recs) {
    s.average_jct += r->jct;
    s.average_queuing += r->queuing_time;
  }
  s.average_jct /= s.jobs;
  s.average_queuing /= s.jobs;
  return s;
}

inline void finalize_metrics(SimMetrics& m) {
  std::vector<const JobRecord*> all, large, small;
  std::map<std::string, std::vector<const JobRecord*>> tasks;
  double first_arrival = std::numeric_limits<double>::infinity();
  double last_completion = 0.0;
  for (const auto& r : m.jobs) {
    all.push_back(&r);
    (is_large(r.spec) ? large : small).push_back(&r);
    tasks[r.spec.task_name].push_back(&r);
    first_arrival = std::min(first_arrival, r.spec.arrival);
    last_completion = std::max(last_completion, r.completion_time);
  }
  const ClassSummary overall = summarize(all);
  m.average_jct = overall.average_jct;
  m.average_queuing = overall.average_queuing;
  m.makespan = all.empty() ? 0.0 : last_completion - first_arrival;
  m.large = summarize(large);
  m.small = summarize(small);
  for (const auto& [task, recs] : tasks) m.by_task[task] = summarize(recs);
}

}  // namespace detail

class Simulator {
 public:
  Simulator(std::vector<JobSpec> trace, const ClusterSpec& cluster, const PolicyConfig& policy,
            const ProfileSet& profiles, const InterferenceTable& interference, std::uint64_t seed = 0,
            SimOptions options = {})
      : trace_(std::move(trace)),
        policy_(policy),
        profiles_(profiles),
        interference_(interference),
        seed_(seed),
        options_(options),
        state_(cluster) {
    validate(policy_);
    std::stable_sort(trace_.begin(), trace_.end(), [](const JobSpec& a, const JobSpec& b) {
      if (a.arrival != b.arrival) return a.arrival < b.arrival;
      return a.job_id < b.job_id;
    });
    jobs_.reserve(trace_.size());
    std::set<JobId> ids;
    for (const auto& spec : trace_) {
      validate(spec);
      if (!ids.insert(spec.job_id).second) throw ValidationError("duplicate job_id " + std::to_string(spec.job_id));
      auto it = profiles_.find(spec.task_name);
      if (it == profiles_.end()) throw ConfigError("no profile for task '" + spec.task_name + "'");
      const ModelProfile& profile = it->second;
      if (!profile.covers(spec.gpus)) {
        throw ConfigError("profile '" + spec.task_name + "' has no parameters for " + std::to_string(spec.gpus) +
                          " GPU(s)");
      }
      if (spec.gpus > cluster.total_gpus()) {
        throw ConfigError("job " + std::to_string(spec.job_id) + " requests " + std::to_string(spec.gpus) +
                          " GPUs but the cluster has " + std::to_string(cluster.total_gpus()));
      }
      solo_config(spec, profile, cluster.gpu_memory);
      JobRuntime rt;
      rt.spec = &spec;
      rt.profile = &profile;
      index_[spec.job_id] = jobs_.size();
      jobs_.push_back(std::move(rt));
    }
  }

  // Runtime entries point into trace_.
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  SimMetrics run() {
    const std::size_t n = jobs_.size();
    std::size_t next_arrival = 0;
    std::size_t finished = 0;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    now_ = n ? jobs_.front().spec->arrival : 0.0;

    while (finished < n) {
      const double t_arrival = next_arrival < n ? jobs_[next_arrival].spec->arrival : kInf;
      double t_running = kInf;
      for (std::size_t i : running_) {
        const auto& job = jobs_[i];
        t_running = std::min(t_running, job.stall_until > now_ ? job.stall_until : completion_time_of(job, now_));
      }
      const double t = std::min(t_arrival, t_running);
      if (t == kInf) throw InvariantViolation("no runnable event while jobs remain unfinished");

      std::vector<std::size_t> completing;
      for (std::size_t i : running_) {
        const auto& job = jobs_[i];
        if (job.stall_until <= now_ && completion_time_of(job, now_) <= t + 1e-9) completing.push_back(i);
      }
      for (std::size_t i : running_) {
        auto& job = jobs_[i];
        progress_update(job, now_, t);
        job.attained_service += job.spec->gpus * (t - now_);
      }
      now_ = t;

      bool trigger = false;
      for (std::size_t i : completing) {
        auto& job = jobs_[i];
        if (options_.audit && std::abs(job.progress - job.spec->iterations) > 1e-6) {
          throw InvariantViolation("job " + std::to_string(job.spec->job_id) + " completed with progress " +
                                   std::to_string(job.progress) + " of " + std::to_string(job.spec->iterations));
        }
        job.progress = job.spec->iterations;
        job.state = JobState::finished;
        job.completion_time = now_;
        job.current_rate = 0.0;
        state_.release(job.spec->job_id);
        job.gpu_history.push_back({now_, {}});
        running_.erase(i);
        ++finished;
        trigger = true;
      }
      while (next_arrival < n && jobs_[next_arrival].spec->arrival <= now_) {
        auto& job = jobs_[next_arrival];
        job.pending_since = job.spec->arrival;
        pending_.insert(next_arrival);
        ++next_arrival;
        trigger = true;
      }
      if (trigger && !pending_.empty()) schedule();
      refresh_rates();
      if (options_.audit) audit();
      ++events_;
    }
    return metrics();
  }

  const ClusterState& cluster() const { return state_; }

 private:
  void schedule() {
    std::vector<PendingJob> pending;
    pending.reserve(pending_.size());
    for (std::size_t i : pending_) {
      const auto& job = jobs_[i];
      const double solo = solo_config(*job.spec, *job.profile, state_.spec().gpu_memory).solo_iter;
      pending.push_back({job.spec, job.profile, job.remaining_iters(), solo * job.remaining_iters(),
                         job.attained_service});
    }
    std::map<JobId, RunningJob> running;
    for (std::size_t i : running_) {
      const auto& job = jobs_[i];
      running[job.spec->job_id] =
          RunningJob{job.spec, job.profile, job.config, job.remaining_iters(), job.attained_service};
    }
    const SchedulingContext ctx{&interference_, &running, now_};
    const auto actions = schedule_pass(policy_, pending, state_, ctx);
    ++passes_;

    for (const auto& a : actions) {
      const std::size_t i = index_.at(a.job);
      auto& job = jobs_[i];
      switch (a.kind) {
        case Action::Kind::preempt:
          if (!is_preemptive(policy_.kind)) throw InvariantViolation("non-preemptive policy emitted a preemption");
          state_.release(a.job);
          job.state = JobState::pending;
          job.current_rate = 0.0;
          job.pending_since = now_;
          job.gpu_set.clear();
          job.co_runners.clear();
          job.gpu_history.push_back({now_, {}});
          ++job.preemptions;
          running_.erase(i);
          pending_.insert(i);
          break;
        case Action::Kind::start:
          state_.allocate(a.job, a.gpus, job.spec->gpus, now_);
          job.state = JobState::running;
          job.config = a.config;
          if (job.start_time < 0.0) job.start_time = now_;
          job.queuing_time += now_ - job.pending_since;
          if (job.preemptions > 0 && policy_.preemption_penalty > 0.0) job.stall_until = now_ + policy_.preemption_penalty;
          job.gpu_set = state_.allocation(a.job)->gpu_set;
          job.gpu_history.push_back({now_, job.gpu_set});
          pending_.erase(i);
          running_.insert(i);
          break;
        case Action::Kind::defer:
          break;
      }
    }
  }

  // A job slows by the worst pairwise ratio over its co-runners: gang
  // synchronisation makes the slowest worker set the pace.
  void refresh_rates() {
    for (std::size_t i : running_) {
      auto& job = jobs_[i];
      job.co_runners = state_.co_runners(job.spec->job_id);
      double xi = 1.0;
      for (JobId other : job.co_runners) {
        xi = std::max(xi, interference_.lookup(job.spec->task_name, jobs_[index_.at(other)].spec->task_name));
      }
      job.xi = xi;
      if (!job.co_runners.empty()) job.ever_shared = true;
      job.current_rate = job.stall_until > now_ ? 0.0 : 1.0 / shared_iter_time(job.config.solo_iter, xi);
    }
  }

  void audit() {
    try {
      state_.check_invariants();
    } catch (const ConstraintError& e) {
      throw InvariantViolation(std::string("cluster state at t=") + std::to_string(now_) + ": " + e.what());
    }
    for (std::size_t i : running_) {
      const auto& job = jobs_[i];
      const auto* alloc = state_.allocation(job.spec->job_id);
      if (!alloc || static_cast<int>(alloc->gpu_set.size()) != job.spec->gpus) {
        throw InvariantViolation("job " + std::to_string(job.spec->job_id) + " holds the wrong number of GPUs");
      }
      if (alloc->gpu_set != job.gpu_set) {
        throw InvariantViolation("job " + std::to_string(job.spec->job_id) + " changed GPUs while running");
      }
      if (job.progress < 0.0 || job.progress > job.spec->iterations + 1e-6) {
        throw InvariantViolation("job " + std::to_string(job.spec->job_id) + " progress out of range");
      }
    }
    if (state_.allocations().size() != running_.size()) {
      throw InvariantViolation("allocation map and running set disagree");
    }
    ++audits_;
  }

  SimMetrics metrics() const {
    SimMetrics m;
    m.policy = policy_name(policy_.kind);
    m.seed = seed_;
    m.events = events_;
    m.passes = passes_;
    m.audits = audits_;
    for (const auto& job : jobs_) {
      JobRecord r;
      r.spec = *job.spec;
      r.start_time = job.start_time;
      r.completion_time = job.completion_time;
      r.jct = job.completion_time - job.spec->arrival;
      r.queuing_time = job.queuing_time;
      r.sub_batch = job.config.sub_batch;
      r.accum_steps = job.config.accum_steps;
      r.preemptions = job.preemptions;
      r.shared = job.ever_shared;
      r.gpu_history = job.gpu_history;
      m.jobs.push_back(std::move(r));
    }
    detail::finalize_metrics(m);
    return m;
  }

  std::vector<JobSpec> trace_;
  PolicyConfig policy_;
  const ProfileSet& profiles_;
  const InterferenceTable& interference_;
  std::uint64_t seed_;
  SimOptions options_;
  ClusterState state_;
  std::vector<JobRuntime> jobs_;
  std::map<JobId, std::size_t> index_;
  std::set<std::size_t> pending_;
  std::set<std::size_t> running_;
  double now_ = 0.0;
  std::size_t events_ = 0;
  std::size_t passes_ = 0;
  std::size_t audits_ = 0;
};

inline SimMetrics run(const std::vector<JobSpec>& trace, const ClusterSpec& cluster, const PolicyConfig& policy,
                      const ProfileSet& profiles, const InterferenceTable& interference, std::uint64_t seed = 0,
                      SimOptions options = {}) {
  return Simulator(trace, cluster, policy, profiles, interference, seed, options).run();
}

}  // namespace gpushare

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gpushare/errors.hpp"
#include "gpushare/perf_model.hpp"

namespace gpushare {

using JobId = std::int64_t;
using GpuId = int;  // server_index * gpus_per_server + gpu_index

struct ClusterSpec {
  int num_servers = 4;
  int gpus_per_server = 4;
  double gpu_memory = 11e9;  // bytes

  int total_gpus() const { return num_servers * gpus_per_server; }
};

inline void validate(const ClusterSpec& spec) {
  if (spec.num_servers < 1 || spec.gpus_per_server < 1 || !(spec.gpu_memory > 0.0)) {
    throw ValidationError("cluster spec fields must all be positive");
  }
}

struct GpuSlot {
  int server_index = 0;
  int gpu_index = 0;
  std::vector<JobId> occupants;  // at most kGpuCapacity, no duplicates
};

struct Allocation {
  JobId job_id = 0;
  std::vector<GpuId> gpu_set;  // sorted
  double start_time = 0.0;
};

class ClusterState {
 public:
  ClusterState() : ClusterState(ClusterSpec{}) {}

  explicit ClusterState(const ClusterSpec& spec) : spec_(spec) {
    validate(spec);
    slots_.reserve(static_cast<std::size_t>(spec.total_gpus()));
    for (int s = 0; s < spec.num_servers; ++s) {
      for (int g = 0; g < spec.gpus_per_server; ++g) slots_.push_back({s, g, {}});
    }
  }

  const ClusterSpec& spec() const { return spec_; }
  const std::vector<GpuSlot>& slots() const { return slots_; }
  const GpuSlot& slot(GpuId id) const { return slots_.at(static_cast<std::size_t>(id)); }
  int server_of(GpuId id) const { return id / spec_.gpus_per_server; }

  // Empty GPUs, servers with the most empty GPUs first (ties by server
  // index), GPU index order within a server. Taking a prefix packs a job onto
  // as few servers as possible.
  std::vector<GpuId> free_gpus() const { return consolidated(0); }

  // GPUs holding exactly one job, in server/GPU index order.
  std::vector<GpuId> one_job_gpus() const {
    std::vector<GpuId> out;
    for (GpuId id = 0; id < static_cast<GpuId>(slots_.size()); ++id) {
      if (slots_[static_cast<std::size_t>(id)].occupants.size() == 1) out.push_back(id);
    }
    return out;
  }

  int free_count() const { return count_with(0); }
  int one_job_count() const { return count_with(1); }

  void allocate(JobId job, std::span<const GpuId> gpu_set, int requested_gpus, double start_time) {
    if (static_cast<int>(gpu_set.size()) != requested_gpus) {
      throw ConstraintError("job " + std::to_string(job) + " requests " + std::to_string(requested_gpus) +
                            " GPUs but was given " + std::to_string(gpu_set.size()));
    }
    if (allocations_.count(job)) throw ConstraintError("job " + std::to_string(job) + " is already allocated");
    std::vector<GpuId> sorted(gpu_set.begin(), gpu_set.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ConstraintError("job " + std::to_string(job) + " was given a duplicate GPU");
    }
    for (GpuId id : sorted) {
      if (id < 0 || id >= static_cast<GpuId>(slots_.size())) {
        throw ConstraintError("GPU " + std::to_string(id) + " does not exist");
      }
      if (static_cast<int>(slots_[static_cast<std::size_t>(id)].occupants.size()) >= kGpuCapacity) {
        throw ConstraintError("GPU " + std::to_string(id) + " already holds " + std::to_string(kGpuCapacity) +
                              " jobs");
      }
    }
    for (GpuId id : sorted) slots_[static_cast<std::size_t>(id)].occupants.push_back(job);
    allocations_[job] = Allocation{job, std::move(sorted), start_time};
  }

  // Removes the job from every GPU it holds at once.
  void release(JobId job) {
    auto it = allocations_.find(job);
    if (it == allocations_.end()) throw ConstraintError("job " + std::to_string(job) + " is not allocated");
    for (GpuId id : it->second.gpu_set) {
      auto& occ = slots_[static_cast<std::size_t>(id)].occupants;
      occ.erase(std::remove(occ.begin(), occ.end(), job), occ.end());
    }
    allocations_.erase(it);
  }

  const Allocation* allocation(JobId job) const {
    auto it = allocations_.find(job);
    return it == allocations_.end() ? nullptr : &it->second;
  }

  const std::map<JobId, Allocation>& allocations() const { return allocations_; }

  std::set<int> servers_of(JobId job) const {
    std::set<int> out;
    if (const auto* a = allocation(job)) {
      for (GpuId id : a->gpu_set) out.insert(server_of(id));
    }
    return out;
  }

  // Jobs sharing at least one GPU with `job`.
  std::set<JobId> co_runners(JobId job) const {
    std::set<JobId> out;
    if (const auto* a = allocation(job)) {
      for (GpuId id : a->gpu_set) {
        for (JobId other : slot(id).occupants) {
          if (other != job) out.insert(other);
        }
      }
    }
    return out;
  }

  // Cross-checks slot occupancy against the allocation map. Throws on the
  // first inconsistency.
  void check_invariants() const {
    std::map<JobId, int> seen;
    for (GpuId id = 0; id < static_cast<GpuId>(slots_.size()); ++id) {
      const auto& occ = slots_[static_cast<std::size_t>(id)].occupants;
      if (static_cast<int>(occ.size()) > kGpuCapacity) {
        throw ConstraintError("GPU " + std::to_string(id) + " over capacity");
      }
      std::set<JobId> unique(occ.begin(), occ.end());
      if (unique.size() != occ.size()) throw ConstraintError("GPU " + std::to_string(id) + " lists a job twice");
      for (JobId j : occ) {
        const auto* a = allocation(j);
        if (!a || !std::binary_search(a->gpu_set.begin(), a->gpu_set.end(), id)) {
          throw ConstraintError("GPU " + std::to_string(id) + " holds job " + std::to_string(j) +
                                " outside its allocation");
        }
        ++seen[j];
      }
    }
    for (const auto& [job, a] : allocations_) {
      if (seen[job] != static_cast<int>(a.gpu_set.size())) {
        throw ConstraintError("job " + std::to_string(job) + " allocation does not match slot occupancy");
      }
    }
  }

  bool operator==(const ClusterState& other) const {
    if (slots_.size() != other.slots_.size()) return false;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      if (slots_[i].occupants != other.slots_[i].occupants) return false;
    }
    if (allocations_.size() != other.allocations_.size()) return false;
    for (const auto& [job, a] : allocations_) {
      const auto* b = other.allocation(job);
      if (!b || b->gpu_set != a.gpu_set || b->start_time != a.start_time) return false;
    }
    return true;
  }

 private:
  int count_with(std::size_t occupants) const {
    return static_cast<int>(std::count_if(slots_.begin(), slots_.end(),
                                          [&](const GpuSlot& s) { return s.occupants.size() == occupants; }));
  }

  std::vector<GpuId> consolidated(std::size_t occupants) const {
    std::vector<int> per_server(static_cast<std::size_t>(spec_.num_servers), 0);
    for (const auto& s : slots_) {
      if (s.occupants.size() == occupants) ++per_server[static_cast<std::size_t>(s.server_index)];
    }
    std::vector<int> order(per_server.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return per_server[static_cast<std::size_t>(a)] > per_server[static_cast<std::size_t>(b)];
    });
    std::vector<GpuId> out;
    for (int server : order) {
      for (int g = 0; g < spec_.gpus_per_server; ++g) {
        const GpuId id = server * spec_.gpus_per_server + g;
        if (slots_[static_cast<std::size_t>(id)].occupants.size() == occupants) out.push_back(id);
      }
    }
    return out;
  }

  ClusterSpec spec_;
  std::vector<GpuSlot> slots_;
  std::map<JobId, Allocation> allocations_;
};

}  // namespace gpushare

#pragma once

// Iteration-time, throughput and interference models for data-parallel
// training jobs. Everything here is a pure function of its inputs.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "gpushare/errors.hpp"

namespace gpushare {

// Cap on co-located jobs per GPU.
inline constexpr int kGpuCapacity = 2;

struct CompParams {
  double alpha_comp = 0.0;  // s
  double beta_comp = 0.0;   // s per sample
};

struct CommParams {
  double alpha_comm = 0.0;    // s
  double beta_comm = 0.0;     // s per byte
  double message_size = 1.0;  // bytes of gradient per all-reduce
};

// Cost parameters valid for one GPU count.
struct GpuCountParams {
  CompParams comp;
  CommParams comm;
  double delta = 1.0;  // compute/communication overlap exponent
};

struct ModelProfile {
  std::string task_name;
  std::map<int, GpuCountParams> by_gpus;
  double mem_base = 0.0;        // bytes
  double mem_per_sample = 0.0;  // bytes per sample
  int max_batch = 1;            // per-GPU batch that fits when running alone

  const GpuCountParams& at(int gpu_count) const {
    auto it = by_gpus.find(gpu_count);
    if (it == by_gpus.end()) {
      throw ConfigError("profile '" + task_name + "' has no parameters for " +
                        std::to_string(gpu_count) + " GPU(s)");
    }
    return it->second;
  }

  bool covers(int gpu_count) const { return by_gpus.count(gpu_count) != 0; }

  // Device memory held by one worker running the given sub-batch.
  double footprint(int sub_batch) const { return mem_base + mem_per_sample * sub_batch; }
};

using ProfileSet = std::map<std::string, ModelProfile>;

inline void validate(const CompParams& p) {
  if (!(p.alpha_comp >= 0.0)) throw ValidationError("alpha_comp must be >= 0");
  if (!(p.beta_comp > 0.0)) throw ValidationError("beta_comp must be > 0");
}

inline void validate(const CommParams& p) {
  if (!(p.alpha_comm >= 0.0)) throw ValidationError("alpha_comm must be >= 0");
  if (!(p.beta_comm >= 0.0)) throw ValidationError("beta_comm must be >= 0");
  if (!(p.message_size > 0.0)) throw ValidationError("message_size must be > 0");
}

inline void validate(const ModelProfile& p) {
  if (p.by_gpus.empty()) throw ValidationError("profile '" + p.task_name + "' has no GPU-count entries");
  for (const auto& [gpus, params] : p.by_gpus) {
    if (gpus < 1) throw ValidationError("profile '" + p.task_name + "': GPU count key must be >= 1");
    validate(params.comp);
    validate(params.comm);
    if (!(params.delta >= 1.0)) throw ValidationError("profile '" + p.task_name + "': delta must be >= 1");
  }
  if (!(p.mem_base >= 0.0) || !(p.mem_per_sample >= 0.0)) {
    throw ValidationError("profile '" + p.task_name + "': memory fields must be >= 0");
  }
  if (p.max_batch < 1) throw ValidationError("profile '" + p.task_name + "': max_batch must be >= 1");
}

inline double comp_time(double batch, const CompParams& p) { return p.alpha_comp + p.beta_comp * batch; }

inline double comm_time(const CommParams& p) { return p.alpha_comm + p.beta_comm * p.message_size; }

// Per-step sub-batch under gradient accumulation; every step is charged the
// rounded-up size.
inline int sub_batch_for(int requested_batch, int accum_steps) {
  if (requested_batch < 1) throw DomainError("requested batch must be >= 1");
  if (accum_steps < 1) throw DomainError("accumulation steps must be >= 1");
  return (requested_batch + accum_steps - 1) / accum_steps;
}

// (s-1) compute-only steps followed by one step whose compute overlaps the
// all-reduce, combined as a delta-norm.
inline double overlapped_iter_time(double t_comp, double t_comm, int accum_steps, double delta) {
  const double hi = std::max(t_comp, t_comm);
  double last = hi;
  if (hi > 0.0) {
    // Scaled to keep pow() away from overflow for large delta.
    const double a = t_comp / hi;
    const double b = t_comm / hi;
    last = hi * std::pow(std::pow(a, delta) + std::pow(b, delta), 1.0 / delta);
  }
  return (accum_steps - 1) * t_comp + last;
}

inline double iter_time(int requested_batch, int accum_steps, const GpuCountParams& params) {
  const int sub = sub_batch_for(requested_batch, accum_steps);
  return overlapped_iter_time(comp_time(sub, params.comp), comm_time(params.comm), accum_steps, params.delta);
}

inline double iter_time(int requested_batch, int accum_steps, const ModelProfile& profile, int gpu_count) {
  return iter_time(requested_batch, accum_steps, profile.at(gpu_count));
}

inline double throughput(double batch, double iter_seconds) {
  if (!(iter_seconds > 0.0)) throw DomainError("iteration time must be positive");
  return batch / iter_seconds;
}

inline double shared_iter_time(double solo_iter, double xi) {
  if (!(xi >= 1.0)) throw ValidationError("interference ratio must be >= 1");
  if (!(solo_iter > 0.0)) throw DomainError("solo iteration time must be positive");
  return solo_iter * xi;
}

// Interference ratios for co-located job pairs. Lookup is order-sensitive:
// lookup(a, b) is the slowdown a suffers while sharing with b.
class InterferenceTable {
 public:
  InterferenceTable() = default;
  explicit InterferenceTable(double default_xi) : default_xi_(default_xi) { check(default_xi); }

  static InterferenceTable constant(double xi) { return InterferenceTable(xi); }

  double default_xi() const { return default_xi_; }

  void set_default(double xi) {
    check(xi);
    default_xi_ = xi;
  }

  void set_pair(const std::string& first, const std::string& second, double xi_first, double xi_second) {
    check(xi_first);
    check(xi_second);
    pairwise_[{first, second}] = {xi_first, xi_second};
  }

  double lookup(const std::string& self, const std::string& other) const {
    if (auto it = pairwise_.find({self, other}); it != pairwise_.end()) return it->second.first;
    if (auto it = pairwise_.find({other, self}); it != pairwise_.end()) return it->second.second;
    return default_xi_;
  }

  const std::map<std::pair<std::string, std::string>, std::pair<double, double>>& pairwise() const {
    return pairwise_;
  }

 private:
  static void check(double xi) {
    if (!(xi >= 1.0)) throw ValidationError("interference ratio must be >= 1, got " + std::to_string(xi));
  }

  double default_xi_ = 1.0;
  std::map<std::pair<std::string, std::string>, std::pair<double, double>> pairwise_;
};

}  // namespace gpushare

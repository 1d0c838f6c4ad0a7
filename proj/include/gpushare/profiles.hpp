#pragma once

// Synthetic default profiles for the six reference tasks. Compute terms are
// per-GPU and independent of the GPU count; the all-reduce term follows a ring
// cost with an intra-server link for jobs that fit on one server and a slower
// inter-server link otherwise.

#include <array>
#include <cmath>
#include <string_view>
#include <vector>

#include "gpushare/perf_model.hpp"

namespace gpushare {

struct LinkModel {
  double latency = 2e-5;     // s per ring step
  double bandwidth = 1e10;   // bytes per second
};

struct DefaultProfileOptions {
  int max_gpus = 64;
  int gpus_per_server = 4;
  double gpu_memory = 11e9;
  LinkModel intra{2e-5, 1e10};
  LinkModel inter{5e-5, 1.25e9};
};

inline CommParams ring_allreduce(int gpus, double message_size, const LinkModel& link) {
  if (gpus <= 1) return {0.0, 0.0, message_size};
  const double n = gpus;
  return {2.0 * (n - 1.0) * link.latency, 2.0 * (n - 1.0) / n / link.bandwidth, message_size};
}

struct TaskCostSheet {
  std::string_view name;
  double alpha_comp;
  double beta_comp;
  double message_size;
  double delta;
  double mem_base;
  double mem_per_sample;
};

inline constexpr std::array<TaskCostSheet, 6> kReferenceTasks{{
    {"bert", 0.020, 0.0080, 110e6, 1.5, 1.5e9, 0.15e9},
    {"cifar10", 0.005, 0.0004, 45e6, 2.0, 0.6e9, 0.01e9},
    {"deepspeech2", 0.025, 0.0100, 150e6, 1.5, 1.2e9, 0.15e9},
    {"imagenet", 0.010, 0.0030, 100e6, 2.0, 1.0e9, 0.06e9},
    {"ncf", 0.004, 0.00002, 20e6, 1.2, 0.4e9, 0.001e9},
    {"yolov3", 0.030, 0.0150, 250e6, 1.8, 1.5e9, 0.30e9},
}};

inline ModelProfile make_profile(const TaskCostSheet& sheet, const DefaultProfileOptions& opt = {}) {
  ModelProfile p;
  p.task_name = std::string(sheet.name);
  p.mem_base = sheet.mem_base;
  p.mem_per_sample = sheet.mem_per_sample;
  p.max_batch = std::max(1, static_cast<int>(std::floor((opt.gpu_memory - sheet.mem_base) / sheet.mem_per_sample)));
  for (int g = 1; g <= opt.max_gpus; ++g) {
    const LinkModel& link = g <= opt.gpus_per_server ? opt.intra : opt.inter;
    p.by_gpus[g] = GpuCountParams{{sheet.alpha_comp, sheet.beta_comp}, ring_allreduce(g, sheet.message_size, link),
                                  sheet.delta};
  }
  return p;
}

inline ProfileSet default_profiles(const DefaultProfileOptions& opt = {}) {
  ProfileSet out;
  for (const auto& sheet : kReferenceTasks) out.emplace(std::string(sheet.name), make_profile(sheet, opt));
  return out;
}

inline std::vector<std::string> reference_task_names() {
  std::vector<std::string> out;
  for (const auto& sheet : kReferenceTasks) out.emplace_back(sheet.name);
  return out;
}

}  // namespace gpushare

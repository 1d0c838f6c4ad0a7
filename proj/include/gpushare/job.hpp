#pragma once

#include <string>

#include "gpushare/cluster.hpp"
#include "gpushare/errors.hpp"

namespace gpushare {

struct JobSpec {
  JobId job_id = 0;
  std::string task_name;
  double arrival = 0.0;  // s
  int gpus = 1;
  int batch_per_gpu = 1;
  int iterations = 1;

  bool operator==(const JobSpec&) const = default;
};

inline void validate(const JobSpec& j) {
  const std::string who = "job " + std::to_string(j.job_id);
  if (j.gpus < 1) throw ValidationError(who + ": gpus must be >= 1");
  if (j.iterations < 1) throw ValidationError(who + ": iterations must be >= 1");
  if (j.batch_per_gpu < 1) throw ValidationError(who + ": batch_per_gpu must be >= 1");
  if (!(j.arrival >= 0.0)) throw ValidationError(who + ": arrival must be >= 0");
  if (j.task_name.empty()) throw ValidationError(who + ": task_name is empty");
}

// Jobs with more than this many GPUs are reported as large.
inline constexpr int kLargeJobGpus = 4;

inline bool is_large(const JobSpec& j) { return j.gpus > kLargeJobGpus; }

}  // namespace gpushare

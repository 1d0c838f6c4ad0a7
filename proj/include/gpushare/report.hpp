#pragma once

// Result tables. Column names are a stable interface:
//
// jobs.csv     job_id,task_name,gpus,batch_per_gpu,iterations,arrival,start,
//              completion,jct,queuing,sub_batch,accum_steps,preemptions,shared
// summary.csv  policy,jobs,average_jct,makespan,average_queuing,
//              large_jobs,large_average_jct,large_average_queuing,
//              small_jobs,small_average_jct,small_average_queuing
//
// All times are seconds.

#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gpushare/simulator.hpp"

namespace gpushare {

inline constexpr const char* kJobsHeader =
    "job_id,task_name,gpus,batch_per_gpu,iterations,arrival,start,completion,jct,queuing,sub_batch,accum_steps,"
    "preemptions,shared";

inline constexpr const char* kSummaryHeader =
    "policy,jobs,average_jct,makespan,average_queuing,large_jobs,large_average_jct,large_average_queuing,"
    "small_jobs,small_average_jct,small_average_queuing";

namespace detail {

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace detail

inline void write_jobs_csv(std::ostream& out, const SimMetrics& m) {
  out << kJobsHeader << '\n';
  for (const auto& r : m.jobs) {
    out << r.spec.job_id << ',' << r.spec.task_name << ',' << r.spec.gpus << ',' << r.spec.batch_per_gpu << ','
        << r.spec.iterations << ',' << detail::num(r.spec.arrival) << ',' << detail::num(r.start_time) << ','
        << detail::num(r.completion_time) << ',' << detail::num(r.jct) << ',' << detail::num(r.queuing_time) << ','
        << r.sub_batch << ',' << r.accum_steps << ',' << r.preemptions << ',' << (r.shared ? 1 : 0) << '\n';
  }
}

inline std::string summary_row(const SimMetrics& m) {
  std::ostringstream os;
  os << m.policy << ',' << m.jobs.size() << ',' << detail::num(m.average_jct) << ',' << detail::num(m.makespan) << ','
     << detail::num(m.average_queuing) << ',' << m.large.jobs << ',' << detail::num(m.large.average_jct) << ','
     << detail::num(m.large.average_queuing) << ',' << m.small.jobs << ',' << detail::num(m.small.average_jct) << ','
     << detail::num(m.small.average_queuing);
  return os.str();
}

inline void write_summary_csv(std::ostream& out, const std::vector<SimMetrics>& runs) {
  out << kSummaryHeader << '\n';
  for (const auto& m : runs) out << summary_row(m) << '\n';
}

inline nlohmann::json to_json(const ClassSummary& s) {
  return {{"jobs", s.jobs}, {"average_jct", s.average_jct}, {"average_queuing", s.average_queuing}};
}

inline nlohmann::json metrics_json(const SimMetrics& m) {
  nlohmann::json tasks = nlohmann::json::object();
  for (const auto& [task, s] : m.by_task) tasks[task] = to_json(s);
  return {{"policy", m.policy},
          {"jobs", m.jobs.size()},
          {"average_jct", m.average_jct},
          {"makespan", m.makespan},
          {"average_queuing", m.average_queuing},
          {"large", to_json(m.large)},
          {"small", to_json(m.small)},
          {"by_task", tasks},
          {"events", m.events},
          {"scheduling_passes", m.passes}};
}

}  // namespace gpushare

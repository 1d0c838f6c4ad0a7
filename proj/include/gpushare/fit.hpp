#pragma once

// Least-squares calibration of iteration-time parameters from measured
// throughput. For each GPU count the unknowns are (alpha_comp, beta_comp,
// t_comm, delta); the all-reduce cost is recovered only as an aggregate and is
// stored as alpha_comm with beta_comm = 0.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gpushare/errors.hpp"
#include "gpushare/perf_model.hpp"

namespace gpushare {

struct ThroughputSample {
  int gpu_count = 1;
  double batch = 0.0;       // per-GPU samples per iteration
  double throughput = 0.0;  // samples per second
};

struct FitOptions {
  double mem_base = 0.0;
  double mem_per_sample = 0.0;
  int max_batch = 0;  // 0: use the largest measured batch
  int max_iterations = 400;
};

struct FitResult {
  ModelProfile profile;
  double residual = 0.0;  // RMS relative throughput error over all samples
  std::map<int, double> residual_by_gpus;
};

namespace detail {

using FitVector = Eigen::Matrix<double, 4, 1>;

inline FitVector project(FitVector p) {
  p(0) = std::max(p(0), 0.0);
  p(1) = std::max(p(1), 1e-12);
  p(2) = std::max(p(2), 0.0);
  p(3) = std::clamp(p(3), 1.0, 64.0);
  return p;
}

inline GpuCountParams to_params(const FitVector& p) {
  GpuCountParams out;
  out.comp = {p(0), p(1)};
  out.comm = {p(2), 0.0, 1.0};
  out.delta = p(3);
  return out;
}

inline Eigen::VectorXd relative_residuals(const FitVector& p, std::span<const ThroughputSample> samples) {
  const GpuCountParams params = to_params(p);
  Eigen::VectorXd r(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const double t = overlapped_iter_time(comp_time(s.batch, params.comp), comm_time(params.comm), 1, params.delta);
    r(static_cast<Eigen::Index>(i)) = (s.batch / t - s.throughput) / s.throughput;
  }
  return r;
}

// Damped Gauss-Newton with a central-difference Jacobian and box projection.
inline FitVector levenberg_marquardt(FitVector p, std::span<const ThroughputSample> samples, int max_iterations,
                                     double& cost_out) {
  const auto m = static_cast<Eigen::Index>(samples.size());
  Eigen::VectorXd r = relative_residuals(p, samples);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (int it = 0; it < max_iterations && cost > 1e-30; ++it) {
    Eigen::MatrixXd jac(m, 4);
    for (int j = 0; j < 4; ++j) {
      const double h = 1e-6 * std::max(std::abs(p(j)), 1e-4);
      FitVector hi = p;
      FitVector lo = p;
      hi(j) += h;
      lo(j) -= h;
      jac.col(j) = (relative_residuals(hi, samples) - relative_residuals(lo, samples)) / (2.0 * h);
    }
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const FitVector grad = jac.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 20; ++attempt) {
      Eigen::Matrix4d damped = jtj;
      for (int j = 0; j < 4; ++j) damped(j, j) += lambda * std::max(jtj(j, j), 1e-12);
      const FitVector step = damped.ldlt().solve(-grad);
      const FitVector trial = project(p + step);
      const Eigen::VectorXd trial_r = relative_residuals(trial, samples);
      const double trial_cost = trial_r.squaredNorm();
      if (trial_cost < cost) {
        const double gain = cost - trial_cost;
        p = trial;
        r = trial_r;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (gain <= 1e-16 * std::max(cost, 1e-300)) it = max_iterations;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  cost_out = cost;
  return p;
}

inline FitVector fit_group(std::span<const ThroughputSample> samples, int max_iterations, double& cost) {
  // Start from an ordinary least-squares line through iteration time vs batch.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& s : samples) {
    const double t = s.batch / s.throughput;
    sx += s.batch;
    sy += t;
    sxx += s.batch * s.batch;
    sxy += s.batch * t;
  }
  const double n = static_cast<double>(samples.size());
  const double denom = n * sxx - sx * sx;
  double slope = denom > 0 ? (n * sxy - sx * sy) / denom : 0.0;
  double intercept = (sy - slope * sx) / n;
  slope = std::max(slope, 1e-9);
  intercept = std::max(intercept, 1e-6);

  FitVector best = FitVector::Zero();
  cost = std::numeric_limits<double>::infinity();
  for (double delta0 : {1.0, 1.5, 2.0, 3.0, 5.0}) {
    for (double split : {0.25, 0.5, 0.75}) {
      FitVector start;
      start << intercept * split, slope, intercept * (1.0 - split), delta0;
      double c = 0;
      const FitVector p = levenberg_marquardt(project(start), samples, max_iterations, c);
      if (c < cost) {
        cost = c;
        best = p;
      }
    }
  }
  return best;
}

}  // namespace detail

inline FitResult fit_profile(const std::string& task_name, std::span<const ThroughputSample> measurements,
                             const FitOptions& options = {}) {
  if (measurements.empty()) throw FitError("no measurements for '" + task_name + "'");
  std::map<int, std::vector<ThroughputSample>> groups;
  for (const auto& m : measurements) {
    if (m.gpu_count < 1) throw FitError("gpu_count must be >= 1");
    if (!(m.batch > 0.0) || !(m.throughput > 0.0)) {
      throw FitError("batch and throughput must be positive (gpu_count " + std::to_string(m.gpu_count) + ")");
    }
    groups[m.gpu_count].push_back(m);
  }

  FitResult result;
  result.profile.task_name = task_name;
  result.profile.mem_base = options.mem_base;
  result.profile.mem_per_sample = options.mem_per_sample;
  double largest_batch = 0.0;
  double total_cost = 0.0;
  for (const auto& [gpus, samples] : groups) {
    std::set<double> batches;
    for (const auto& s : samples) {
      batches.insert(s.batch);
      largest_batch = std::max(largest_batch, s.batch);
    }
    if (batches.size() < 3) {
      throw FitError("gpu_count " + std::to_string(gpus) + ": batch dimension under-determined, need >= 3 distinct " +
                     "batch sizes, got " + std::to_string(batches.size()));
    }
    double cost = 0;
    const auto p = detail::fit_group(samples, options.max_iterations, cost);
    result.profile.by_gpus[gpus] = detail::to_params(p);
    result.residual_by_gpus[gpus] = std::sqrt(cost / static_cast<double>(samples.size()));
    total_cost += cost;
  }
  result.profile.max_batch = options.max_batch > 0 ? options.max_batch : static_cast<int>(largest_batch);
  result.residual = std::sqrt(total_cost / static_cast<double>(measurements.size()));
  return result;
}

}  // namespace gpushare

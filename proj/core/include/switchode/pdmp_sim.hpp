// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Core>

#include "switchode/env_chain.hpp"
#include "switchode/flows.hpp"

namespace switchode {

struct SimConfig {
  double epsilon = 0.1;    // environment acceleration: sigma(t / epsilon)
  double horizon = 100.0;  // total model time
  double burn_in = 20.0;   // discarded prefix
  std::uint64_t seed = 0x5EEDC0DE0001ULL;
  int n_traj = 1;
  int batch_count = 16;
  double sample_dt = 0.0;  // observation grid; 0 picks epsilon / 4

  void validate() const;
  double grid_dt() const;
};

struct TrajectoryEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t effective_samples = 0;  // pooled batch count
  SimConfig config;                    // echo
  Eigen::MatrixXd batch_means;         // n_traj x batch_count
};

// Observable on region x environment states.
using Observable = std::function<double(const Eigen::VectorXd&, int)>;

// Observer receives (t, x, s); at a jump time it fires twice, first with the
// pre-jump state (left limit) and then with the post-jump state.
using Observer = std::function<void(double, const Eigen::VectorXd&, int)>;

// Simulates x'(t) = F_{sigma(t/eps)}(x(t)) with exact jump-chain switching;
// between jumps the flow is exact for exact kinds, adaptive RK otherwise.
// The observer sees the initial point, every jump instant and the sampling
// grid. Deterministic given (cfg.seed, stream_index).
void simulate(const VectorFieldSet& fields, const EnvKind& env,
              const SimConfig& cfg, const Eigen::VectorXd& x0, int s0,
              const Observer& observer, std::uint64_t stream_index = 0);

// Time-average of f over [burn_in, horizon], pooled over n_traj independent
// trajectories, batch-means standard error. Trajectories run in parallel
// with a deterministic (index-ordered) reduction.
TrajectoryEstimate ergodic_average(const VectorFieldSet& fields, const EnvKind& env,
                                   const SimConfig& cfg, const Observable& f,
                                   const Eigen::VectorXd& x0, int s0);

struct FixedTimeResult {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
};

// Monte Carlo E f(X_t, sigma(t/eps)) over independent trajectories.
FixedTimeResult fixed_time_expectation(const VectorFieldSet& fields,
                                       const EnvKind& env, const Observable& f,
                                       double t, double epsilon,
                                       std::uint64_t n_samples, std::uint64_t seed,
                                       const Eigen::VectorXd& x0, int s0);

struct ContractionReport {
  double rate_estimate = 0.0;  // fitted decay rate of the log gap
  double eta = 0.0;            // p0 * inf_s a11
  double prefactor = 1.0;      // p1 / p0
  double max_bound_ratio = 0.0;  // sup_events gap / (prefactor e^{-eta t} gap0)
  bool bound_satisfied = true;   // with tolerance factor 1 + 1e-9
  double gap0 = 0.0;
};

// Two logistic copies driven by the same environment path.
ContractionReport coupled_contraction(const VectorFieldSet& logistic_fields,
                                      const EnvKind& env, const SimConfig& cfg,
                                      double x0, double y0, int s0);

// Worker count honoring the SWITCHODE_THREADS cap.
int worker_count();

// Deterministic parallel loop: fn(i) for i in [0, n); work is partitioned
// statically so results written per-index are scheduling-independent.
void parallel_for_indexed(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace switchode

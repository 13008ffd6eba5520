// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#pragma once

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "switchode/flows.hpp"
#include "switchode/rng.hpp"

namespace switchode {

struct LinearSub {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;  // may be empty (zero offset)
};
struct LogisticSub {
  double a10 = 0.0, a11 = 0.0;
};
struct GeneralSub {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f;
  double rk_tol = 1e-12;
};
using Subflow = std::variant<LinearSub, LogisticSub, GeneralSub>;

// Randomized splitting cycle: subflows applied in order 1..N for durations
// eps tau_k / N with tau_k i.i.d. Exp(1). A cycle's elapsed time is
// eps (sum tau_k) / N, mean eps, so n cycles track the pi-averaged field
// (1/N) sum_k F_k over model time n eps.
struct SplitScheme {
  std::vector<Subflow> subflows;
  double epsilon = 0.1;
  Region region;
  int dim = 0;
};

SplitScheme make_split(std::vector<Subflow> subflows, double epsilon, Region region);

Eigen::VectorXd subflow_apply(const Subflow& sub, const Eigen::VectorXd& x, double t);

struct SplitStepResult {
  Eigen::VectorXd x;
  double elapsed = 0.0;
};

SplitStepResult split_step(const SplitScheme& scheme, const Eigen::VectorXd& x,
                           Rng& rng);

// Degenerate configuration with tau_k := 1: classical Lie splitting with
// step eps / N per field. Provided for testing.
Eigen::VectorXd lie_step(const SplitScheme& scheme, const Eigen::VectorXd& x);

// Flow of the pi-averaged field (1/N) sum_k F_k; exact when all subflows are.
Eigen::VectorXd split_reference_flow(const SplitScheme& scheme,
                                     const Eigen::VectorXd& x0, double t);

struct WeakErrorRow {
  double eps = 0.0;
  std::int64_t n_steps = 0;
  double t_effective = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  double reference = 0.0;
  double error = 0.0;  // |mean - reference|
};

// Weak error at fixed t (n = round(t / eps) cycles per epsilon).
std::vector<WeakErrorRow> weak_error(const SplitScheme& scheme,
                                     const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& x0, double t,
                                     const std::vector<double>& eps_list,
                                     std::uint64_t n_mc, std::uint64_t seed);

struct RichardsonResult {
  double extrapolated = 0.0;  // 2 E_{eps/2} - E_eps
  double std_error = 0.0;     // sqrt(4 se_half^2 + se_full^2)
  WeakErrorRow at_eps;
  WeakErrorRow at_half;
};

RichardsonResult richardson(const SplitScheme& scheme,
                            const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x0, double t, double eps,
                            std::uint64_t n_mc, std::uint64_t seed);

}  // namespace switchode

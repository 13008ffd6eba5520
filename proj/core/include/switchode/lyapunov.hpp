// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "switchode/env_chain.hpp"
#include "switchode/pdmp_sim.hpp"

namespace switchode {

// z'(t) = A(sigma(t/eps)) z(t) with cooperative matrices and an averaged
// matrix Abar that is irreducible in the path sense.
struct SwitchedLinearSystem {
  std::vector<Eigen::MatrixXd> a;
  EnvKind env;
};

SwitchedLinearSystem make_switched_linear(std::vector<Eigen::MatrixXd> a,
                                          EnvKind env);

struct PerronPair {
  double lambda_max = 0.0;
  Eigen::VectorXd xbar;  // right eigenvector in the simplex
  Eigen::VectorXd ybar;  // left eigenvector, xbar . ybar = 1
};

// Power iteration on e^{h Abar} (h = 1/(1 + max |diag Abar|)) with a
// Rayleigh-quotient polish; requires Abar irreducible.
PerronPair perron_matrix(const Eigen::MatrixXd& abar);
PerronPair perron(const SwitchedLinearSystem& sys);

// Averaged matrix sum_s pi_s A(s).
Eigen::MatrixXd averaged_matrix(const SwitchedLinearSystem& sys);

// Projective field set F_s(theta) = A(s) theta - (1 . A(s) theta) theta.
VectorFieldSet projective_fields(const SwitchedLinearSystem& sys);

struct LyapunovEstimate {
  TrajectoryEstimate log_growth;  // (sum of log 1.z increments) / time
  TrajectoryEstimate ergodic;     // time-average of 1 . A(s) theta, same paths
};

// Monte Carlo top Lyapunov exponent with renormalization z <- z / (1 . z)
// at every jump and grid point. Both estimators are accumulated on the same
// trajectories; they differ only by the observation-grid quadrature.
LyapunovEstimate lyapunov_mc(const SwitchedLinearSystem& sys, const SimConfig& cfg,
                             const Eigen::VectorXd& theta0, int s0);

// c1 = sum_s pi_s ybar^T Q^{-1}(A)(s) (xbar ybar^T - I) A(s) xbar,
// with Q^{-1} applied entrywise across environment states.
double c1_closed_form(const SwitchedLinearSystem& sys, const PerronPair& pp);

struct SweepRow {
  double p = 0.0;
  double lambda_max = 0.0;
  double c1 = 0.0;
};

// Two-state environment with unit total rate, stationary law (p, 1-p):
// per grid point, the Perron pair of p A0 + (1-p) A1 and the closed-form
// c1. Deterministic.
std::vector<SweepRow> sweep_p(const Eigen::MatrixXd& a0, const Eigen::MatrixXd& a1,
                              const std::vector<double>& p_grid);

std::vector<double> default_p_grid();  // 0.01 : 0.01 : 0.99

struct CertificateConfig {
  std::vector<double> p_grid;    // empty: default grid
  std::vector<double> eps_grid;  // candidate accelerations
  SimConfig mc;                  // Monte Carlo budget per candidate
  double z_confidence = 2.3263048435;  // one-sided 99%
};

struct Certificate {
  bool found = false;
  double delta = 0.0;
  double p = 0.0;
  double eps = 0.0;
  double lambda_star = 0.0;         // max_p lambda_max(p), analytic
  double p_star = 0.0;              // argmax
  double max_shifted_lambda = 0.0;  // lambda_star + delta, must be < 0
  double lambda_hat = 0.0;          // MC estimate of Lambda_eps(p_star)
  double std_error = 0.0;
  double lcb99 = 0.0;  // 99% lower bound of Lambda_eps + delta
  std::uint64_t seed = 0;
  std::vector<SweepRow> sweep;  // the analytic table used
};

// Searches (delta, p, eps) such that all shifted convex combinations stay
// stable while the Monte Carlo exponent is positive with 99% confidence.
// A failed search reports found = false; it is a result, not an error.
Certificate destabilization_certificate(const Eigen::MatrixXd& a0,
                                        const Eigen::MatrixXd& a1,
                                        const CertificateConfig& cfg);

}  // namespace switchode

// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "switchode/env_chain.hpp"
#include "switchode/flows.hpp"
#include "switchode/pdmp_sim.hpp"

namespace switchode {

// Observable f(x, s), smooth in x. When no analytic gradient is supplied,
// central differences with step fd_step * (1 + |x|) are used, restricted to
// the region's admissible directions.
struct ObservableF {
  int states = 0;
  std::function<double(const Eigen::VectorXd&, int)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, int)> gradient;  // optional
  double fd_step = 1e-5;
};

// f(x, s) = consts[s] + grads[s] . x
ObservableF per_state_affine(Eigen::VectorXd consts,
                             std::vector<Eigen::VectorXd> grads);

struct QuadratureDiagnostics {
  double fd_step = 0.0;        // outer central-difference step
  double fd_delta = 0.0;       // |c1(h) - c1(h/2)| from step halving
  double tail_bound = 0.0;     // largest linearized tail added in quadrature
  double equilibrium_residual = 0.0;
};

struct ExpansionReport {
  double mu0_f = 0.0;  // pi f evaluated at xbar
  double c1 = 0.0;     // Richardson-refined central-difference value
  QuadratureDiagnostics diagnostics;
  bool unconverged = false;
};

struct C1Options {
  double fd_step = 0.0;  // 0: 1e-5 * (1 + |xbar|)
  double unconverged_tol = 1e-6;
  FlowIntegralOptions quadrature;
  EquilibriumOptions equilibrium;
  Eigen::VectorXd x_init;  // empty: region center
};

// First-order coefficient of the invariant-measure expansion:
// c1 = pi L_c Q^{-1}( L_c h - f )(xbar), h built from the averaged flow.
ExpansionReport c1_generic(const VectorFieldSet& model, const EnvKind& env,
                           const ObservableF& f, const C1Options& opts = {});

// One-dimensional alternative for h by spatial quadrature:
// x -> integral_xbar^x (pi f(y) - pi f(xbar)) / Fbar(y) dy.
// The integrand's removable singularity at xbar is evaluated by its limit.
std::function<double(double)> h_dim1(const VectorFieldSet& model, const EnvKind& env,
                                     const ObservableF& f, double xbar);

struct Order0 {
  double p0 = 0.0;  // pi f(phibar_t(x))
  double s0 = 0.0;  // (Q_tau f(x, .))_s - pi f(x) at the supplied layer time
};

Order0 semigroup_order0(const VectorFieldSet& model, const EnvKind& env,
                        const ObservableF& f, double t, double layer_tau,
                        const Eigen::VectorXd& x, int s);

struct Order1Options {
  double fd_step = 1e-5;
  double refine_tol = 1e-5;
  double rk_tol = 1e-12;
};

struct Order1Result {
  double value = 0.0;       // P_t^{(1)} f(x, s)
  double b1 = 0.0;          // boundary term b_1(t, x, s)
  double s_integral = 0.0;  // int_0^inf pi(L_c S_r^{(0)} f)(x) dr
  double b_integral = 0.0;  // int_0^t pi(L_c b_1)(r, phibar_{t-r}(x)) dr
  double refinement_delta = 0.0;
  bool unconverged = false;
};

Order1Result semigroup_order1(const VectorFieldSet& model, const EnvKind& env,
                              const ObservableF& f, double t,
                              const Eigen::VectorXd& x, int s,
                              const Order1Options& opts = {});

struct SlopeFit {
  double slope = 0.0;      // log-log slope of |mu_eps f - mu0 f| vs eps
  double intercept = 0.0;
  std::vector<double> residuals;  // log-log fit residuals
  double fitted_c1 = 0.0;  // weighted LS fit of mu_eps f - mu0 f = c1 eps + K eps^2
  double fitted_c1_se = 0.0;
  double fitted_k = 0.0;
  double mu0_f = 0.0;
  std::vector<double> eps;
  std::vector<TrajectoryEstimate> estimates;
};

// Ergodic averages at each epsilon plus the weighted first-order fit.
SlopeFit mc_slope_check(const VectorFieldSet& model, const EnvKind& env,
                        const ObservableF& f, const std::vector<double>& eps_list,
                        const SimConfig& base_cfg, const Eigen::VectorXd& x0, int s0);

// pi-weighted observable as a scalar field (value and gradient).
ScalarField pi_average_field(const ObservableF& f, const Eigen::VectorXd& pi,
                             const Eigen::MatrixXd& basis);

// Gradient of f(., s), analytic when available, otherwise central FD along
// the basis directions.
Eigen::VectorXd observable_gradient(const ObservableF& f, const Eigen::VectorXd& x,
                                    int s, const Eigen::MatrixXd& basis);

// Adaptive Simpson quadrature on [a, b] (b < a gives the signed integral).
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth = 40);

}  // namespace switchode

// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace switchode {

// Declared forward-invariant compact region. Boxes cover intervals (d = 1);
// the probability simplex carries the projective dynamics.
struct Region {
  enum class Kind { Box, Simplex };
  Kind kind = Kind::Box;
  int dim = 0;
  Eigen::VectorXd lo, hi;  // box bounds (unused for simplex)

  static Region box(Eigen::VectorXd lo, Eigen::VectorXd hi);
  static Region interval(double lo, double hi);
  static Region simplex(int dim);

  bool contains(const Eigen::VectorXd& x, double tol) const;
  double diameter() const;
  Eigen::VectorXd center() const;
};

// F_s(x) = A_s x + b_s; exact flow through the augmented matrix exponential.
struct LinearFields {
  std::vector<Eigen::MatrixXd> a;
  std::vector<Eigen::VectorXd> b;  // empty means zero offsets
};

// d = 1, F_s(x) = x (a10_s - a11_s x); exact logistic flow.
struct LogisticFields {
  Eigen::VectorXd a10, a11;
};

// F_s(theta) = A_s theta - (1 . A_s theta) theta on the simplex, with
// cooperative A_s; exact flow by renormalizing e^{tA_s}.
struct ProjectiveFields {
  std::vector<Eigen::MatrixXd> a;
};

// Arbitrary per-state fields, integrated with adaptive RK.
struct GeneralFields {
  int states = 0;
  std::function<Eigen::VectorXd(int, const Eigen::VectorXd&)> f;
  double rk_tol = 1e-10;
};

struct VectorFieldSet {
  int dim = 0;
  Region region;
  std::variant<LinearFields, LogisticFields, ProjectiveFields, GeneralFields> fields;

  int env_states() const;
  Eigen::VectorXd eval(int s, const Eigen::VectorXd& x) const;
  Eigen::MatrixXd jacobian(int s, const Eigen::VectorXd& x) const;
  bool is_exact_kind() const;
};

VectorFieldSet make_linear(std::vector<Eigen::MatrixXd> a,
                           std::vector<Eigen::VectorXd> b, Region region);
// Region defaults to [p0, p1] = [min a10/a11, max a10/a11].
VectorFieldSet make_logistic(Eigen::VectorXd a10, Eigen::VectorXd a11,
                             std::optional<Region> region = std::nullopt);
VectorFieldSet make_projective(std::vector<Eigen::MatrixXd> a);
VectorFieldSet make_general(int states,
                            std::function<Eigen::VectorXd(int, const Eigen::VectorXd&)> f,
                            Region region, double rk_tol = 1e-10);

// pi-weighted mean field, packaged as a single-state VectorFieldSet of the
// same kind (so exact flows stay exact).
VectorFieldSet averaged(const VectorFieldSet& vfs, const Eigen::VectorXd& pi);

Eigen::VectorXd flow(const VectorFieldSet& vfs, int s, const Eigen::VectorXd& x0,
                     double t);

struct ProjectiveFlow {
  Eigen::VectorXd theta;
  double log_mass;  // log(1 . e^{tA} x0)
};
ProjectiveFlow flow_projective(const VectorFieldSet& vfs, int s,
                               const Eigen::VectorXd& x0, double t);

inline Eigen::VectorXd averaged_flow(const VectorFieldSet& avg,
                                     const Eigen::VectorXd& x0, double t) {
  return flow(avg, 0, x0, t);
}

struct Equilibrium {
  Eigen::VectorXd xbar;
  double residual;
};

struct EquilibriumOptions {
  double residual_tol = 1e-10;
  double dx_tol = 1e-12;
  double max_horizon = 1e5;
  int max_newton = 80;
};

// Integrates the averaged flow into the attractor's basin, then polishes
// with damped Newton (finite-difference Jacobian for general fields).
Equilibrium find_equilibrium(const VectorFieldSet& avg, const Eigen::VectorXd& x_init,
                             const EquilibriumOptions& opts = {});

struct ScalarField {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

struct FlowIntegralOptions {
  double rk_tol = 1e-13;
  double cut_frac = 1e-9;  // stop when |x - xbar| < cut_frac * diam(region)
  double max_horizon = 1e4;
};

struct FlowIntegralResult {
  double value = 0.0;
  double tail = 0.0;
  double truncation_estimate = 0.0;
  double horizon = 0.0;
};

// integral_0^inf ( g(xbar) - g(phi_r(x0)) ) dr along the averaged flow,
// with a linearized tail once the trajectory is within the cut distance.
FlowIntegralResult flow_integral(const VectorFieldSet& avg, const ScalarField& g,
                                 const Eigen::VectorXd& x0, const Equilibrium& eq,
                                 const FlowIntegralOptions& opts = {});

struct FlowIntegralGradResult {
  double value = 0.0;
  Eigen::VectorXd grad_coeffs;  // directional derivatives on basis columns
  double tail = 0.0;
  double horizon = 0.0;
};

// Same integral plus its (tangential) gradient via the variational flow.
FlowIntegralGradResult flow_integral_grad(const VectorFieldSet& avg,
                                          const ScalarField& g,
                                          const Eigen::VectorXd& x0,
                                          const Equilibrium& eq,
                                          const Eigen::MatrixXd& basis,
                                          const FlowIntegralOptions& opts = {});

// Admissible finite-difference directions: identity for boxes, an
// orthonormal basis of {v : 1.v = 0} for the simplex.
Eigen::MatrixXd fd_basis(const Region& region);

// Central-difference gradient restricted to the basis directions,
// returned as a full-space vector (basis * coefficients).
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, const Eigen::MatrixXd& basis,
                            double h);

// --- small ODE toolkit (Dormand-Prince 5(4)) ---

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double initial_step = 0.0;  // 0: choose automatically
  double max_step = 0.0;      // 0: unlimited
};

using OdeRhs = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;

Eigen::VectorXd integrate_rk45(const OdeRhs& rhs, Eigen::VectorXd y0, double t0,
                               double t1, const OdeOptions& opts = {});

struct OdeUntilResult {
  Eigen::VectorXd y;
  double t = 0.0;
  bool stopped = false;  // stop predicate fired before t_max
};

OdeUntilResult integrate_rk45_until(
    const OdeRhs& rhs, Eigen::VectorXd y0, double t0, double t_max,
    const std::function<bool(double, const Eigen::VectorXd&)>& stop,
    const OdeOptions& opts = {});

// Exact elementary flows, shared with the splitting scheme.
Eigen::VectorXd linear_exact_flow(const Eigen::MatrixXd& a, const Eigen::VectorXd* b,
                                  const Eigen::VectorXd& x0, double t);
double logistic_exact_flow(double a10, double a11, double x0, double t);

// Flow plus variational columns: returns phi_t(x) and D phi_t(x) * basis.
struct VariationalFlow {
  Eigen::VectorXd x;
  Eigen::MatrixXd psi;
};
VariationalFlow variational_flow(const VectorFieldSet& avg, const Eigen::VectorXd& x0,
                                 double t, const Eigen::MatrixXd& basis,
                                 double rk_tol = 1e-12);

}  // namespace switchode

// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#pragma once

#include <optional>

#include <Eigen/Core>

#include "switchode/env_chain.hpp"
#include "switchode/expansion.hpp"
#include "switchode/pdmp_sim.hpp"

namespace switchode {

// Per-state coefficients of the logistic resident and the rare invader:
// resident x' = x (a10 - a11 x), invader growth observable a20 + a21 x.
struct LVCoefficients {
  Eigen::VectorXd a10, a11, a20, a21;
  int states() const { return static_cast<int>(a10.size()); }
  double p0() const { return (a10.array() / a11.array()).minCoeff(); }
  double p1() const { return (a10.array() / a11.array()).maxCoeff(); }
};

LVCoefficients make_lv(Eigen::VectorXd a10, Eigen::VectorXd a11,
                       Eigen::VectorXd a20, Eigen::VectorXd a21);

VectorFieldSet lv_logistic_fields(const LVCoefficients& coef,
                                  std::optional<Region> region = std::nullopt);

// f(x, s) = a20_s + a21_s x
ObservableF lv_invasion_observable(const LVCoefficients& coef);

// Ergodic average of the invader growth rate along the resident trajectory.
TrajectoryEstimate invasion_rate_mc(const LVCoefficients& coef, const EnvKind& env,
                                    const SimConfig& cfg, double x0, int s0);

// c1 = (abar21 abar10^2 / abar11) *
//      sum_s pi_s (a10/abar10 - a11/abar11)_s Q^{-1}(a11/abar11 - a21/abar21)(s)
// evaluated in a form that stays finite when abar21 = 0.
double c1_closed_form(const LVCoefficients& coef, const EnvKind& env);

// The pi-integral factor alone (requires abar21 != 0); used to compare with
// the resampling-kernel four-term reduction.
double c1_integral_factor(const LVCoefficients& coef, const EnvKind& env);

struct SignReport {
  int sign_c1 = 0;       // -1 / 0 / +1, zero when |c1| < 1e-12
  int sign_indicator = 0;  // sign of a11^1 a21^0 - a11^0 a21^1 after relabeling
  bool match = false;
  bool asserted = false;  // the comparison assumes abar21 < 0 (competitive)
  bool swapped = false;   // states relabeled to get a11^1/a10^1 >= a11^0/a10^0
  double c1 = 0.0;
  double indicator = 0.0;
  double p_used = 0.0;
};

// Two-state environment with rates (p, 1-p). Relabels states to the
// ordering the sign comparison assumes, then compares sign(c1) with
// sign(a11^1 a21^0 - a11^0 a21^1). Ties below 1e-12 report zero-sign.
SignReport sign_analysis(const LVCoefficients& coef, double p);

}  // namespace switchode

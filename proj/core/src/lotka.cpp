// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#include "switchode/lotka.hpp"

#include <cmath>

#include "switchode/errors.hpp"

namespace switchode {

LVCoefficients make_lv(Eigen::VectorXd a10, Eigen::VectorXd a11,
                       Eigen::VectorXd a20, Eigen::VectorXd a21) {
  const Eigen::Index n = a10.size();
  if (n == 0 || a11.size() != n || a20.size() != n || a21.size() != n)
    throw ValidationError("make_lv: coefficient size mismatch");
  if (!a10.allFinite() || !a11.allFinite() || !a20.allFinite() || !a21.allFinite())
    throw NonFinite("make_lv: non-finite coefficients");
  if ((a11.array() <= 0.0).any())
    throw ValidationError("make_lv: a11 must be positive");
  if ((a10.array() / a11.array()).minCoeff() <= 0.0)
    throw ValidationError("make_lv: inf a10/a11 must be positive");
  return LVCoefficients{std::move(a10), std::move(a11), std::move(a20),
                        std::move(a21)};
}

VectorFieldSet lv_logistic_fields(const LVCoefficients& coef,
                                  std::optional<Region> region) {
  return make_logistic(coef.a10, coef.a11, std::move(region));
}

ObservableF lv_invasion_observable(const LVCoefficients& coef) {
  std::vector<Eigen::VectorXd> grads;
  for (int s = 0; s < coef.states(); ++s)
    grads.push_back(Eigen::VectorXd::Constant(1, coef.a21[s]));
  return per_state_affine(coef.a20, std::move(grads));
}

TrajectoryEstimate invasion_rate_mc(const LVCoefficients& coef, const EnvKind& env,
                                    const SimConfig& cfg, double x0, int s0) {
  if (env_states(env) != coef.states())
    throw ValidationError("invasion_rate_mc: environment state count mismatch");
  const VectorFieldSet fields = lv_logistic_fields(coef);
  Observable f = [coef](const Eigen::VectorXd& x, int s) {
    return coef.a20[s] + coef.a21[s] * x(0);
  };
  Eigen::VectorXd x0v(1);
  x0v << x0;
  return ergodic_average(fields, env, cfg, f, x0v, s0);
}

double c1_closed_form(const LVCoefficients& coef, const EnvKind& env) {
  const int n = coef.states();
  if (env_states(env) != n)
    throw ValidationError("c1_closed_form: environment state count mismatch");
  const Eigen::VectorXd pi = stationary(env).pi;
  const double a10b = pi.dot(coef.a10);
  const double a11b = pi.dot(coef.a11);
  const double a21b = pi.dot(coef.a21);

  const Eigen::VectorXd u =
      coef.a10 / a10b - coef.a11 / a11b;  // left factor per state
  // abar21 * (a11/abar11 - a21/abar21) = (abar21/abar11) a11 - a21,
  // finite even when abar21 vanishes.
  const Eigen::VectorXd w = (a21b / a11b) * coef.a11 - coef.a21;
  const Eigen::VectorXd qw = apply_pseudo_inverse(env, w);
  double acc = 0.0;
  for (int s = 0; s < n; ++s) acc += pi[s] * u[s] * qw[s];
  return (a10b * a10b / a11b) * acc;
}

double c1_integral_factor(const LVCoefficients& coef, const EnvKind& env) {
  const Eigen::VectorXd pi = stationary(env).pi;
  const double a10b = pi.dot(coef.a10);
  const double a11b = pi.dot(coef.a11);
  const double a21b = pi.dot(coef.a21);
  if (a21b == 0.0)
    throw ValidationError("c1_integral_factor: abar21 must be nonzero");
  const Eigen::VectorXd u = coef.a10 / a10b - coef.a11 / a11b;
  const Eigen::VectorXd v = coef.a11 / a11b - coef.a21 / a21b;
  const Eigen::VectorXd qv = apply_pseudo_inverse(env, v);
  double acc = 0.0;
  for (int s = 0; s < coef.states(); ++s) acc += pi[s] * u[s] * qv[s];
  return acc;
}

SignReport sign_analysis(const LVCoefficients& coef, double p) {
  if (coef.states() != 2)
    throw ValidationError("sign_analysis: two-state coefficients required");
  if (!(p > 0.0 && p < 1.0))
    throw ValidationError("sign_analysis: p must lie in (0, 1)");

  SignReport rep;
  LVCoefficients c = coef;
  double p_used = p;
  // Relabel so that a11^1 / a10^1 >= a11^0 / a10^0.
  if (c.a11[1] / c.a10[1] < c.a11[0] / c.a10[0]) {
    c.a10.reverseInPlace();
    c.a11.reverseInPlace();
    c.a20.reverseInPlace();
    c.a21.reverseInPlace();
    p_used = 1.0 - p;
    rep.swapped = true;
  }
  rep.p_used = p_used;

  Eigen::MatrixXd q(2, 2);
  q << -p_used, p_used, 1.0 - p_used, -(1.0 - p_used);
  const EnvKind env = EnvGenerator(q);
  const Eigen::VectorXd pi = stationary(env).pi;

  rep.c1 = c1_closed_form(c, env);
  rep.indicator = c.a11[1] * c.a21[0] - c.a11[0] * c.a21[1];
  rep.asserted = pi.dot(c.a21) < 0.0;

  auto sign_of = [](double v) {
    if (std::abs(v) < 1e-12) return 0;  // DegenerateTie: reported as zero-sign
    return v > 0.0 ? 1 : -1;
  };
  rep.sign_c1 = sign_of(rep.c1);
  rep.sign_indicator = sign_of(rep.indicator);
  rep.match = rep.sign_c1 == rep.sign_indicator;
  return rep;
}

}  // namespace switchode

// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#include "switchode/expansion.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "switchode/errors.hpp"
#include "switchode/linalg.hpp"

namespace switchode {

ObservableF per_state_affine(Eigen::VectorXd consts,
                             std::vector<Eigen::VectorXd> grads) {
  if (consts.size() == 0 || static_cast<std::size_t>(consts.size()) != grads.size())
    throw ValidationError("per_state_affine: size mismatch");
  ObservableF f;
  f.states = static_cast<int>(consts.size());
  f.value = [consts, grads](const Eigen::VectorXd& x, int s) {
    return consts[s] + grads[s].dot(x);
  };
  f.gradient = [grads](const Eigen::VectorXd&, int s) { return grads[s]; };
  return f;
}

Eigen::VectorXd observable_gradient(const ObservableF& f, const Eigen::VectorXd& x,
                                    int s, const Eigen::MatrixXd& basis) {
  if (f.gradient) return f.gradient(x, s);
  const double h = f.fd_step * (1.0 + x.norm());
  return fd_gradient([&](const Eigen::VectorXd& y) { return f.value(y, s); }, x,
                     basis, h);
}

ScalarField pi_average_field(const ObservableF& f, const Eigen::VectorXd& pi,
                             const Eigen::MatrixXd& basis) {
  ScalarField g;
  g.value = [f, pi](const Eigen::VectorXd& x) {
    double v = 0.0;
    for (int s = 0; s < pi.size(); ++s) v += pi[s] * f.value(x, s);
    return v;
  };
  g.gradient = [f, pi, basis](const Eigen::VectorXd& x) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
    for (int s = 0; s < pi.size(); ++s)
      grad += pi[s] * observable_gradient(f, x, s, basis);
    return grad;
  };
  return g;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth) {
  struct Impl {
    const std::function<double(double)>& f;
    double tol;
    int max_depth;
    double recurse(double a, double fa, double b, double fb, double m, double fm,
                   double whole, double tol_here, int depth) const {
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double delta = left + right - whole;
      if (depth >= max_depth || std::abs(delta) <= 15.0 * tol_here)
        return left + right + delta / 15.0;
      return recurse(a, fa, m, fm, lm, flm, left, 0.5 * tol_here, depth + 1) +
             recurse(m, fm, b, fb, rm, frm, right, 0.5 * tol_here, depth + 1);
    }
  };
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  Impl impl{f, tol, max_depth};
  return impl.recurse(a, fa, b, fb, m, fm, whole, tol, 0);
}

namespace {

void check_model_env(const VectorFieldSet& model, const EnvKind& env,
                     const ObservableF& f) {
  const int n = env_states(env);
  if (model.env_states() != n)
    throw ValidationError("expansion: environment/field state count mismatch");
  if (f.states != n)
    throw ValidationError("expansion: observable state count mismatch");
  if (!f.value) throw ValidationError("expansion: observable has no evaluator");
}

// w(x, .) = L_c h (x, .) - f(x, .) evaluated across environment states;
// grad_h is produced by the variational flow integral.
Eigen::VectorXd lc_h_minus_f(const VectorFieldSet& model, const ObservableF& f,
                             const VectorFieldSet& avg, const ScalarField& pf,
                             const Equilibrium& eq, const Eigen::MatrixXd& basis,
                             const Eigen::VectorXd& x,
                             const FlowIntegralOptions& fio, double* tail_bound) {
  const auto gi = flow_integral_grad(avg, pf, x, eq, basis, fio);
  if (tail_bound) *tail_bound = std::max(*tail_bound, std::abs(gi.tail));
  const Eigen::VectorXd grad_h = basis * gi.grad_coeffs;
  const int n = model.env_states();
  Eigen::VectorXd w(n);
  for (int s = 0; s < n; ++s)
    w[s] = model.eval(s, x).dot(grad_h) - f.value(x, s);
  return w;
}

double c1_with_step(const VectorFieldSet& model, const EnvKind& env,
                    const ObservableF& f, const VectorFieldSet& avg,
                    const ScalarField& pf, const Equilibrium& eq,
                    const Eigen::MatrixXd& basis, const Eigen::VectorXd& pi,
                    const FlowIntegralOptions& fio, double h, double* tail_bound) {
  const int n = model.env_states();
  const int k = static_cast<int>(basis.cols());
  double c1 = 0.0;
  for (int i = 0; i < k; ++i) {
    const Eigen::VectorXd v = basis.col(i);
    const Eigen::VectorXd wp = lc_h_minus_f(model, f, avg, pf, eq, basis,
                                            eq.xbar + h * v, fio, tail_bound);
    const Eigen::VectorXd wm = lc_h_minus_f(model, f, avg, pf, eq, basis,
                                            eq.xbar - h * v, fio, tail_bound);
    const Eigen::VectorXd dw = (wp - wm) / (2.0 * h);
    const Eigen::VectorXd g = apply_pseudo_inverse(env, dw);
    for (int s = 0; s < n; ++s) c1 += pi[s] * (model.eval(s, eq.xbar).dot(v)) * g[s];
  }
  return c1;
}

}  // namespace

ExpansionReport c1_generic(const VectorFieldSet& model, const EnvKind& env,
                           const ObservableF& f, const C1Options& opts) {
  check_model_env(model, env, f);
  const Eigen::VectorXd pi = stationary(env).pi;
  const VectorFieldSet avg = averaged(model, pi);
  const Eigen::VectorXd x_init =
      opts.x_init.size() > 0 ? opts.x_init : model.region.center();
  const Equilibrium eq = find_equilibrium(avg, x_init, opts.equilibrium);
  const Eigen::MatrixXd basis = fd_basis(model.region);
  const ScalarField pf = pi_average_field(f, pi, basis);

  const double h =
      opts.fd_step > 0.0 ? opts.fd_step : 1e-4 * (1.0 + eq.xbar.norm());

  double tail_bound = 0.0;
  const double c_h = c1_with_step(model, env, f, avg, pf, eq, basis, pi,
                                  opts.quadrature, h, &tail_bound);
  const double c_h2 = c1_with_step(model, env, f, avg, pf, eq, basis, pi,
                                   opts.quadrature, 0.5 * h, &tail_bound);

  ExpansionReport report;
  report.mu0_f = pf.value(eq.xbar);
  report.c1 = (4.0 * c_h2 - c_h) / 3.0;  // Richardson on the central differences
  report.diagnostics.fd_step = h;
  report.diagnostics.fd_delta = std::abs(c_h2 - c_h);
  report.diagnostics.tail_bound = tail_bound;
  report.diagnostics.equilibrium_residual = eq.residual;
  report.unconverged = report.diagnostics.fd_delta > opts.unconverged_tol ||
                       report.diagnostics.tail_bound > 1e-6;
  return report;
}

std::function<double(double)> h_dim1(const VectorFieldSet& model, const EnvKind& env,
                                     const ObservableF& f, double xbar) {
  if (model.dim != 1) throw ValidationError("h_dim1: model must be 1-D");
  check_model_env(model, env, f);
  const Eigen::VectorXd pi = stationary(env).pi;
  const VectorFieldSet avg = averaged(model, pi);
  const Eigen::MatrixXd basis = fd_basis(model.region);
  const ScalarField pf = pi_average_field(f, pi, basis);

  Eigen::VectorXd xb(1);
  xb << xbar;
  const double pf_bar = pf.value(xb);
  // Removable-singularity limit: (pi f)'(xbar) / Fbar'(xbar).
  const double limit = pf.gradient(xb)(0) / avg.jacobian(0, xb)(0, 0);

  return [avg, pf, pf_bar, xbar, limit](double x) {
    if (x == xbar) return 0.0;
    const double eps_sing = 1e-9 * (1.0 + std::abs(xbar));
    auto integrand = [&](double y) {
      if (std::abs(y - xbar) < eps_sing) return limit;
      Eigen::VectorXd yv(1);
      yv << y;
      const double fbar = avg.eval(0, yv)(0);
      if (fbar == 0.0)
        throw NumericalError("h_dim1: averaged field vanishes in the interior");
      return (pf.value(yv) - pf_bar) / fbar;
    };
    // The averaged field must keep one sign strictly between xbar and x.
    const double guard = 1e-6 * (1.0 + std::abs(xbar));
    const int scan = 256;
    int sign = 0;
    for (int i = 1; i < scan; ++i) {
      const double y = xbar + (x - xbar) * i / scan;
      if (std::abs(y - xbar) < guard) continue;
      Eigen::VectorXd yv(1);
      yv << y;
      const double v = avg.eval(0, yv)(0);
      const int sv = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
      if (sv == 0 || (sign != 0 && sv != sign))
        throw NumericalError(
            "h_dim1: averaged field vanishes strictly between x and xbar");
      sign = sv;
    }
    return adaptive_simpson(integrand, xbar, x, 1e-12 * (1.0 + std::abs(limit)));
  };
}

Order0 semigroup_order0(const VectorFieldSet& model, const EnvKind& env,
                        const ObservableF& f, double t, double layer_tau,
                        const Eigen::VectorXd& x, int s) {
  check_model_env(model, env, f);
  if (!(t >= 0.0) || !(layer_tau >= 0.0))
    throw ValidationError("semigroup_order0: times must be >= 0");
  const Eigen::VectorXd pi = stationary(env).pi;
  const VectorFieldSet avg = averaged(model, pi);
  const int n = env_states(env);

  Order0 out;
  const Eigen::VectorXd xt = flow(avg, 0, x, t);
  double p0 = 0.0;
  for (int ss = 0; ss < n; ++ss) p0 += pi[ss] * f.value(xt, ss);
  out.p0 = p0;

  const Eigen::MatrixXd qt = semigroup_at(env, layer_tau);
  double qf = 0.0, pf_x = 0.0;
  for (int ss = 0; ss < n; ++ss) {
    qf += qt(s, ss) * f.value(x, ss);
    pf_x += pi[ss] * f.value(x, ss);
  }
  out.s0 = qf - pf_x;
  return out;
}

namespace {

struct Order1Workspace {
  Eigen::VectorXd pi;
  VectorFieldSet avg;
  Eigen::MatrixXd basis;
  double rk_tol;
};

// b_1(r, y, .) = Q^{-1}( d_t P^{(0)} - L_c P^{(0)} )(r, y, .).
Eigen::VectorXd b1_vector(const VectorFieldSet& model, const EnvKind& env,
                          const ObservableF& f, const Order1Workspace& ws,
                          double r, const Eigen::VectorXd& y) {
  const auto vf = variational_flow(ws.avg, y, r, ws.basis, ws.rk_tol);
  Eigen::VectorXd gpf = Eigen::VectorXd::Zero(model.dim);
  for (int s = 0; s < ws.pi.size(); ++s)
    gpf += ws.pi[s] * observable_gradient(f, vf.x, s, ws.basis);
  const double dtheta_dt = gpf.dot(ws.avg.eval(0, vf.x));
  // Tangential gradient of theta0(r, .) at y, as a full-space vector.
  const Eigen::VectorXd grad_theta = ws.basis * (vf.psi.transpose() * gpf);
  const int n = model.env_states();
  Eigen::VectorXd db(n);
  for (int s = 0; s < n; ++s)
    db[s] = dtheta_dt - model.eval(s, y).dot(grad_theta);
  return apply_pseudo_inverse(env, db);
}

Order1Result order1_with_step(const VectorFieldSet& model, const EnvKind& env,
                              const ObservableF& f, double t,
                              const Eigen::VectorXd& x, int s,
                              const Order1Workspace& ws, double h_fd) {
  const int n = model.env_states();
  const int k = static_cast<int>(ws.basis.cols());
  Order1Result out;

  out.b1 = b1_vector(model, env, f, ws, t, x)[s];

  // int_0^inf pi (L_c S_r^{(0)} f)(x) dr, truncated by the spectral gap.
  Eigen::MatrixXd gf(n, k);  // directional derivatives of f(x, .) on the basis
  for (int ss = 0; ss < n; ++ss) {
    const Eigen::VectorXd g = observable_gradient(f, x, ss, ws.basis);
    for (int i = 0; i < k; ++i) gf(ss, i) = g.dot(ws.basis.col(i));
  }
  Eigen::MatrixXd fdotv(n, k);  // F_s(x) . v_i
  for (int ss = 0; ss < n; ++ss) {
    const Eigen::VectorXd fs = model.eval(ss, x);
    for (int i = 0; i < k; ++i) fdotv(ss, i) = fs.dot(ws.basis.col(i));
  }
  const Eigen::RowVectorXd pibar = ws.pi.transpose() * gf;  // grad pf on basis
  auto s_integrand = [&](double r) {
    const Eigen::MatrixXd er = semigroup_at(env, r);
    const Eigen::MatrixXd m = er * gf;
    double acc = 0.0;
    for (int ss = 0; ss < n; ++ss)
      acc += ws.pi[ss] * (fdotv.row(ss).dot(m.row(ss) - pibar));
    return acc;
  };
  double gap;
  if (const auto* gen = std::get_if<EnvGenerator>(&env))
    gap = spectral_gap(gen->rates());
  else
    gap = 1.0;  // resampling kernel: Q = Pi - I has spectrum {0, -1}
  const double scale0 = std::abs(s_integrand(0.0)) + 1.0;
  const double r_star = std::log(scale0 / 1e-10) / gap;
  out.s_integral = adaptive_simpson(s_integrand, 0.0, r_star, 1e-11 * scale0);

  // int_0^t pi (L_c b_1)(r, phibar_{t-r}(x)) dr with central-FD gradients.
  auto b_integrand = [&](double r) {
    const Eigen::VectorXd y = flow(ws.avg, 0, x, t - r);
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
      const Eigen::VectorXd v = ws.basis.col(i);
      const Eigen::VectorXd bp = b1_vector(model, env, f, ws, r, y + h_fd * v);
      const Eigen::VectorXd bm = b1_vector(model, env, f, ws, r, y - h_fd * v);
      const Eigen::VectorXd db = (bp - bm) / (2.0 * h_fd);
      for (int ss = 0; ss < n; ++ss)
        acc += ws.pi[ss] * (model.eval(ss, y).dot(v)) * db[ss];
    }
    return acc;
  };
  out.b_integral =
      t > 0.0 ? adaptive_simpson(b_integrand, 0.0, t, 1e-9 * (1.0 + scale0), 24)
              : 0.0;

  out.value = out.b1 + out.s_integral + out.b_integral;
  return out;
}

}  // namespace

Order1Result semigroup_order1(const VectorFieldSet& model, const EnvKind& env,
                              const ObservableF& f, double t,
                              const Eigen::VectorXd& x, int s,
                              const Order1Options& opts) {
  check_model_env(model, env, f);
  if (!(t >= 0.0)) throw ValidationError("semigroup_order1: t must be >= 0");

  Order1Workspace ws;
  ws.pi = stationary(env).pi;
  ws.avg = averaged(model, ws.pi);
  ws.basis = fd_basis(model.region);
  ws.rk_tol = opts.rk_tol;

  Order1Result full = order1_with_step(model, env, f, t, x, s, ws, opts.fd_step);
  const Order1Result half =
      order1_with_step(model, env, f, t, x, s, ws, 0.5 * opts.fd_step);
  full.refinement_delta = std::abs(half.value - full.value);
  full.value = half.value;  // keep the finer evaluation
  full.b1 = half.b1;
  full.s_integral = half.s_integral;
  full.b_integral = half.b_integral;
  full.unconverged = full.refinement_delta > opts.refine_tol;
  return full;
}

SlopeFit mc_slope_check(const VectorFieldSet& model, const EnvKind& env,
                        const ObservableF& f, const std::vector<double>& eps_list,
                        const SimConfig& base_cfg, const Eigen::VectorXd& x0, int s0) {
  if (eps_list.size() < 3)
    throw ValidationError("mc_slope_check: need at least 3 epsilon values");
  check_model_env(model, env, f);
  const Eigen::VectorXd pi = stationary(env).pi;
  const VectorFieldSet avg = averaged(model, pi);
  const Equilibrium eq = find_equilibrium(avg, model.region.center());
  double mu0 = 0.0;
  for (int s = 0; s < pi.size(); ++s) mu0 += pi[s] * f.value(eq.xbar, s);

  SlopeFit fit;
  fit.mu0_f = mu0;
  fit.eps = eps_list;
  Observable obs = [&f](const Eigen::VectorXd& x, int s) { return f.value(x, s); };
  for (double eps : eps_list) {
    SimConfig cfg = base_cfg;
    cfg.epsilon = eps;
    fit.estimates.push_back(ergodic_average(model, env, cfg, obs, x0, s0));
  }

  // Weighted least squares for y = c1 eps + K eps^2.
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(2, 2);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(2);
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const double e = eps_list[i];
    const double y = fit.estimates[i].mean - mu0;
    // Deterministic models report zero batch variance; keep weights finite.
    const double se =
        std::max(fit.estimates[i].std_error, 1e-12 * (1.0 + std::abs(y)));
    const double w = 1.0 / (se * se);
    Eigen::Vector2d row(e, e * e);
    xtx += w * row * row.transpose();
    xty += w * row * y;
  }
  const Eigen::Matrix2d cov = xtx.inverse();
  const Eigen::Vector2d beta = cov * xty;
  fit.fitted_c1 = beta(0);
  fit.fitted_k = beta(1);
  fit.fitted_c1_se = std::sqrt(std::max(0.0, cov(0, 0)));

  // Log-log slope of |mu_eps f - mu0 f|.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(eps_list.size());
  std::vector<double> lx(eps_list.size()), ly(eps_list.size());
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    lx[i] = std::log(eps_list[i]);
    ly[i] = std::log(std::max(std::abs(fit.estimates[i].mean - mu0), 1e-300));
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  for (std::size_t i = 0; i < eps_list.size(); ++i)
    fit.residuals.push_back(ly[i] - (fit.intercept + fit.slope * lx[i]));
  return fit;
}

}  // namespace switchode

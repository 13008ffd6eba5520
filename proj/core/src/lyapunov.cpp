// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#include "switchode/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "switchode/errors.hpp"
#include "switchode/flows.hpp"
#include "switchode/linalg.hpp"

namespace switchode {

SwitchedLinearSystem make_switched_linear(std::vector<Eigen::MatrixXd> a,
                                          EnvKind env) {
  if (a.empty()) throw ValidationError("make_switched_linear: no matrices");
  const int n = env_states(env);
  if (static_cast<int>(a.size()) != n)
    throw ValidationError("make_switched_linear: matrix/state count mismatch");
  const Eigen::Index d = a.front().rows();
  for (const auto& m : a) {
    if (m.rows() != d || m.cols() != d)
      throw ValidationError("make_switched_linear: matrices must share a square size");
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        if (i != j && m(i, j) < 0.0)
          throw ValidationError(
              "make_switched_linear: cooperative matrices required (off-diagonal >= 0)");
  }
  SwitchedLinearSystem sys{std::move(a), std::move(env)};
  if (!strongly_connected_positive(averaged_matrix(sys)))
    throw NotIrreducible("make_switched_linear: averaged matrix is not irreducible");
  return sys;
}

Eigen::MatrixXd averaged_matrix(const SwitchedLinearSystem& sys) {
  const Eigen::VectorXd pi = stationary(sys.env).pi;
  Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(sys.a.front().rows(),
                                               sys.a.front().cols());
  for (std::size_t s = 0; s < sys.a.size(); ++s) abar += pi[s] * sys.a[s];
  return abar;
}

VectorFieldSet projective_fields(const SwitchedLinearSystem& sys) {
  return make_projective(sys.a);
}

PerronPair perron_matrix(const Eigen::MatrixXd& abar) {
  const int d = static_cast<int>(abar.rows());
  if (!strongly_connected_positive(abar))
    throw NotIrreducible("perron: averaged matrix is not irreducible");

  const double h = 1.0 / (1.0 + abar.diagonal().cwiseAbs().maxCoeff());
  const Eigen::MatrixXd m = expm(h * abar);
  const Eigen::MatrixXd mt = m.transpose();
  const double scale = std::max(1.0, abar.cwiseAbs().maxCoeff());

  auto iterate = [d](const Eigen::MatrixXd& op) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(d, 1.0 / d);
    const int max_iter = 200000;
    for (int it = 0; it < max_iter; ++it) {
      Eigen::VectorXd w = op * v;
      w /= w.sum();
      const double diff = (w - v).cwiseAbs().maxCoeff();
      v = std::move(w);
      if (diff < 1e-15) break;
      if (it + 1 == max_iter)
        throw NoConvergence("perron: power iteration did not converge "
                            "(near-degenerate spectral gap)");
    }
    return v;
  };

  Eigen::VectorXd x = iterate(m);
  Eigen::VectorXd y = iterate(mt);

  // Rayleigh-quotient polish on Abar itself.
  double lambda = y.dot(abar * x) / y.dot(x);
  for (int round = 0; round < 4; ++round) {
    const Eigen::MatrixXd shifted =
        abar - lambda * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd xs = solve_lstsq(shifted, x);
    if (xs.allFinite() && xs.cwiseAbs().maxCoeff() > 0.0) {
      xs /= xs.sum();
      if ((xs.array() > 0.0).all()) x = xs;
    }
    Eigen::VectorXd ys = solve_lstsq(shifted.transpose(), y);
    if (ys.allFinite() && ys.cwiseAbs().maxCoeff() > 0.0) {
      ys /= ys.sum();
      if ((ys.array() > 0.0).all()) y = ys;
    }
    lambda = y.dot(abar * x) / y.dot(x);
  }

  PerronPair pp;
  pp.xbar = x / x.sum();
  pp.ybar = y / y.dot(pp.xbar);
  pp.lambda_max = pp.ybar.dot(abar * pp.xbar);  // ybar . xbar = 1

  const double res_r = (abar * pp.xbar - pp.lambda_max * pp.xbar).cwiseAbs().maxCoeff();
  const double res_l =
      (abar.transpose() * pp.ybar - pp.lambda_max * pp.ybar).cwiseAbs().maxCoeff();
  if (res_r > 1e-10 * scale || res_l > 1e-10 * scale)
    throw NoConvergence("perron: eigen-residual above tolerance");
  if ((pp.xbar.array() <= 0.0).any())
    throw NoConvergence("perron: right eigenvector not strictly positive");
  return pp;
}

PerronPair perron(const SwitchedLinearSystem& sys) {
  return perron_matrix(averaged_matrix(sys));
}

LyapunovEstimate lyapunov_mc(const SwitchedLinearSystem& sys, const SimConfig& cfg,
                             const Eigen::VectorXd& theta0, int s0) {
  cfg.validate();
  const int d = static_cast<int>(sys.a.front().rows());
  const int n = static_cast<int>(sys.a.size());
  if (theta0.size() != d) throw ValidationError("lyapunov_mc: theta0 size mismatch");
  if ((theta0.array() < 0.0).any() || std::abs(theta0.sum() - 1.0) > 1e-12)
    throw ValidationError("lyapunov_mc: theta0 must lie in the simplex");
  if (s0 < 0 || s0 >= n) throw ValidationError("lyapunov_mc: s0 out of range");
  const double batch_len = (cfg.horizon - cfg.burn_in) / cfg.batch_count;
  if (batch_len < cfg.epsilon)
    throw DegenerateBatches("lyapunov_mc: horizon too short for batch_count");

  const double dt_grid = cfg.grid_dt();
  std::vector<std::vector<double>> log_batch(cfg.n_traj),
      erg_batch(cfg.n_traj);

  parallel_for_indexed(cfg.n_traj, [&](std::int64_t traj) {
    Rng rng = Rng::split(cfg.seed, static_cast<std::uint64_t>(traj));
    std::vector<double> logs(cfg.batch_count, 0.0), ergs(cfg.batch_count, 0.0);

    Eigen::VectorXd theta = theta0;
    int s = s0;
    double t = 0.0;
    auto f_val = [&](const Eigen::VectorXd& th, int ss) {
      return (sys.a[ss] * th).sum();
    };

    auto batch_of = [&](double time) {
      const int b = static_cast<int>((time - cfg.burn_in) / batch_len);
      return std::clamp(b, 0, cfg.batch_count - 1);
    };

    while (t < cfg.horizon) {
      const double rate = env_exit_rate(sys.env, s);
      double t_jump = cfg.horizon + 1.0;
      if (rate > 0.0) t_jump = t + cfg.epsilon * rng.exponential(rate);
      const double seg_end = std::min(t_jump, cfg.horizon);

      while (t < seg_end) {
        // Next event inside the segment: grid tick, batch boundary, burn-in.
        double t_next = seg_end;
        const double tg = (std::floor(t / dt_grid) + 1.0) * dt_grid;
        t_next = std::min(t_next, tg);
        if (t < cfg.burn_in) t_next = std::min(t_next, cfg.burn_in);
        else {
          const double tb = cfg.burn_in + (batch_of(t) + 1) * batch_len;
          t_next = std::min(t_next, tb);
        }
        if (t_next <= t) t_next = std::min(seg_end, std::nextafter(t, seg_end));

        const double dt = t_next - t;
        const double f_left = f_val(theta, s);
        Eigen::VectorXd z = expm(dt * sys.a[s]) * theta;
        const double mass = z.sum();
        if (!(mass > 0.0))
          throw NumericalError("lyapunov_mc: left the positive cone (internal)");
        theta = z / mass;
        const double f_right = f_val(theta, s);
        if (t >= cfg.burn_in) {
          const int b = batch_of(t);
          logs[b] += std::log(mass);
          ergs[b] += 0.5 * dt * (f_left + f_right);
        }
        t = t_next;
      }
      if (t_jump > cfg.horizon) break;
      s = env_next_state(sys.env, s, rng);
    }

    for (int b = 0; b < cfg.batch_count; ++b) {
      logs[b] /= batch_len;
      ergs[b] /= batch_len;
    }
    log_batch[traj] = std::move(logs);
    erg_batch[traj] = std::move(ergs);
  });

  auto pool = [&](const std::vector<std::vector<double>>& rows) {
    const std::int64_t total =
        static_cast<std::int64_t>(cfg.n_traj) * cfg.batch_count;
    double mean = 0.0;
    for (const auto& r : rows)
      for (double v : r) mean += v;
    mean /= static_cast<double>(total);
    double var = 0.0;
    for (const auto& r : rows)
      for (double v : r) var += (v - mean) * (v - mean);
    var = total > 1 ? var / static_cast<double>(total - 1) : 0.0;
    TrajectoryEstimate est;
    est.mean = mean;
    est.std_error = std::sqrt(var / static_cast<double>(total));
    est.effective_samples = total;
    est.config = cfg;
    est.batch_means.resize(cfg.n_traj, cfg.batch_count);
    for (int i = 0; i < cfg.n_traj; ++i)
      for (int b = 0; b < cfg.batch_count; ++b)
        est.batch_means(i, b) = rows[i][b];
    return est;
  };

  return LyapunovEstimate{pool(log_batch), pool(erg_batch)};
}

double c1_closed_form(const SwitchedLinearSystem& sys, const PerronPair& pp) {
  const Eigen::VectorXd pi = stationary(sys.env).pi;
  const int n = static_cast<int>(sys.a.size());
  const int d = static_cast<int>(sys.a.front().rows());

  std::vector<Eigen::MatrixXd> qinv_a(n, Eigen::MatrixXd::Zero(d, d));
  if (const auto* gen = std::get_if<EnvGenerator>(&sys.env)) {
    const Eigen::MatrixXd x = pseudo_inverse(*gen).x;
    for (int s = 0; s < n; ++s)
      for (int sp = 0; sp < n; ++sp) qinv_a[s] += x(s, sp) * sys.a[sp];
  } else {
    Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(d, d);
    for (int s = 0; s < n; ++s) abar += pi[s] * sys.a[s];
    for (int s = 0; s < n; ++s) qinv_a[s] = abar - sys.a[s];
  }

  const Eigen::MatrixXd proj =
      pp.xbar * pp.ybar.transpose() - Eigen::MatrixXd::Identity(d, d);
  double c1 = 0.0;
  for (int s = 0; s < n; ++s)
    c1 += pi[s] * pp.ybar.dot(qinv_a[s] * (proj * (sys.a[s] * pp.xbar)));
  return c1;
}

std::vector<double> default_p_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 99; ++i) grid.push_back(i / 100.0);
  return grid;
}

namespace {

// Stationary law (p, 1-p): grid parameter p is the weight of the first
// matrix, matching the lambda_max(p) / c1(p) figure axes.
EnvGenerator two_state_env(double p) {
  Eigen::MatrixXd q(2, 2);
  q << -(1.0 - p), 1.0 - p, p, -p;
  return EnvGenerator(q);
}

}  // namespace

std::vector<SweepRow> sweep_p(const Eigen::MatrixXd& a0, const Eigen::MatrixXd& a1,
                              const std::vector<double>& p_grid) {
  std::vector<SweepRow> rows(p_grid.size());
  parallel_for_indexed(static_cast<std::int64_t>(p_grid.size()), [&](std::int64_t i) {
    const double p = p_grid[i];
    if (!(p > 0.0 && p < 1.0))
      throw ValidationError("sweep_p: grid values must lie in (0, 1)");
    SwitchedLinearSystem sys = make_switched_linear({a0, a1}, two_state_env(p));
    const PerronPair pp = perron(sys);
    rows[i] = SweepRow{p, pp.lambda_max, c1_closed_form(sys, pp)};
  });
  return rows;
}

Certificate destabilization_certificate(const Eigen::MatrixXd& a0,
                                        const Eigen::MatrixXd& a1,
                                        const CertificateConfig& cfg) {
  Certificate cert;
  cert.seed = cfg.mc.seed;
  const std::vector<double> grid =
      cfg.p_grid.empty() ? default_p_grid() : cfg.p_grid;
  try {
    cert.sweep = sweep_p(a0, a1, grid);
  } catch (const NotIrreducible&) {
    // Mixtures without an irreducible average carry no Perron data to
    // destabilize; the search result is NotFound, not an error.
    return cert;
  }

  std::size_t star = 0;
  for (std::size_t i = 1; i < cert.sweep.size(); ++i)
    if (cert.sweep[i].lambda_max > cert.sweep[star].lambda_max) star = i;
  cert.p_star = cert.sweep[star].p;
  cert.lambda_star = cert.sweep[star].lambda_max;

  SwitchedLinearSystem sys =
      make_switched_linear({a0, a1}, two_state_env(cert.p_star));
  const int d = static_cast<int>(a0.rows());
  const Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(d, 1.0 / d);

  double best_score = 0.0;
  for (double eps : cfg.eps_grid) {
    SimConfig mc = cfg.mc;
    mc.epsilon = eps;
    const LyapunovEstimate est = lyapunov_mc(sys, mc, theta0, 0);
    const double gap = est.log_growth.mean - cert.lambda_star;
    if (gap <= 0.0) continue;
    const double delta = -cert.lambda_star - 0.25 * gap;
    const double lcb =
        est.log_growth.mean + delta - cfg.z_confidence * est.log_growth.std_error;
    const double shifted_max = cert.lambda_star + delta;  // = -gap / 4
    if (shifted_max < 0.0 && lcb > 0.0 && lcb > best_score) {
      best_score = lcb;
      cert.found = true;
      cert.delta = delta;
      cert.p = cert.p_star;
      cert.eps = eps;
      cert.lambda_hat = est.log_growth.mean;
      cert.std_error = est.log_growth.std_error;
      cert.lcb99 = lcb;
      cert.max_shifted_lambda = shifted_max;
    }
  }

  if (cert.found) {
    // Re-verify condition (i) over the whole analytic sweep.
    for (const auto& row : cert.sweep)
      cert.max_shifted_lambda =
          std::max(cert.max_shifted_lambda, row.lambda_max + cert.delta);
    if (cert.max_shifted_lambda >= 0.0) cert.found = false;
  }
  return cert;
}

}  // namespace switchode

// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#include "switchode/splitting.hpp"

#include <cmath>

#include "switchode/errors.hpp"
#include "switchode/pdmp_sim.hpp"

namespace switchode {

SplitScheme make_split(std::vector<Subflow> subflows, double epsilon, Region region) {
  if (subflows.empty()) throw ValidationError("make_split: no subflows");
  if (!(epsilon > 0.0)) throw ValidationError("make_split: epsilon must be > 0");
  SplitScheme s;
  s.dim = region.dim;
  s.region = std::move(region);
  s.epsilon = epsilon;
  for (auto& sub : subflows) {
    if (const auto* lin = std::get_if<LinearSub>(&sub)) {
      if (lin->a.rows() != s.dim || lin->a.cols() != s.dim)
        throw ValidationError("make_split: linear subflow dimension mismatch");
      if (lin->b.size() != 0 && lin->b.size() != s.dim)
        throw ValidationError("make_split: linear subflow offset mismatch");
    } else if (std::holds_alternative<LogisticSub>(sub)) {
      if (s.dim != 1)
        throw ValidationError("make_split: logistic subflows need dim 1");
    }
  }
  s.subflows = std::move(subflows);
  return s;
}

Eigen::VectorXd subflow_apply(const Subflow& sub, const Eigen::VectorXd& x, double t) {
  if (const auto* lin = std::get_if<LinearSub>(&sub))
    return linear_exact_flow(lin->a, lin->b.size() ? &lin->b : nullptr, x, t);
  if (const auto* lg = std::get_if<LogisticSub>(&sub)) {
    Eigen::VectorXd r(1);
    r(0) = logistic_exact_flow(lg->a10, lg->a11, x(0), t);
    return r;
  }
  const auto& gs = std::get<GeneralSub>(sub);
  OdeOptions o;
  o.abs_tol = o.rel_tol = gs.rk_tol;
  return integrate_rk45(
      [&gs](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = gs.f(y); },
      x, 0.0, t, o);
}

SplitStepResult split_step(const SplitScheme& scheme, const Eigen::VectorXd& x,
                           Rng& rng) {
  const double n = static_cast<double>(scheme.subflows.size());
  SplitStepResult out;
  out.x = x;
  for (const auto& sub : scheme.subflows) {
    const double dt = scheme.epsilon * rng.exponential(1.0) / n;
    out.x = subflow_apply(sub, out.x, dt);
    out.elapsed += dt;
  }
  return out;
}

Eigen::VectorXd lie_step(const SplitScheme& scheme, const Eigen::VectorXd& x) {
  const double dt =
      scheme.epsilon / static_cast<double>(scheme.subflows.size());
  Eigen::VectorXd y = x;
  for (const auto& sub : scheme.subflows) y = subflow_apply(sub, y, dt);
  return y;
}

Eigen::VectorXd split_reference_flow(const SplitScheme& scheme,
                                     const Eigen::VectorXd& x0, double t) {
  const double n = static_cast<double>(scheme.subflows.size());
  bool all_linear = true, all_logistic = true;
  for (const auto& sub : scheme.subflows) {
    all_linear = all_linear && std::holds_alternative<LinearSub>(sub);
    all_logistic = all_logistic && std::holds_alternative<LogisticSub>(sub);
  }
  if (all_linear) {
    Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(scheme.dim, scheme.dim);
    Eigen::VectorXd bbar = Eigen::VectorXd::Zero(scheme.dim);
    bool has_b = false;
    for (const auto& sub : scheme.subflows) {
      const auto& lin = std::get<LinearSub>(sub);
      abar += lin.a / n;
      if (lin.b.size()) {
        bbar += lin.b / n;
        has_b = true;
      }
    }
    return linear_exact_flow(abar, has_b ? &bbar : nullptr, x0, t);
  }
  if (all_logistic) {
    double a10 = 0.0, a11 = 0.0;
    for (const auto& sub : scheme.subflows) {
      const auto& lg = std::get<LogisticSub>(sub);
      a10 += lg.a10 / n;
      a11 += lg.a11 / n;
    }
    Eigen::VectorXd r(1);
    r(0) = logistic_exact_flow(a10, a11, x0(0), t);
    return r;
  }
  OdeOptions o;
  o.abs_tol = o.rel_tol = 1e-12;
  auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy = Eigen::VectorXd::Zero(scheme.dim);
    for (const auto& sub : scheme.subflows) {
      if (const auto* lin = std::get_if<LinearSub>(&sub)) {
        dy += lin->a * y;
        if (lin->b.size()) dy += lin->b;
      } else if (const auto* lg = std::get_if<LogisticSub>(&sub)) {
        dy(0) += y(0) * (lg->a10 - lg->a11 * y(0));
      } else {
        dy += std::get<GeneralSub>(sub).f(y);
      }
    }
    dy /= n;
  };
  return integrate_rk45(rhs, x0, 0.0, t, o);
}

namespace {

WeakErrorRow run_weak_error(const SplitScheme& base,
                            const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x0, double t, double eps,
                            std::uint64_t n_mc, std::uint64_t seed,
                            std::uint64_t stream_offset) {
  if (!(eps > 0.0)) throw ValidationError("weak_error: epsilon must be > 0");
  if (n_mc == 0) throw ValidationError("weak_error: n_mc must be > 0");
  SplitScheme scheme = base;
  scheme.epsilon = eps;
  const std::int64_t n_steps = std::max<std::int64_t>(1, std::llround(t / eps));
  const double t_eff = static_cast<double>(n_steps) * eps;

  const std::uint64_t chunk = 256;
  const std::uint64_t n_chunks = (n_mc + chunk - 1) / chunk;
  std::vector<double> sums(n_chunks, 0.0), sums2(n_chunks, 0.0);
  parallel_for_indexed(static_cast<std::int64_t>(n_chunks), [&](std::int64_t c) {
    double acc = 0.0, acc2 = 0.0;
    const std::uint64_t begin = static_cast<std::uint64_t>(c) * chunk;
    const std::uint64_t end = std::min(begin + chunk, n_mc);
    for (std::uint64_t r = begin; r < end; ++r) {
      Rng rng = Rng::split(seed, stream_offset + r);
      Eigen::VectorXd x = x0;
      for (std::int64_t k = 0; k < n_steps; ++k) x = split_step(scheme, x, rng).x;
      const double v = f(x);
      acc += v;
      acc2 += v * v;
    }
    sums[c] = acc;
    sums2[c] = acc2;
  });
  double total = 0.0, total2 = 0.0;
  for (std::uint64_t c = 0; c < n_chunks; ++c) {
    total += sums[c];
    total2 += sums2[c];
  }
  const double n = static_cast<double>(n_mc);
  WeakErrorRow row;
  row.eps = eps;
  row.n_steps = n_steps;
  row.t_effective = t_eff;
  row.mean = total / n;
  const double var =
      std::max(0.0, (total2 - n * row.mean * row.mean) / std::max(1.0, n - 1.0));
  row.std_error = std::sqrt(var / n);
  row.reference = f(split_reference_flow(scheme, x0, t_eff));
  row.error = std::abs(row.mean - row.reference);
  return row;
}

}  // namespace

std::vector<WeakErrorRow> weak_error(const SplitScheme& scheme,
                                     const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& x0, double t,
                                     const std::vector<double>& eps_list,
                                     std::uint64_t n_mc, std::uint64_t seed) {
  std::vector<WeakErrorRow> rows;
  std::uint64_t offset = 0;
  for (double eps : eps_list) {
    rows.push_back(run_weak_error(scheme, f, x0, t, eps, n_mc, seed, offset));
    offset += n_mc;
  }
  return rows;
}

RichardsonResult richardson(const SplitScheme& scheme,
                            const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x0, double t, double eps,
                            std::uint64_t n_mc, std::uint64_t seed) {
  RichardsonResult out;
  out.at_eps = run_weak_error(scheme, f, x0, t, eps, n_mc, seed, 0);
  out.at_half = run_weak_error(scheme, f, x0, t, 0.5 * eps, n_mc, seed, n_mc);
  out.extrapolated = 2.0 * out.at_half.mean - out.at_eps.mean;
  out.std_error = std::sqrt(4.0 * out.at_half.std_error * out.at_half.std_error +
                            out.at_eps.std_error * out.at_eps.std_error);
  return out;
}

}  // namespace switchode

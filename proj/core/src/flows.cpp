// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#include "switchode/flows.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "switchode/errors.hpp"
#include "switchode/linalg.hpp"

namespace switchode {

// ---------------------------------------------------------------- Region

Region Region::box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
  if (lo.size() == 0 || lo.size() != hi.size())
    throw ValidationError("Region::box: bounds size mismatch");
  if (((hi - lo).array() <= 0.0).any())
    throw ValidationError("Region::box: hi must exceed lo");
  Region r;
  r.kind = Kind::Box;
  r.dim = static_cast<int>(lo.size());
  r.lo = std::move(lo);
  r.hi = std::move(hi);
  return r;
}

Region Region::interval(double lo, double hi) {
  Eigen::VectorXd l(1), h(1);
  l << lo;
  h << hi;
  return box(std::move(l), std::move(h));
}

Region Region::simplex(int dim) {
  if (dim < 1) throw ValidationError("Region::simplex: dim must be >= 1");
  Region r;
  r.kind = Kind::Simplex;
  r.dim = dim;
  return r;
}

bool Region::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != dim) return false;
  if (!x.allFinite()) return false;
  if (kind == Kind::Box)
    return (x.array() >= lo.array() - tol).all() &&
           (x.array() <= hi.array() + tol).all();
  return (x.array() >= -tol).all() && std::abs(x.sum() - 1.0) <= tol * dim;
}

double Region::diameter() const {
  if (kind == Kind::Box) return (hi - lo).norm();
  return std::sqrt(2.0);
}

Eigen::VectorXd Region::center() const {
  if (kind == Kind::Box) return 0.5 * (lo + hi);
  return Eigen::VectorXd::Constant(dim, 1.0 / dim);
}

// ------------------------------------------------------------ field sets

namespace {

void check_square(const std::vector<Eigen::MatrixXd>& a, int dim,
                  const char* who) {
  if (a.empty()) throw ValidationError(std::string(who) + ": no matrices");
  for (const auto& m : a) {
    if (m.rows() != dim || m.cols() != dim)
      throw ValidationError(std::string(who) + ": matrices must be dim x dim");
    if (!m.allFinite())
      throw NonFinite(std::string(who) + ": non-finite matrix entry");
  }
}

double region_tol(const Region& r) { return 1e-9 * std::max(1.0, r.diameter()); }

}  // namespace

// Closed-form scalar logistic flow for x' = x (a - b x).
double logistic_exact_flow(double a, double b, double x0, double t) {
  if (x0 == 0.0 || t == 0.0) return x0;
  if (a == 0.0) return x0 / (1.0 + b * x0 * t);
  if (a > 0.0) {
    const double em = std::exp(-a * t);
    return a * x0 / (a * em + b * x0 * (1.0 - em));
  }
  const double e = std::exp(a * t);
  return a * x0 * e / (a + b * x0 * (e - 1.0));
}

namespace {

// d phi_t / d x0 for the scalar logistic flow.
double logistic_dflow_1d(double a, double b, double x0, double t) {
  if (a == 0.0) {
    const double den = 1.0 + b * x0 * t;
    return 1.0 / (den * den);
  }
  if (a > 0.0) {
    const double em = std::exp(-a * t);
    const double den = a * em + b * x0 * (1.0 - em);
    return a * a * em / (den * den);
  }
  const double e = std::exp(a * t);
  const double den = a + b * x0 * (e - 1.0);
  return a * a * e / (den * den);
}

}  // namespace

Eigen::VectorXd linear_exact_flow(const Eigen::MatrixXd& a, const Eigen::VectorXd* b,
                                  const Eigen::VectorXd& x0, double t) {
  const Eigen::Index d = a.rows();
  if (d == 1) {
    const double alpha = a(0, 0);
    const double beta = b ? (*b)(0) : 0.0;
    Eigen::VectorXd r(1);
    if (alpha == 0.0)
      r(0) = x0(0) + beta * t;
    else
      r(0) = x0(0) * std::exp(alpha * t) + beta * std::expm1(alpha * t) / alpha;
    return r;
  }
  if (b == nullptr || b->isZero(0.0)) return expm(t * a) * x0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d + 1, d + 1);
  m.topLeftCorner(d, d) = a;
  m.topRightCorner(d, 1) = *b;
  Eigen::VectorXd z(d + 1);
  z.head(d) = x0;
  z(d) = 1.0;
  return (expm(t * m) * z).head(d);
}

int VectorFieldSet::env_states() const {
  return std::visit(
      [](const auto& f) -> int {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinearFields>)
          return static_cast<int>(f.a.size());
        else if constexpr (std::is_same_v<T, LogisticFields>)
          return static_cast<int>(f.a10.size());
        else if constexpr (std::is_same_v<T, ProjectiveFields>)
          return static_cast<int>(f.a.size());
        else
          return f.states;
      },
      fields);
}

Eigen::VectorXd VectorFieldSet::eval(int s, const Eigen::VectorXd& x) const {
  return std::visit(
      [&](const auto& f) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinearFields>) {
          Eigen::VectorXd v = f.a[s] * x;
          if (!f.b.empty()) v += f.b[s];
          return v;
        } else if constexpr (std::is_same_v<T, LogisticFields>) {
          Eigen::VectorXd v(1);
          v(0) = x(0) * (f.a10[s] - f.a11[s] * x(0));
          return v;
        } else if constexpr (std::is_same_v<T, ProjectiveFields>) {
          Eigen::VectorXd ax = f.a[s] * x;
          return ax - (ax.sum()) * x;
        } else {
          return f.f(s, x);
        }
      },
      fields);
}

Eigen::MatrixXd VectorFieldSet::jacobian(int s, const Eigen::VectorXd& x) const {
  return std::visit(
      [&](const auto& f) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinearFields>) {
          return f.a[s];
        } else if constexpr (std::is_same_v<T, LogisticFields>) {
          Eigen::MatrixXd j(1, 1);
          j(0, 0) = f.a10[s] - 2.0 * f.a11[s] * x(0);
          return j;
        } else if constexpr (std::is_same_v<T, ProjectiveFields>) {
          const Eigen::MatrixXd& a = f.a[s];
          const Eigen::RowVectorXd colsums = a.colwise().sum();
          const double mass_rate = colsums * x;
          return a - x * colsums -
                 mass_rate * Eigen::MatrixXd::Identity(x.size(), x.size());
        } else {
          const int d = static_cast<int>(x.size());
          Eigen::MatrixXd j(d, d);
          const double h = 1e-6 * (1.0 + x.cwiseAbs().maxCoeff());
          Eigen::VectorXd xp = x, xm = x;
          for (int c = 0; c < d; ++c) {
            xp(c) += h;
            xm(c) -= h;
            j.col(c) = (f.f(s, xp) - f.f(s, xm)) / (2.0 * h);
            xp(c) = x(c);
            xm(c) = x(c);
          }
          return j;
        }
      },
      fields);
}

bool VectorFieldSet::is_exact_kind() const {
  return !std::holds_alternative<GeneralFields>(fields);
}

VectorFieldSet make_linear(std::vector<Eigen::MatrixXd> a,
                           std::vector<Eigen::VectorXd> b, Region region) {
  check_square(a, region.dim, "make_linear");
  if (!b.empty()) {
    if (b.size() != a.size())
      throw ValidationError("make_linear: offsets count mismatch");
    for (const auto& v : b)
      if (v.size() != region.dim || !v.allFinite())
        throw ValidationError("make_linear: bad offset vector");
  }
  VectorFieldSet vfs;
  vfs.dim = region.dim;
  vfs.region = std::move(region);
  vfs.fields = LinearFields{std::move(a), std::move(b)};
  return vfs;
}

VectorFieldSet make_logistic(Eigen::VectorXd a10, Eigen::VectorXd a11,
                             std::optional<Region> region) {
  if (a10.size() == 0 || a10.size() != a11.size())
    throw ValidationError("make_logistic: coefficient size mismatch");
  if (!a10.allFinite() || !a11.allFinite())
    throw NonFinite("make_logistic: non-finite coefficients");
  if ((a11.array() <= 0.0).any())
    throw ValidationError("make_logistic: a11 must be positive");
  const Eigen::ArrayXd ratio = a10.array() / a11.array();
  if (ratio.minCoeff() <= 0.0)
    throw ValidationError("make_logistic: inf a10/a11 must be positive");
  VectorFieldSet vfs;
  vfs.dim = 1;
  if (region) {
    vfs.region = std::move(*region);
  } else {
    // [p0, p1], padded so the one-ratio case keeps a nonempty interval.
    const double p0 = ratio.minCoeff(), p1 = ratio.maxCoeff();
    const double pad = 1e-6 * (1.0 + p1);
    vfs.region = Region::interval(p0 - pad, p1 + pad);
  }
  if (vfs.region.dim != 1)
    throw ValidationError("make_logistic: region must be one-dimensional");
  vfs.fields = LogisticFields{std::move(a10), std::move(a11)};
  return vfs;
}

VectorFieldSet make_projective(std::vector<Eigen::MatrixXd> a) {
  if (a.empty()) throw ValidationError("make_projective: no matrices");
  const int d = static_cast<int>(a.front().rows());
  check_square(a, d, "make_projective");
  for (const auto& m : a)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (i != j && m(i, j) < 0.0)
          throw ValidationError(
              "make_projective: matrices must be cooperative (off-diagonal >= 0)");
  VectorFieldSet vfs;
  vfs.dim = d;
  vfs.region = Region::simplex(d);
  vfs.fields = ProjectiveFields{std::move(a)};
  return vfs;
}

VectorFieldSet make_general(int states,
                            std::function<Eigen::VectorXd(int, const Eigen::VectorXd&)> f,
                            Region region, double rk_tol) {
  if (states < 1) throw ValidationError("make_general: need >= 1 state");
  if (!f) throw ValidationError("make_general: missing evaluator");
  VectorFieldSet vfs;
  vfs.dim = region.dim;
  vfs.region = std::move(region);
  vfs.fields = GeneralFields{states, std::move(f), rk_tol};
  return vfs;
}

VectorFieldSet averaged(const VectorFieldSet& vfs, const Eigen::VectorXd& pi) {
  const int n = vfs.env_states();
  if (pi.size() != n) throw ValidationError("averaged: pi size mismatch");
  VectorFieldSet avg;
  avg.dim = vfs.dim;
  avg.region = vfs.region;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinearFields>) {
          Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(vfs.dim, vfs.dim);
          Eigen::VectorXd bbar = Eigen::VectorXd::Zero(vfs.dim);
          for (int s = 0; s < n; ++s) {
            abar += pi[s] * f.a[s];
            if (!f.b.empty()) bbar += pi[s] * f.b[s];
          }
          std::vector<Eigen::VectorXd> b;
          if (!f.b.empty()) b.push_back(std::move(bbar));
          avg.fields = LinearFields{{std::move(abar)}, std::move(b)};
        } else if constexpr (std::is_same_v<T, LogisticFields>) {
          Eigen::VectorXd a10(1), a11(1);
          a10(0) = pi.dot(f.a10);
          a11(0) = pi.dot(f.a11);
          avg.fields = LogisticFields{std::move(a10), std::move(a11)};
        } else if constexpr (std::is_same_v<T, ProjectiveFields>) {
          Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(vfs.dim, vfs.dim);
          for (int s = 0; s < n; ++s) abar += pi[s] * f.a[s];
          avg.fields = ProjectiveFields{{std::move(abar)}};
        } else {
          VectorFieldSet copy = vfs;
          Eigen::VectorXd w = pi;
          avg.fields = GeneralFields{
              1,
              [copy, w](int, const Eigen::VectorXd& x) {
                Eigen::VectorXd v = Eigen::VectorXd::Zero(copy.dim);
                for (int s = 0; s < copy.env_states(); ++s)
                  v += w[s] * copy.eval(s, x);
                return v;
              },
              f.rk_tol};
        }
      },
      vfs.fields);
  return avg;
}

// ------------------------------------------------------------- RK45 core

namespace {

struct Dp45 {
  // Dormand-Prince 5(4) tableau.
  static constexpr double c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

OdeUntilResult rk45_loop(const OdeRhs& rhs, Eigen::VectorXd y, double t0,
                         double t_end,
                         const std::function<bool(double, const Eigen::VectorXd&)>* stop,
                         const OdeOptions& opts) {
  const Eigen::Index n = y.size();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n),
      y5(n), err(n);
  double t = t0;

  if (stop && (*stop)(t, y)) return {std::move(y), t, true};
  if (t_end <= t0) return {std::move(y), t, false};

  double h = opts.initial_step > 0 ? opts.initial_step
                                   : std::min(1e-2 * (t_end - t0) + 1e-12, 0.1);
  if (opts.max_step > 0) h = std::min(h, opts.max_step);

  while (t < t_end) {
    if (t_end - t <= 1e-14 * std::max(1.0, std::abs(t_end))) break;  // done up to rounding
    h = std::min(h, t_end - t);
    if (h < 1e-14 * std::max(1.0, std::abs(t)))
      throw StepFailure("rk45: step size underflow");

    rhs(t, y, k1);
    ytmp = y + h * (Dp45::a21 * k1);
    rhs(t + Dp45::c[1] * h, ytmp, k2);
    ytmp = y + h * (Dp45::a31 * k1 + Dp45::a32 * k2);
    rhs(t + Dp45::c[2] * h, ytmp, k3);
    ytmp = y + h * (Dp45::a41 * k1 + Dp45::a42 * k2 + Dp45::a43 * k3);
    rhs(t + Dp45::c[3] * h, ytmp, k4);
    ytmp = y + h * (Dp45::a51 * k1 + Dp45::a52 * k2 + Dp45::a53 * k3 +
                    Dp45::a54 * k4);
    rhs(t + Dp45::c[4] * h, ytmp, k5);
    ytmp = y + h * (Dp45::a61 * k1 + Dp45::a62 * k2 + Dp45::a63 * k3 +
                    Dp45::a64 * k4 + Dp45::a65 * k5);
    rhs(t + h, ytmp, k6);
    y5 = y + h * (Dp45::b1 * k1 + Dp45::b3 * k3 + Dp45::b4 * k4 +
                  Dp45::b5 * k5 + Dp45::b6 * k6);
    rhs(t + h, y5, k7);
    err = h * (Dp45::e1 * k1 + Dp45::e3 * k3 + Dp45::e4 * k4 + Dp45::e5 * k5 +
               Dp45::e6 * k6 + Dp45::e7 * k7);

    double scaled = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc =
          opts.abs_tol +
          opts.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      const double r = err[i] / sc;
      scaled += r * r;
    }
    scaled = std::sqrt(scaled / static_cast<double>(n));

    if (scaled <= 1.0) {
      t += h;
      y.swap(y5);
      if (!y.allFinite()) throw StepFailure("rk45: non-finite state");
      if (stop && (*stop)(t, y)) return {std::move(y), t, true};
    }
    const double factor =
        std::clamp(0.9 * std::pow(std::max(scaled, 1e-10), -0.2), 0.2, 5.0);
    h *= factor;
    if (opts.max_step > 0) h = std::min(h, opts.max_step);
  }
  return {std::move(y), t, false};
}

}  // namespace

Eigen::VectorXd integrate_rk45(const OdeRhs& rhs, Eigen::VectorXd y0, double t0,
                               double t1, const OdeOptions& opts) {
  return rk45_loop(rhs, std::move(y0), t0, t1, nullptr, opts).y;
}

OdeUntilResult integrate_rk45_until(
    const OdeRhs& rhs, Eigen::VectorXd y0, double t0, double t_max,
    const std::function<bool(double, const Eigen::VectorXd&)>& stop,
    const OdeOptions& opts) {
  return rk45_loop(rhs, std::move(y0), t0, t_max, &stop, opts);
}

// ------------------------------------------------------------------ flow

Eigen::VectorXd flow(const VectorFieldSet& vfs, int s, const Eigen::VectorXd& x0,
                     double t) {
  if (!std::isfinite(t) || t < 0.0)
    throw NonFinite("flow: t must be finite and >= 0");
  if (s < 0 || s >= vfs.env_states())
    throw ValidationError("flow: environment state out of range");
  if (x0.size() != vfs.dim) throw ValidationError("flow: x0 size mismatch");

  // Trajectories that start outside the declared region (entry transients)
  // are not held to the invariance contract.
  const bool started_inside = vfs.region.contains(x0, region_tol(vfs.region));

  Eigen::VectorXd out = std::visit(
      [&](const auto& f) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinearFields>) {
          return linear_exact_flow(f.a[s], f.b.empty() ? nullptr : &f.b[s], x0, t);
        } else if constexpr (std::is_same_v<T, LogisticFields>) {
          Eigen::VectorXd r(1);
          r(0) = logistic_exact_flow(f.a10[s], f.a11[s], x0(0), t);
          return r;
        } else if constexpr (std::is_same_v<T, ProjectiveFields>) {
          return flow_projective(vfs, s, x0, t).theta;
        } else {
          if (t == 0.0) return x0;
          const double band = region_tol(vfs.region);
          OdeOptions o;
          o.abs_tol = o.rel_tol = f.rk_tol;
          auto rhs = [&f, s](double, const Eigen::VectorXd& y,
                             Eigen::VectorXd& dy) { dy = f.f(s, y); };
          auto outside = [&](double, const Eigen::VectorXd& y) {
            return !vfs.region.contains(y, 1e3 * band);
          };
          if (!vfs.region.contains(x0, band))
            return integrate_rk45(rhs, x0, 0.0, t, o);
          auto res = integrate_rk45_until(rhs, x0, 0.0, t, outside, o);
          if (res.stopped)
            throw LeftRegion("flow: trajectory left the declared region");
          return res.y;
        }
      },
      vfs.fields);

  if (started_inside && !vfs.region.contains(out, region_tol(vfs.region)))
    throw LeftRegion("flow: result outside the declared region");
  return out;
}

ProjectiveFlow flow_projective(const VectorFieldSet& vfs, int s,
                               const Eigen::VectorXd& x0, double t) {
  const auto* pf = std::get_if<ProjectiveFields>(&vfs.fields);
  if (!pf) throw ValidationError("flow_projective: not a projective field set");
  if (!std::isfinite(t) || t < 0.0)
    throw NonFinite("flow_projective: t must be finite and >= 0");
  Eigen::VectorXd y = t == 0.0 ? x0 : Eigen::VectorXd(expm(t * pf->a[s]) * x0);
  const double mass = y.sum();
  if (!(mass > 0.0))
    throw NumericalError("flow_projective: trajectory left the positive cone");
  return {y / mass, std::log(mass)};
}

VariationalFlow variational_flow(const VectorFieldSet& avg, const Eigen::VectorXd& x0,
                                 double t, const Eigen::MatrixXd& basis,
                                 double rk_tol) {
  const int d = avg.dim;
  const int k = static_cast<int>(basis.cols());
  if (const auto* lf = std::get_if<LinearFields>(&avg.fields)) {
    const Eigen::MatrixXd phi = expm(t * lf->a[0]);
    return {flow(avg, 0, x0, t), phi * basis};
  }
  if (const auto* lg = std::get_if<LogisticFields>(&avg.fields)) {
    VariationalFlow vf;
    vf.x = flow(avg, 0, x0, t);
    vf.psi = logistic_dflow_1d(lg->a10[0], lg->a11[0], x0(0), t) * basis;
    return vf;
  }
  // Projective / general: integrate the variational columns alongside.
  Eigen::VectorXd y0(d + d * k);
  y0.head(d) = x0;
  Eigen::Map<Eigen::MatrixXd>(y0.data() + d, d, k) = basis;
  OdeOptions o;
  o.abs_tol = o.rel_tol = rk_tol;
  auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.resize(y.size());
    const Eigen::VectorXd x = y.head(d);
    const Eigen::Map<const Eigen::MatrixXd> psi(y.data() + d, d, k);
    dy.head(d) = avg.eval(0, x);
    Eigen::Map<Eigen::MatrixXd>(dy.data() + d, d, k) = avg.jacobian(0, x) * psi;
  };
  Eigen::VectorXd yt = integrate_rk45(rhs, y0, 0.0, t, o);
  VariationalFlow vf;
  vf.x = yt.head(d);
  vf.psi = Eigen::Map<Eigen::MatrixXd>(yt.data() + d, d, k);
  return vf;
}

// ----------------------------------------------------------- equilibrium

namespace {

Eigen::VectorXd newton_step(const VectorFieldSet& avg, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& fx) {
  const int d = avg.dim;
  Eigen::MatrixXd j;
  if (std::holds_alternative<GeneralFields>(avg.fields)) {
    // FD Jacobian with the step prescribed for user models.
    j.resize(d, d);
    const double h = 1e-6 * (1.0 + x.norm());
    Eigen::VectorXd xp = x, xm = x;
    for (int c = 0; c < d; ++c) {
      xp(c) += h;
      xm(c) -= h;
      j.col(c) = (avg.eval(0, xp) - avg.eval(0, xm)) / (2.0 * h);
      xp(c) = x(c);
      xm(c) = x(c);
    }
  } else {
    j = avg.jacobian(0, x);
  }
  if (avg.region.kind == Region::Kind::Simplex) {
    Eigen::MatrixXd m(d + 1, d);
    m.topRows(d) = j;
    m.row(d).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d + 1);
    rhs.head(d) = -fx;
    return m.completeOrthogonalDecomposition().solve(rhs);
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(j);
  Eigen::VectorXd step = lu.solve(-fx);
  if (!step.allFinite()) step = solve_lstsq(j, -fx);
  return step;
}

}  // namespace

Equilibrium find_equilibrium(const VectorFieldSet& avg, const Eigen::VectorXd& x_init,
                             const EquilibriumOptions& opts) {
  if (avg.env_states() != 1)
    throw ValidationError("find_equilibrium: expected an averaged (1-state) field");
  if (x_init.size() != avg.dim)
    throw ValidationError("find_equilibrium: x_init size mismatch");

  const double diam = avg.region.diameter();
  Eigen::VectorXd x = x_init;
  double res = avg.eval(0, x).cwiseAbs().maxCoeff();

  // Relax along the flow until Newton has a basin.
  double chunk = 1.0;
  double elapsed = 0.0;
  while (res > 1e-4 * std::max(1.0, diam) && elapsed < opts.max_horizon) {
    Eigen::VectorXd xn = flow(avg, 0, x, chunk);
    const double dx = (xn - x).cwiseAbs().maxCoeff();
    x = std::move(xn);
    elapsed += chunk;
    res = avg.eval(0, x).cwiseAbs().maxCoeff();
    if (dx < opts.dx_tol) break;
    if (elapsed > 32.0 * chunk) chunk = std::min(2.0 * chunk, 64.0);
  }
  if (elapsed >= opts.max_horizon && res > 1e-4 * std::max(1.0, diam))
    throw NoConvergence(
        "find_equilibrium: averaged flow did not settle within the horizon "
        "(global attraction may fail for this model)");

  // Damped Newton polish.
  for (int it = 0; it < opts.max_newton && res > opts.residual_tol; ++it) {
    const Eigen::VectorXd fx = avg.eval(0, x);
    const Eigen::VectorXd step = newton_step(avg, x, fx);
    double lambda = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half) {
      Eigen::VectorXd cand = x + lambda * step;
      const double cres = avg.eval(0, cand).cwiseAbs().maxCoeff();
      if (cres < res) {
        x = std::move(cand);
        res = cres;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) {
      // Fall back to flowing; helps when the FD Jacobian is poor far out.
      x = flow(avg, 0, x, 1.0);
      res = avg.eval(0, x).cwiseAbs().maxCoeff();
      elapsed += 1.0;
      if (elapsed >= opts.max_horizon)
        throw NoConvergence("find_equilibrium: Newton stalled");
    }
  }
  if (res > opts.residual_tol)
    throw NoConvergence("find_equilibrium: residual above tolerance");
  if (!avg.region.contains(x, region_tol(avg.region)))
    throw LeftRegion("find_equilibrium: equilibrium escaped the region");
  return Equilibrium{std::move(x), res};
}

// ---------------------------------------------------------- flow_integral

FlowIntegralResult flow_integral(const VectorFieldSet& avg, const ScalarField& g,
                                 const Eigen::VectorXd& x0, const Equilibrium& eq,
                                 const FlowIntegralOptions& opts) {
  const int d = avg.dim;
  const double cut = opts.cut_frac * std::max(1e-12, avg.region.diameter());
  const double g_bar = g.value(eq.xbar);

  Eigen::VectorXd y0(d + 1);
  y0.head(d) = x0;
  y0(d) = 0.0;

  OdeOptions o;
  o.abs_tol = o.rel_tol = opts.rk_tol;
  auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.resize(d + 1);
    const Eigen::VectorXd x = y.head(d);
    dy.head(d) = avg.eval(0, x);
    dy(d) = g_bar - g.value(x);
  };
  auto stop = [&](double, const Eigen::VectorXd& y) {
    return (y.head(d) - eq.xbar).norm() < cut;
  };
  auto res = integrate_rk45_until(rhs, y0, 0.0, opts.max_horizon, stop, o);
  if (!res.stopped)
    throw NoConvergence("flow_integral: trajectory did not reach the attractor");

  const Eigen::VectorXd e = res.y.head(d) - eq.xbar;
  const Eigen::MatrixXd j = avg.jacobian(0, eq.xbar);
  const double tail = g.gradient(eq.xbar).dot(solve_lstsq(j, e));

  FlowIntegralResult out;
  out.value = res.y(d) + tail;
  out.tail = tail;
  out.horizon = res.t;
  // Heuristic: the linearized tail is wrong by a relative O(|e|) curvature term.
  out.truncation_estimate =
      std::abs(tail) * (e.norm() / std::max(1e-3, 0.01 * avg.region.diameter()));
  return out;
}

FlowIntegralGradResult flow_integral_grad(const VectorFieldSet& avg,
                                          const ScalarField& g,
                                          const Eigen::VectorXd& x0,
                                          const Equilibrium& eq,
                                          const Eigen::MatrixXd& basis,
                                          const FlowIntegralOptions& opts) {
  const int d = avg.dim;
  const int k = static_cast<int>(basis.cols());
  const double cut = opts.cut_frac * std::max(1e-12, avg.region.diameter());
  const double g_bar = g.value(eq.xbar);

  // State layout: [x (d) | h (1) | G (k) | Psi (d*k)].
  Eigen::VectorXd y0(d + 1 + k + d * k);
  y0.setZero();
  y0.head(d) = x0;
  Eigen::Map<Eigen::MatrixXd>(y0.data() + d + 1 + k, d, k) = basis;

  OdeOptions o;
  o.abs_tol = o.rel_tol = opts.rk_tol;
  auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.resize(y.size());
    const Eigen::VectorXd x = y.head(d);
    const Eigen::Map<const Eigen::MatrixXd> psi(y.data() + d + 1 + k, d, k);
    dy.head(d) = avg.eval(0, x);
    dy(d) = g_bar - g.value(x);
    dy.segment(d + 1, k) = -psi.transpose() * g.gradient(x);
    Eigen::Map<Eigen::MatrixXd>(dy.data() + d + 1 + k, d, k) =
        avg.jacobian(0, x) * psi;
  };
  auto stop = [&](double, const Eigen::VectorXd& y) {
    return (y.head(d) - eq.xbar).norm() < cut;
  };
  auto res = integrate_rk45_until(rhs, y0, 0.0, opts.max_horizon, stop, o);
  if (!res.stopped)
    throw NoConvergence("flow_integral_grad: trajectory did not reach the attractor");

  const Eigen::VectorXd e = res.y.head(d) - eq.xbar;
  const Eigen::MatrixXd j = avg.jacobian(0, eq.xbar);
  const Eigen::VectorXd grad_bar = g.gradient(eq.xbar);
  const Eigen::MatrixXd psi_end =
      Eigen::Map<const Eigen::MatrixXd>(res.y.data() + d + 1 + k, d, k);

  FlowIntegralGradResult out;
  out.tail = grad_bar.dot(solve_lstsq(j, e));
  out.value = res.y(d) + out.tail;
  out.grad_coeffs = res.y.segment(d + 1, k) +
                    psi_end.transpose() * solve_lstsq(j.transpose(), grad_bar);
  out.horizon = res.t;
  return out;
}

// -------------------------------------------------------------- FD tools

Eigen::MatrixXd fd_basis(const Region& region) {
  if (region.kind == Region::Kind::Box)
    return Eigen::MatrixXd::Identity(region.dim, region.dim);
  const int d = region.dim;
  Eigen::MatrixXd ones(d, 1);
  ones.setOnes();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones);
  Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(d - 1);
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, const Eigen::MatrixXd& basis,
                            double h) {
  Eigen::VectorXd coeffs(basis.cols());
  for (int i = 0; i < basis.cols(); ++i) {
    const Eigen::VectorXd v = basis.col(i);
    coeffs(i) = (f(x + h * v) - f(x - h * v)) / (2.0 * h);
  }
  return basis * coeffs;
}

}  // namespace switchode

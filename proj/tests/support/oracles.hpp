// Test-only oracles, independent of the library implementation paths they
// check: dense null-space solves, spectral two-state semigroups, quadrature
// reference integrals, KS statistics and special functions.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "switchode/rng.hpp"

namespace oracles {

// Stationary law by a dense null-space solve on Q^T (FullPivLU kernel).
inline Eigen::VectorXd stationary_nullspace(const Eigen::MatrixXd& q) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(q.transpose());
  lu.setThreshold(1e-10);
  const Eigen::MatrixXd kernel = lu.kernel();
  if (kernel.cols() != 1) throw std::runtime_error("kernel dimension != 1");
  Eigen::VectorXd pi = kernel.col(0);
  if (pi.sum() < 0.0) pi = -pi;
  return pi / pi.sum();
}

// e^{tQ} for a two-state generator [[-p, p], [q, -q]] by spectral
// decomposition: Pi + e^{-(p+q)t} (I - Pi).
inline Eigen::MatrixXd two_state_semigroup(double p, double q, double t) {
  Eigen::MatrixXd big_pi(2, 2);
  big_pi << q / (p + q), p / (p + q), q / (p + q), p / (p + q);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  return big_pi + std::exp(-(p + q) * t) * (eye - big_pi);
}

// Composite-Simpson matrix quadrature of integral_0^T m(t) dt.
inline Eigen::MatrixXd simpson_matrix(
    const std::function<Eigen::MatrixXd(double)>& m, double t1, int panels) {
  const double h = t1 / (2 * panels);
  Eigen::MatrixXd acc = m(0.0) + m(t1);
  for (int k = 1; k < 2 * panels; ++k)
    acc += m(k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  return acc * (h / 3.0);
}

// Regularized lower incomplete gamma P(a, x) (series + continued fraction).
inline double gammap(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::runtime_error("gammap domain");
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

// Asymptotic KS critical value at level alpha.
inline double ks_critical(std::size_t n, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c / std::sqrt(static_cast<double>(n));
}

inline double exp_cdf(double rate, double x) {
  return x <= 0.0 ? 0.0 : -std::expm1(-rate * x);
}

inline double gamma_cdf(double shape, double rate, double x) {
  return x <= 0.0 ? 0.0 : gammap(shape, rate * x);
}

// Random irreducible generator with a guaranteed cycle.
inline Eigen::MatrixXd random_generator(switchode::Rng& rng, int n) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rng.uniform01() < 0.7) q(i, j) = rng.uniform(0.1, 2.0);
  for (int i = 0; i < n; ++i) q(i, (i + 1) % n) = rng.uniform(0.2, 2.0);
  for (int i = 0; i < n; ++i) q(i, i) = -q.row(i).sum() + q(i, i);
  return q;
}

inline Eigen::MatrixXd random_cooperative(switchode::Rng& rng, int d) {
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      a(i, j) = i == j ? rng.uniform(-3.0, -0.5) : rng.uniform(0.1, 1.5);
  return a;
}

inline double loglog_slope(const std::vector<double>& x,
                           const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::max(std::abs(y[i]), 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracles

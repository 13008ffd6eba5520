// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#include "switchode/linalg.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "switchode/errors.hpp"

namespace switchode {

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (n != a.cols()) throw ValidationError("expm: matrix must be square");
  if (!a.allFinite()) throw NonFinite("expm: matrix has non-finite entries");
  if (n == 0) return a;
  if (n == 1) {
    Eigen::MatrixXd r(1, 1);
    r(0, 0) = std::exp(a(0, 0));
    return r;
  }
  if (n == 2) {
    // Closed form: with B = A - mu I traceless, B^2 = delta I.
    const double mu = 0.5 * (a(0, 0) + a(1, 1));
    const double b00 = a(0, 0) - mu;
    const double delta = b00 * b00 + a(0, 1) * a(1, 0);
    double ch, shq;  // cosh(q), sinh(q)/q with q^2 = delta
    const double ad = std::abs(delta);
    if (ad < 1e-24) {
      ch = 1.0 + 0.5 * delta;
      shq = 1.0 + delta / 6.0;
    } else if (delta > 0.0) {
      const double q = std::sqrt(delta);
      ch = std::cosh(q);
      shq = std::sinh(q) / q;
    } else {
      const double w = std::sqrt(-delta);
      ch = std::cos(w);
      shq = std::sin(w) / w;
    }
    const double em = std::exp(mu);
    Eigen::MatrixXd r(2, 2);
    r(0, 0) = em * (ch + shq * b00);
    r(0, 1) = em * shq * a(0, 1);
    r(1, 0) = em * shq * a(1, 0);
    r(1, 1) = em * (ch - shq * b00);
    return r;
  }

  // Padé-13 coefficients.
  static const double b[] = {64764752532480000.0, 32382376266240000.0,
                             7771770303897600.0,  1187353796428800.0,
                             129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,
                             1323241920.0,        40840800.0,
                             960960.0,            16380.0,
                             182.0,               1.0};
  const double theta13 = 5.371920351148152;

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  }
  const Eigen::MatrixXd as = a / std::ldexp(1.0, squarings);

  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a2 = as * as;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a2 * a4;

  Eigen::MatrixXd u =
      as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
            b[5] * a4 + b[3] * a2 + b[1] * ident);
  Eigen::MatrixXd v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                      b[4] * a4 + b[2] * a2 + b[0] * ident;

  Eigen::MatrixXd f = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) f = f * f;
  return f;
}

double spectral_abscissa(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericalError("spectral_abscissa: eigensolver failed");
  return es.eigenvalues().real().maxCoeff();
}

double spectral_gap(const Eigen::MatrixXd& generator) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(generator, false);
  if (es.info() != Eigen::Success)
    throw NumericalError("spectral_gap: eigensolver failed");
  double gap = std::numeric_limits<double>::infinity();
  const auto ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double re = -ev[i].real();
    if (re > 1e-12 && re < gap) gap = re;
  }
  if (!std::isfinite(gap))
    throw NumericalError("spectral_gap: no nonzero eigenvalue found");
  return gap;
}

Eigen::VectorXd solve_lstsq(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  return a.completeOrthogonalDecomposition().solve(b);
}

bool strongly_connected_positive(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 1) return true;
  auto reaches_all = [n](auto edge) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        if (!seen[v] && u != v && edge(u, v)) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == n;
  };
  const auto fwd = [&m](int u, int v) { return m(u, v) > 0.0; };
  const auto bwd = [&m](int u, int v) { return m(v, u) > 0.0; };
  return reaches_all(fwd) && reaches_all(bwd);
}

}  // namespace switchode

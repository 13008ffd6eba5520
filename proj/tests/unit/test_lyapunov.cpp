#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "switchode/errors.hpp"
#include "switchode/linalg.hpp"
#include "switchode/lyapunov.hpp"
#include "switchode/reproduce.hpp"

using namespace switchode;

namespace {

EnvKind two_state(double p, double q) {
  Eigen::MatrixXd m(2, 2);
  m << -p, p, q, -q;
  return EnvGenerator(m);
}

SimConfig quick_mc(std::uint64_t seed, double eps) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.epsilon = eps;
  cfg.horizon = 150.0;
  cfg.burn_in = 15.0;
  cfg.n_traj = 16;
  cfg.batch_count = 16;
  return cfg;
}

}  // namespace

TEST_CASE("perron: symmetric pair") {
  Eigen::MatrixXd sym(2, 2);
  sym << -1.0, 1.0, 1.0, -1.0;
  const PerronPair pp = perron_matrix(sym);
  CHECK(pp.lambda_max == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pp.xbar(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pp.xbar(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pp.ybar(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pp.ybar(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perron: invariants and the dense-eigensolver oracle") {
  Rng rng(404, 0);
  for (int trial = 0; trial < 12; ++trial) {
    const int d = 2 + static_cast<int>(rng.uniform_int(3));
    const Eigen::MatrixXd m = oracles::random_cooperative(rng, d);
    const PerronPair pp = perron_matrix(m);

    CHECK((m * pp.xbar - pp.lambda_max * pp.xbar).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((m.transpose() * pp.ybar - pp.lambda_max * pp.ybar).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK(pp.xbar.minCoeff() > 0.0);
    CHECK(pp.xbar.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pp.xbar.dot(pp.ybar) == doctest::Approx(1.0).epsilon(1e-12));

    // QR-iteration oracle.
    Eigen::EigenSolver<Eigen::MatrixXd> es(m);
    double lam = -1e300;
    for (int i = 0; i < d; ++i) lam = std::max(lam, es.eigenvalues()[i].real());
    CHECK(pp.lambda_max == doctest::Approx(lam).epsilon(1e-8));
  }
}

TEST_CASE("the p = 0 endpoint: reducible average is rejected; eigenvalue -1") {
  // A0 alone is lower triangular with diagonal {-1, -1, -10}; its dominant
  // eigenvalue is read off directly, but the Perron pair does not exist
  // (defective dominant pair, left . right = 0), so construction fails.
  CHECK(spectral_abscissa(fmc_a0()) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK_THROWS_AS(make_switched_linear({fmc_a0(), fmc_a0()}, two_state(1.0, 1.0)),
                  NotIrreducible);
}

TEST_CASE("c1_closed_form: constant matrices give zero") {
  const Eigen::MatrixXd a = 0.4 * fmc_a0() + 0.6 * fmc_a1();
  const SwitchedLinearSystem sys = make_switched_linear({a, a}, two_state(0.7, 1.1));
  CHECK(std::abs(c1_closed_form(sys, perron(sys))) < 1e-12);
}

TEST_CASE("c1_closed_form: two-state display formula") {
  Rng rng(404, 1);
  for (int trial = 0; trial < 8; ++trial) {
    const Eigen::MatrixXd a0 = oracles::random_cooperative(rng, 3);
    const Eigen::MatrixXd a1 = oracles::random_cooperative(rng, 3);
    const double p = rng.uniform(0.1, 0.9);
    // Unit-total-rate chain with pi = (p, 1-p).
    Eigen::MatrixXd q(2, 2);
    q << -(1.0 - p), 1.0 - p, p, -p;
    const SwitchedLinearSystem sys = make_switched_linear({a0, a1}, EnvGenerator(q));
    const PerronPair pp = perron(sys);
    const Eigen::MatrixXd d = a0 - a1;
    const double ydx = pp.ybar.dot(d * pp.xbar);
    const double direct =
        p * (1.0 - p) * (pp.ybar.dot(d * (d * pp.xbar)) - ydx * ydx);
    CHECK(c1_closed_form(sys, pp) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("c1_closed_form: resampling kernel and the Jensen bound") {
  Rng rng(404, 2);
  Eigen::VectorXd pi(3);
  pi << 0.3, 0.45, 0.25;
  std::vector<Eigen::MatrixXd> mats;
  for (int s = 0; s < 3; ++s) mats.push_back(oracles::random_cooperative(rng, 3));
  const SwitchedLinearSystem sys = make_switched_linear(mats, make_resample(pi));
  const PerronPair pp = perron(sys);
  const double c1 = c1_closed_form(sys, pp);

  // c1 = sum_s pi_s [ y A^2 x - (y A x)^2 ].
  double direct = 0.0;
  Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(3, 3);
  Eigen::MatrixXd a2bar = Eigen::MatrixXd::Zero(3, 3);
  for (int s = 0; s < 3; ++s) {
    const double yax = pp.ybar.dot(mats[s] * pp.xbar);
    direct += pi[s] * (pp.ybar.dot(mats[s] * (mats[s] * pp.xbar)) - yax * yax);
    abar += pi[s] * mats[s];
    a2bar += pi[s] * mats[s] * mats[s];
  }
  CHECK(c1 == doctest::Approx(direct).epsilon(1e-10));

  // Jensen: c1 <= y (A^2bar - Abar^2) x.
  const double bound = pp.ybar.dot((a2bar - abar * abar) * pp.xbar);
  CHECK(c1 <= bound + 1e-12);
}

TEST_CASE("sweep: identical matrices give c1 = 0 on the whole grid") {
  const Eigen::MatrixXd a = 0.4 * fmc_a0() + 0.6 * fmc_a1();
  for (const auto& row : sweep_p(a, a, {0.2, 0.5, 0.8})) {
    CHECK(std::abs(row.c1) < 1e-10);
    CHECK(row.lambda_max == doctest::Approx(spectral_abscissa(a)).epsilon(1e-10));
  }
}

TEST_CASE("sweep: FMC figure intervals (coarse grid smoke)") {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
  const auto rows = sweep_p(fmc_a0(), fmc_a1(), grid);
  std::size_t star = 0;
  double min_c1 = 1e300;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].lambda_max > rows[star].lambda_max) star = i;
    if (rows[i].p >= 0.3 && rows[i].p <= 0.5) min_c1 = std::min(min_c1, rows[i].c1);
  }
  CHECK(rows[star].p >= 0.3);
  CHECK(rows[star].p <= 0.5);
  CHECK(rows[star].lambda_max >= -0.5);
  CHECK(rows[star].lambda_max <= -0.45);
  CHECK(min_c1 >= 15.0);
}

TEST_CASE("lyapunov_mc: constant matrix recovers lambda_max") {
  const Eigen::MatrixXd a = 0.4 * fmc_a0() + 0.6 * fmc_a1();
  const SwitchedLinearSystem sys = make_switched_linear({a, a}, two_state(1.0, 1.0));
  const auto est = lyapunov_mc(sys, quick_mc(808, 0.1),
                               Eigen::VectorXd::Constant(3, 1.0 / 3.0), 0);
  const double lam = spectral_abscissa(a);
  CHECK(std::abs(est.log_growth.mean - lam) <
        std::max(3.0 * est.log_growth.std_error, 1e-8));
}

TEST_CASE("lyapunov_mc: the two estimators agree on the same paths") {
  const SwitchedLinearSystem sys =
      make_switched_linear({fmc_a0(), fmc_a1()}, two_state(0.6, 0.4));
  const auto est = lyapunov_mc(sys, quick_mc(809, 0.1),
                               Eigen::VectorXd::Constant(3, 1.0 / 3.0), 0);
  const double combined = std::hypot(est.log_growth.std_error, est.ergodic.std_error);
  CHECK(std::abs(est.log_growth.mean - est.ergodic.mean) <
        std::max(3.0 * combined, 1e-3));
}

TEST_CASE("lyapunov_mc: commuting diagonal pair") {
  // Diagonal matrices violate the irreducibility invariant, but the
  // simulator itself is well-defined; the exponent is the dominant average
  // diagonal entry.
  Eigen::MatrixXd d0 = Eigen::Vector2d(-1.0, -2.0).asDiagonal();
  Eigen::MatrixXd d1 = Eigen::Vector2d(-3.0, 0.5).asDiagonal();
  SwitchedLinearSystem sys{{d0, d1}, two_state(1.0, 1.0)};
  const auto est =
      lyapunov_mc(sys, quick_mc(810, 0.1), Eigen::Vector2d(0.5, 0.5), 0);
  const double expect = std::max(0.5 * (-1.0 - 3.0), 0.5 * (-2.0 + 0.5));
  CHECK(std::abs(est.log_growth.mean - expect) <
        std::max(3.0 * est.log_growth.std_error, 1e-6));
}

TEST_CASE("scale invariance: A + delta I shifts the exponent by exactly delta") {
  const double delta = 0.3;
  const SwitchedLinearSystem sys =
      make_switched_linear({fmc_a0(), fmc_a1()}, two_state(0.6, 0.4));
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  const SwitchedLinearSystem shifted = make_switched_linear(
      {fmc_a0() + delta * eye, fmc_a1() + delta * eye}, two_state(0.6, 0.4));

  const SimConfig cfg = quick_mc(811, 0.1);
  const Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  const auto base = lyapunov_mc(sys, cfg, theta0, 0);
  const auto up = lyapunov_mc(shifted, cfg, theta0, 0);
  // Same seed, identical angular paths: the log accumulator shifts by
  // delta * t exactly (up to matrix-exponential rounding).
  CHECK(std::abs(up.log_growth.mean - base.log_growth.mean - delta) < 1e-9);
  CHECK(std::abs(up.ergodic.mean - base.ergodic.mean - delta) < 1e-9);
}

TEST_CASE("destabilization: trivially stable pair reports NotFound") {
  const Eigen::MatrixXd minus_i = -Eigen::MatrixXd::Identity(2, 2);
  CertificateConfig cc;
  cc.eps_grid = {0.1};
  cc.mc = quick_mc(812, 0.1);
  const Certificate cert = destabilization_certificate(minus_i, minus_i, cc);
  CHECK_FALSE(cert.found);
}

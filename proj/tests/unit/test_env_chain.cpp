#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "oracles.hpp"
#include "switchode/env_chain.hpp"
#include "switchode/errors.hpp"

using namespace switchode;

namespace {

EnvGenerator two_state(double p, double q) {
  Eigen::MatrixXd m(2, 2);
  m << -p, p, q, -q;
  return EnvGenerator(m);
}

}  // namespace

TEST_CASE("generator construction repairs benign drift and rejects bad input") {
  Eigen::MatrixXd m(2, 2);
  m << -1.0 + 1e-13, 1.0, 2.0, -2.0;
  const EnvGenerator gen(m);
  CHECK(gen.rates().row(0).sum() == doctest::Approx(0.0).epsilon(1e-15));

  m << -1.0, 1.0, 2.0, -2.0 + 1e-6;  // drift beyond tolerance
  CHECK_THROWS_AS(EnvGenerator{m}, ValidationError);

  m << -1.0, -1.0, 2.0, -2.0;  // negative off-diagonal
  CHECK_THROWS_AS(EnvGenerator{m}, ValidationError);

  Eigen::MatrixXd reducible = Eigen::MatrixXd::Zero(3, 3);
  reducible(0, 1) = 1.0;
  reducible(1, 0) = 1.0;
  reducible(0, 0) = -1.0;
  reducible(1, 1) = -1.0;  // state 2 isolated
  CHECK_THROWS_AS(EnvGenerator{reducible}, NotIrreducible);
}

TEST_CASE("stationary: two-state closed form and the single state") {
  const double p = 0.7, q = 1.9;
  const StationaryDist pi = stationary(two_state(p, q));
  CHECK(pi.pi(0) == doctest::Approx(q / (p + q)).epsilon(1e-14));
  CHECK(pi.pi(1) == doctest::Approx(p / (p + q)).epsilon(1e-14));
  CHECK((pi.pi.transpose() * two_state(p, q).rates()).cwiseAbs().maxCoeff() <
        1e-14);

  const EnvGenerator single{Eigen::MatrixXd::Zero(1, 1)};
  CHECK(stationary(single).pi(0) == 1.0);
}

TEST_CASE("stationary matches a dense null-space oracle on a random 5-state chain") {
  Rng rng(20260808, 1);
  const Eigen::MatrixXd q = oracles::random_generator(rng, 5);
  const Eigen::VectorXd pi = stationary(EnvGenerator(q)).pi;
  const Eigen::VectorXd ref = oracles::stationary_nullspace(q);
  CHECK((pi - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pseudo-inverse: two-state closed form Q/(p+q)^2") {
  const double p = 1.3, q = 0.4;
  const EnvGenerator gen = two_state(p, q);
  const Eigen::MatrixXd x = pseudo_inverse(gen).x;
  const Eigen::MatrixXd expected = gen.rates() / ((p + q) * (p + q));
  CHECK((x - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pseudo-inverse: n = 1 annihilates constants") {
  const EnvGenerator single{Eigen::MatrixXd::Zero(1, 1)};
  CHECK(pseudo_inverse(single).x(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("pseudo-inverse agrees with the defining quadrature") {
  // X f = integral_0^infty (Pi - e^{tQ}) f dt, truncated where the
  // spectral-gap tail is below 1e-10.
  Rng rng(20260808, 2);
  const Eigen::MatrixXd q = oracles::random_generator(rng, 4);
  const EnvGenerator gen(q);
  const Eigen::VectorXd pi = stationary(gen).pi;
  const Eigen::MatrixXd big_pi = Eigen::VectorXd::Ones(4) * pi.transpose();

  Eigen::EigenSolver<Eigen::MatrixXd> es(q);
  double gap = 1e300;
  for (int i = 0; i < 4; ++i) {
    const double re = -es.eigenvalues()[i].real();
    if (re > 1e-10) gap = std::min(gap, re);
  }
  const double t_max = std::log(1e10) / gap;
  const auto integrand = [&](double t) -> Eigen::MatrixXd {
    return big_pi - (t * q).exp();  // Eigen's expm as the independent route
  };
  const Eigen::MatrixXd ref = oracles::simpson_matrix(integrand, t_max, 4000);
  const Eigen::MatrixXd x = pseudo_inverse(gen).x;
  CHECK((x - ref).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("group-inverse axioms and annihilation on random generators") {
  Rng rng(20260808, 3);
  for (int trial = 0; trial < 24; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(7));
    const Eigen::MatrixXd q = oracles::random_generator(rng, n);
    const EnvGenerator gen(q);
    const Eigen::MatrixXd x = pseudo_inverse(gen).x;
    const Eigen::VectorXd pi = stationary(gen).pi;
    const Eigen::MatrixXd big_pi = Eigen::VectorXd::Ones(n) * pi.transpose();

    CHECK((q * x * q - q).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((x * q * x - x).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((x * q - q * x).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((q * x - (Eigen::MatrixXd::Identity(n, n) - big_pi))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    CHECK((pi.transpose() * x).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((x * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() < 1e-10);

    // Mean-zero vectors: Q(Xf) = X(Qf) = f.
    Eigen::VectorXd f(n);
    for (int i = 0; i < n; ++i) f[i] = rng.uniform(-1.0, 1.0);
    f -= Eigen::VectorXd::Constant(n, pi.dot(f));
    CHECK((q * (x * f) - f).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((x * (q * f) - f).cwiseAbs().maxCoeff() < 1e-10);

    // Asymptotic-variance nonnegativity.
    CHECK(-2.0 * pi.dot(f.cwiseProduct(x * f)) >= -1e-12);
  }
}

TEST_CASE("apply_pseudo_inverse on the resampling kernel") {
  const ResampleEnv re = make_resample(Eigen::Vector2d(0.5, 0.5));
  const EnvKind env = re;

  // Constants are annihilated.
  CHECK(apply_pseudo_inverse(env, Eigen::Vector2d(3.7, 3.7)).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0));
  // f = (1, 0): pi f - f = (-0.5, 0.5).
  const Eigen::VectorXd r = apply_pseudo_inverse(env, Eigen::Vector2d(1.0, 0.0));
  CHECK(r(0) == doctest::Approx(-0.5));
  CHECK(r(1) == doctest::Approx(0.5));

  // Rate-matrix route, p = q = 1: X f = Q f / 4 = (-0.25, 0.25).
  const EnvKind rm = two_state(1.0, 1.0);
  const Eigen::VectorXd r2 = apply_pseudo_inverse(rm, Eigen::Vector2d(1.0, 0.0));
  CHECK(r2(0) == doctest::Approx(-0.25).epsilon(1e-13));
  CHECK(r2(1) == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("semigroup: identity at t = 0, spectral form, ergodic limit") {
  const EnvGenerator gen = two_state(1.0, 1.0);
  CHECK((semigroup_at(gen, 0.0) - Eigen::MatrixXd::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-14);

  for (double t : {0.1, 0.7, 2.3}) {
    const Eigen::MatrixXd ref = oracles::two_state_semigroup(1.0, 1.0, t);
    CHECK((semigroup_at(gen, t) - ref).cwiseAbs().maxCoeff() < 1e-12);
  }

  Rng rng(20260808, 4);
  const EnvGenerator big(oracles::random_generator(rng, 6));
  const Eigen::MatrixXd late = semigroup_at(big, 80.0);
  const Eigen::VectorXd pi = stationary(big).pi;
  for (int i = 0; i < 6; ++i)
    CHECK((late.row(i).transpose() - pi).cwiseAbs().maxCoeff() < 1e-9);

  CHECK_THROWS_AS(semigroup_at(gen, -1.0), NonFinite);
}

TEST_CASE("semigroup rows are probability vectors and compose") {
  Rng rng(20260808, 5);
  const EnvGenerator gen(oracles::random_generator(rng, 5));
  for (int k = 0; k < 10; ++k) {
    const double t = rng.uniform(0.0, 5.0), s = rng.uniform(0.0, 5.0);
    const Eigen::MatrixXd qt = semigroup_at(gen, t);
    CHECK((qt.rowwise().sum() - Eigen::VectorXd::Ones(5)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK(qt.minCoeff() > -1e-12);
    const Eigen::MatrixXd comp = semigroup_at(gen, t) * semigroup_at(gen, s);
    CHECK((comp - semigroup_at(gen, t + s)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("sample_path: occupation fractions converge to pi") {
  const EnvGenerator gen = two_state(0.8, 1.6);
  const Eigen::VectorXd pi = stationary(gen).pi;
  Rng rng(20260808, 6);
  const double horizon = 1e4;
  const auto path = sample_path(EnvKind{gen}, 0, horizon, rng);
  Eigen::Vector2d occupied = Eigen::Vector2d::Zero();
  for (std::size_t k = 0; k < path.size(); ++k) {
    const double end = k + 1 < path.size() ? path[k + 1].time : horizon;
    occupied[path[k].state] += end - path[k].time;
  }
  occupied /= horizon;
  // Effective samples ~ number of cycles; 3 sigma with sigma ~ 1/sqrt(cycles).
  const double cycles = horizon / (1.0 / 0.8 + 1.0 / 1.6);
  CHECK(std::abs(occupied(0) - pi(0)) < 3.0 / std::sqrt(cycles));
}

TEST_CASE("sample_path: horizon 0 and resampling inter-jump law") {
  Rng rng(20260808, 7);
  const EnvGenerator gen = two_state(1.0, 1.0);
  const auto trivial = sample_path(EnvKind{gen}, 1, 0.0, rng);
  REQUIRE(trivial.size() == 1);
  CHECK(trivial[0].time == 0.0);
  CHECK(trivial[0].state == 1);

  // Resample: inter-jump times are Exp(1); KS at level 0.01 on 1e4 samples.
  const EnvKind env = make_resample(Eigen::Vector3d(0.2, 0.5, 0.3));
  std::vector<double> gaps;
  double t_prev = 0.0;
  const auto path = sample_path(env, 0, 11000.0, rng);
  for (std::size_t k = 1; k < path.size() && gaps.size() < 10000; ++k) {
    gaps.push_back(path[k].time - t_prev);
    t_prev = path[k].time;
  }
  REQUIRE(gaps.size() == 10000);
  const double d = oracles::ks_statistic(
      gaps, [](double x) { return oracles::exp_cdf(1.0, x); });
  CHECK(d < oracles::ks_critical(gaps.size(), 0.01));
}

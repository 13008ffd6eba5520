// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#include "switchode/env_chain.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "switchode/errors.hpp"
#include "switchode/linalg.hpp"

namespace switchode {

EnvGenerator::EnvGenerator(Eigen::MatrixXd rates) : rates_(std::move(rates)) {
  const Eigen::Index n = rates_.rows();
  if (n == 0 || rates_.cols() != n)
    throw ValidationError("EnvGenerator: rate matrix must be square, n >= 1");
  if (!rates_.allFinite())
    throw NonFinite("EnvGenerator: rate matrix has non-finite entries");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && rates_(i, j) < 0.0) {
        std::ostringstream msg;
        msg << "EnvGenerator: negative off-diagonal rate at (" << i << "," << j
            << ")";
        throw ValidationError(msg.str());
      }
    }
  }
  // Repair benign row-sum drift by resetting the diagonal; reject more.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double drift = rates_.row(i).sum();
    if (std::abs(drift) > 1e-12 * std::max(1.0, rates_.row(i).cwiseAbs().sum()))
      throw ValidationError("EnvGenerator: row sums must vanish (drift beyond 1e-12)");
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) off += rates_(i, j);
    rates_(i, i) = -off;
  }
  if (!strongly_connected_positive(rates_))
    throw NotIrreducible("EnvGenerator: chain is not irreducible");
}

ResampleEnv make_resample(Eigen::VectorXd pi) {
  if (pi.size() == 0) throw ValidationError("resample: empty distribution");
  if (!pi.allFinite() || (pi.array() <= 0.0).any())
    throw ValidationError("resample: pi entries must be positive");
  if (std::abs(pi.sum() - 1.0) > 1e-12)
    throw ValidationError("resample: pi must sum to 1");
  pi /= pi.sum();
  return ResampleEnv{StationaryDist{std::move(pi)}};
}

int env_states(const EnvKind& env) {
  return std::visit(
      [](const auto& e) {
        if constexpr (std::is_same_v<std::decay_t<decltype(e)>, EnvGenerator>)
          return e.states();
        else
          return e.dist.states();
      },
      env);
}

StationaryDist stationary(const EnvGenerator& gen) {
  const int n = gen.states();
  if (n == 1) return StationaryDist{Eigen::VectorXd::Ones(1)};
  // Solve pi Q = 0 with the normalization row sum(pi) = 1.
  Eigen::MatrixXd a = gen.rates().transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible())
    throw SingularSystem("stationary: normalized balance system is singular");
  Eigen::VectorXd pi = lu.solve(rhs);
  const double residual = (pi.transpose() * gen.rates()).cwiseAbs().maxCoeff();
  if (residual > 1e-10)
    throw SingularSystem("stationary: pi Q = 0 residual beyond 1e-10");
  if ((pi.array() <= 0.0).any())
    throw NotIrreducible("stationary: non-positive stationary mass");
  pi /= pi.sum();
  return StationaryDist{std::move(pi)};
}

StationaryDist stationary(const EnvKind& env) {
  if (const auto* gen = std::get_if<EnvGenerator>(&env)) return stationary(*gen);
  return std::get<ResampleEnv>(env).dist;
}

PseudoInverse pseudo_inverse(const EnvGenerator& gen) {
  const int n = gen.states();
  const Eigen::VectorXd pi = stationary(gen).pi;
  const Eigen::MatrixXd big_pi = Eigen::VectorXd::Ones(n) * pi.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(big_pi - gen.rates());
  if (!lu.isInvertible())
    throw SingularSystem("pseudo_inverse: Pi - Q is singular");
  return PseudoInverse{big_pi - lu.inverse()};
}

Eigen::VectorXd apply_pseudo_inverse(const EnvKind& env, const Eigen::VectorXd& f) {
  if (!f.allFinite()) throw NonFinite("apply_pseudo_inverse: f not finite");
  if (const auto* gen = std::get_if<EnvGenerator>(&env)) {
    if (f.size() != gen->states())
      throw ValidationError("apply_pseudo_inverse: size mismatch");
    return pseudo_inverse(*gen).x * f;
  }
  const auto& re = std::get<ResampleEnv>(env);
  if (f.size() != re.dist.states())
    throw ValidationError("apply_pseudo_inverse: size mismatch");
  const double mean = re.dist.pi.dot(f);
  return Eigen::VectorXd::Constant(f.size(), mean) - f;
}

Eigen::MatrixXd semigroup_at(const EnvGenerator& gen, double t) {
  if (!std::isfinite(t) || t < 0.0)
    throw NonFinite("semigroup_at: t must be finite and >= 0");
  return expm(t * gen.rates());
}

Eigen::MatrixXd semigroup_at(const EnvKind& env, double t) {
  if (const auto* gen = std::get_if<EnvGenerator>(&env))
    return semigroup_at(*gen, t);
  if (!std::isfinite(t) || t < 0.0)
    throw NonFinite("semigroup_at: t must be finite and >= 0");
  // Q_t = e^{-t} I + (1 - e^{-t}) Pi for the resampling kernel.
  const auto& re = std::get<ResampleEnv>(env);
  const int n = re.dist.states();
  const double decay = std::exp(-t);
  return decay * Eigen::MatrixXd::Identity(n, n) +
         (1.0 - decay) * Eigen::VectorXd::Ones(n) * re.dist.pi.transpose();
}

double env_exit_rate(const EnvKind& env, int s) {
  if (const auto* gen = std::get_if<EnvGenerator>(&env))
    return -gen->rates()(s, s);
  return 1.0;
}

int env_next_state(const EnvKind& env, int s, Rng& rng) {
  if (const auto* gen = std::get_if<EnvGenerator>(&env)) {
    Eigen::VectorXd w = gen->rates().row(s).transpose().cwiseMax(0.0);
    w[s] = 0.0;
    return rng.discrete(w);
  }
  const auto& re = std::get<ResampleEnv>(env);
  return re.dist.states() == 1 ? 0 : rng.discrete(re.dist.pi);
}

std::vector<JumpEvent> sample_path(const EnvKind& env, int s0, double horizon,
                                   Rng& rng) {
  const int n = env_states(env);
  if (s0 < 0 || s0 >= n) throw ValidationError("sample_path: s0 out of range");
  if (!std::isfinite(horizon) || horizon < 0.0)
    throw NonFinite("sample_path: horizon must be finite and >= 0");

  std::vector<JumpEvent> path;
  path.push_back({0.0, s0});
  double t = 0.0;
  int s = s0;

  if (const auto* gen = std::get_if<EnvGenerator>(&env)) {
    const Eigen::MatrixXd& q = gen->rates();
    while (true) {
      const double rate = -q(s, s);
      if (rate <= 0.0) break;  // n == 1
      t += rng.exponential(rate);
      if (t > horizon) break;
      Eigen::VectorXd w = q.row(s).transpose().cwiseMax(0.0);
      w[s] = 0.0;
      s = rng.discrete(w);
      path.push_back({t, s});
    }
  } else {
    const auto& re = std::get<ResampleEnv>(env);
    while (true) {
      t += rng.exponential(1.0);
      if (t > horizon) break;
      s = re.dist.pi.size() == 1 ? 0 : rng.discrete(re.dist.pi);
      path.push_back({t, s});
    }
  }
  return path;
}

}  // namespace switchode

// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "switchode/rng.hpp"

namespace switchode {

// Transition-rate matrix of a finite irreducible continuous-time Markov
// chain, in environment-time units. Construction validates the generator:
// nonnegative off-diagonal entries, row sums repaired to zero when the drift
// is below 1e-12 (rejected beyond that), and strong connectivity of the
// positive off-diagonal graph.
class EnvGenerator {
 public:
  explicit EnvGenerator(Eigen::MatrixXd rates);

  int states() const { return static_cast<int>(rates_.rows()); }
  const Eigen::MatrixXd& rates() const { return rates_; }

 private:
  Eigen::MatrixXd rates_;
};

struct StationaryDist {
  Eigen::VectorXd pi;
  int states() const { return static_cast<int>(pi.size()); }
};

// Matrix of the operator Q^{-1} acting on functions of the environment
// (the group inverse of the rate matrix).
struct PseudoInverse {
  Eigen::MatrixXd x;
};

// Resample environments jump at rate 1 to an i.i.d. draw from pi;
// their pseudo-inverse acts as f -> pi f - f.
struct ResampleEnv {
  StationaryDist dist;
};

using EnvKind = std::variant<EnvGenerator, ResampleEnv>;

ResampleEnv make_resample(Eigen::VectorXd pi);

int env_states(const EnvKind& env);

// pi with pi Q = 0, sum pi = 1, entries > 0.
StationaryDist stationary(const EnvGenerator& gen);
StationaryDist stationary(const EnvKind& env);

// X = Pi - (Pi - Q)^{-1} with Pi = 1 pi^T; satisfies the group-inverse
// axioms QXQ = Q, XQX = X, XQ = QX together with pi X = 0, X 1 = 0 and
// QX = I - Pi.
PseudoInverse pseudo_inverse(const EnvGenerator& gen);

// RateMatrix -> X f; Resample -> (pi f) 1 - f.
Eigen::VectorXd apply_pseudo_inverse(const EnvKind& env, const Eigen::VectorXd& f);

// e^{tQ}; rows are probability vectors.
Eigen::MatrixXd semigroup_at(const EnvGenerator& gen, double t);
Eigen::MatrixXd semigroup_at(const EnvKind& env, double t);

// Jump-chain primitives shared by the simulators.
double env_exit_rate(const EnvKind& env, int s);
int env_next_state(const EnvKind& env, int s, Rng& rng);

struct JumpEvent {
  double time;
  int state;
};

// Exact jump-chain sample of the environment over [0, horizon], in
// environment time. First entry is (0, s0); the path is right-continuous.
std::vector<JumpEvent> sample_path(const EnvKind& env, int s0, double horizon,
                                   Rng& rng);

}  // namespace switchode

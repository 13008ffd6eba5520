// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#include <benchmark/benchmark.h>

#include "switchode/env_chain.hpp"
#include "switchode/expansion.hpp"
#include "switchode/linalg.hpp"
#include "switchode/lotka.hpp"
#include "switchode/lyapunov.hpp"
#include "switchode/pdmp_sim.hpp"
#include "switchode/reproduce.hpp"

using namespace switchode;

namespace {

Eigen::MatrixXd dense_generator(int n) {
  Rng rng(1, n);
  Eigen::MatrixXd q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q(i, j) = i == j ? 0.0 : rng.uniform(0.1, 2.0);
  for (int i = 0; i < n; ++i) q(i, i) = -q.row(i).sum();
  return q;
}

void BM_expm(benchmark::State& state) {
  const Eigen::MatrixXd q = dense_generator(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(expm(0.7 * q));
}
BENCHMARK(BM_expm)->Arg(2)->Arg(3)->Arg(8);

void BM_pseudo_inverse(benchmark::State& state) {
  const EnvGenerator gen(dense_generator(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(pseudo_inverse(gen).x);
}
BENCHMARK(BM_pseudo_inverse)->Arg(2)->Arg(8);

void BM_perron_fmc(benchmark::State& state) {
  const Eigen::MatrixXd abar = 0.4 * fmc_a0() + 0.6 * fmc_a1();
  for (auto _ : state) benchmark::DoNotOptimize(perron_matrix(abar));
}
BENCHMARK(BM_perron_fmc);

void BM_logistic_ergodic(benchmark::State& state) {
  const LVCoefficients coef = benchmark_lv();
  const VectorFieldSet fields = lv_logistic_fields(coef);
  Eigen::MatrixXd q(2, 2);
  q << -1, 1, 1, -1;
  const EnvKind env = EnvGenerator(q);
  Observable f = [&coef](const Eigen::VectorXd& x, int s) {
    return coef.a20[s] + coef.a21[s] * x(0);
  };
  SimConfig cfg;
  cfg.epsilon = 0.1;
  cfg.horizon = 50.0;
  cfg.burn_in = 5.0;
  cfg.seed = 9;
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ergodic_average(fields, env, cfg, f, x0, 0));
    cfg.seed += 1;  // fresh path each iteration
  }
}
BENCHMARK(BM_logistic_ergodic)->Unit(benchmark::kMillisecond);

void BM_c1_generic_logistic(benchmark::State& state) {
  const LVCoefficients coef = benchmark_lv();
  Eigen::MatrixXd q(2, 2);
  q << -1, 1, 1, -1;
  const EnvKind env = EnvGenerator(q);
  const VectorFieldSet fields = lv_logistic_fields(coef);
  const ObservableF f = lv_invasion_observable(coef);
  for (auto _ : state) benchmark::DoNotOptimize(c1_generic(fields, env, f));
}
BENCHMARK(BM_c1_generic_logistic)->Unit(benchmark::kMillisecond);

void BM_lyapunov_mc_segmented(benchmark::State& state) {
  const SwitchedLinearSystem sys = make_switched_linear(
      {fmc_a0(), fmc_a1()},
      EnvKind{EnvGenerator(
          (Eigen::MatrixXd(2, 2) << -0.6, 0.6, 0.4, -0.4).finished())});
  SimConfig cfg;
  cfg.epsilon = 0.1;
  cfg.horizon = 30.0;
  cfg.burn_in = 3.0;
  cfg.seed = 10;
  const Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lyapunov_mc(sys, cfg, theta0, 0));
    cfg.seed += 1;
  }
}
BENCHMARK(BM_lyapunov_mc_segmented)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

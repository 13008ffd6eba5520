// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#include "switchode/pdmp_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

#include "switchode/errors.hpp"

namespace switchode {

void SimConfig::validate() const {
  if (!(epsilon > 0.0)) throw ValidationError("SimConfig: epsilon must be > 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw ValidationError("SimConfig: horizon must be positive and finite");
  if (!(burn_in > 0.0) || !(burn_in < horizon))
    throw ValidationError("SimConfig: need 0 < burn_in < horizon");
  if (batch_count < 8) throw ValidationError("SimConfig: batch_count must be >= 8");
  if (n_traj < 1) throw ValidationError("SimConfig: n_traj must be >= 1");
  if (sample_dt < 0.0) throw ValidationError("SimConfig: sample_dt must be >= 0");
}

double SimConfig::grid_dt() const {
  return sample_dt > 0.0 ? sample_dt : 0.25 * epsilon;
}

int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* cap = std::getenv("SWITCHODE_THREADS")) {
    const int c = std::atoi(cap);
    if (c >= 1) hw = std::min(hw, c);
  }
  return hw;
}

void parallel_for_indexed(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  const int workers = std::min<std::int64_t>(worker_count(), std::max<std::int64_t>(n, 1));
  if (workers <= 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed && error) std::rethrow_exception(error);
}

namespace {

// Walks one trajectory, emitting (t, x, s, new_run) at the initial point,
// at grid times, at both sides of each jump and at the horizon. new_run
// marks the first point of a fresh continuity interval (initial point and
// post-jump points).
void walk_trajectory(const VectorFieldSet& fields, const EnvKind& env,
                     const SimConfig& cfg, const Eigen::VectorXd& x0, int s0,
                     Rng& rng,
                     const std::function<void(double, const Eigen::VectorXd&, int, bool)>& emit) {
  const double dt_grid = cfg.grid_dt();
  double t = 0.0;
  Eigen::VectorXd x = x0;
  int s = s0;
  emit(t, x, s, true);

  while (t < cfg.horizon) {
    const double rate = env_exit_rate(env, s);
    double t_jump = cfg.horizon + 1.0;
    if (rate > 0.0) t_jump = t + cfg.epsilon * rng.exponential(rate);
    const double t_end = std::min(t_jump, cfg.horizon);

    // Grid points strictly inside (t, t_end).
    double tg = (std::floor(t / dt_grid) + 1.0) * dt_grid;
    while (tg < t_end - 1e-15 * std::max(1.0, t_end)) {
      x = flow(fields, s, x, tg - t);
      t = tg;
      emit(t, x, s, false);
      tg += dt_grid;
    }
    x = flow(fields, s, x, t_end - t);
    t = t_end;
    emit(t, x, s, false);
    if (t_jump > cfg.horizon) break;
    s = env_next_state(env, s, rng);
    emit(t, x, s, true);
  }
}

// Batch accumulator with linear-interpolation splitting at batch boundaries.
class BatchAccumulator {
 public:
  BatchAccumulator(double burn_in, double horizon, int batches)
      : burn_(burn_in),
        len_((horizon - burn_in) / batches),
        batches_(batches),
        integral_(batches, 0.0) {}

  void interval(double ta, double fa, double tb, double fb) {
    if (tb <= burn_ || tb <= ta) return;
    if (ta < burn_) {
      fa = interp(ta, fa, tb, fb, burn_);
      ta = burn_;
    }
    while (ta < tb) {
      int ib = index_of(ta);
      const double edge = burn_ + (ib + 1) * len_;
      if (tb <= edge) {
        add(ib, ta, fa, tb, fb);
        break;
      }
      const double fe = interp(ta, fa, tb, fb, edge);
      add(ib, ta, fa, edge, fe);
      ta = edge;
      fa = fe;
    }
  }

  const std::vector<double>& integrals() const { return integral_; }
  double batch_length() const { return len_; }

 private:
  static double interp(double ta, double fa, double tb, double fb, double tc) {
    const double w = (tc - ta) / (tb - ta);
    return fa + (fb - fa) * w;
  }
  int index_of(double t) const {
    int i = static_cast<int>((t - burn_) / len_);
    return std::clamp(i, 0, batches_ - 1);
  }
  void add(int ib, double ta, double fa, double tb, double fb) {
    integral_[ib] += 0.5 * (tb - ta) * (fa + fb);
  }

  double burn_, len_;
  int batches_;
  std::vector<double> integral_;
};

}  // namespace

void simulate(const VectorFieldSet& fields, const EnvKind& env,
              const SimConfig& cfg, const Eigen::VectorXd& x0, int s0,
              const Observer& observer, std::uint64_t stream_index) {
  cfg.validate();
  if (s0 < 0 || s0 >= env_states(env))
    throw ValidationError("simulate: s0 out of range");
  if (env_states(env) != fields.env_states())
    throw ValidationError("simulate: environment/field state count mismatch");
  Rng rng = Rng::split(cfg.seed, stream_index);
  walk_trajectory(fields, env, cfg, x0, s0, rng,
                  [&](double t, const Eigen::VectorXd& x, int s, bool) {
                    observer(t, x, s);
                  });
}

TrajectoryEstimate ergodic_average(const VectorFieldSet& fields, const EnvKind& env,
                                   const SimConfig& cfg, const Observable& f,
                                   const Eigen::VectorXd& x0, int s0) {
  cfg.validate();
  if (env_states(env) != fields.env_states())
    throw ValidationError("ergodic_average: environment/field state count mismatch");
  const double batch_len = (cfg.horizon - cfg.burn_in) / cfg.batch_count;
  if (batch_len < cfg.epsilon)
    throw DegenerateBatches(
        "ergodic_average: horizon too short for batch_count at this epsilon");

  std::vector<std::vector<double>> batch_means(
      cfg.n_traj, std::vector<double>(cfg.batch_count, 0.0));

  parallel_for_indexed(cfg.n_traj, [&](std::int64_t traj) {
    Rng rng = Rng::split(cfg.seed, static_cast<std::uint64_t>(traj));
    BatchAccumulator acc(cfg.burn_in, cfg.horizon, cfg.batch_count);
    bool have_prev = false;
    double t_prev = 0.0, f_prev = 0.0;
    walk_trajectory(fields, env, cfg, x0, s0, rng,
                    [&](double t, const Eigen::VectorXd& x, int s, bool new_run) {
                      const double val = f(x, s);
                      if (new_run || !have_prev) {
                        have_prev = true;
                      } else {
                        acc.interval(t_prev, f_prev, t, val);
                      }
                      t_prev = t;
                      f_prev = val;
                    });
    for (int b = 0; b < cfg.batch_count; ++b)
      batch_means[traj][b] = acc.integrals()[b] / acc.batch_length();
  });

  // Deterministic pooled reduction in (trajectory, batch) order.
  const std::int64_t total = static_cast<std::int64_t>(cfg.n_traj) * cfg.batch_count;
  double mean = 0.0;
  for (const auto& row : batch_means)
    for (double m : row) mean += m;
  mean /= static_cast<double>(total);
  double var = 0.0;
  for (const auto& row : batch_means)
    for (double m : row) var += (m - mean) * (m - mean);
  var = total > 1 ? var / static_cast<double>(total - 1) : 0.0;

  TrajectoryEstimate est;
  est.mean = mean;
  est.std_error = std::sqrt(var / static_cast<double>(total));
  est.effective_samples = total;
  est.config = cfg;
  est.batch_means.resize(cfg.n_traj, cfg.batch_count);
  for (int i = 0; i < cfg.n_traj; ++i)
    for (int b = 0; b < cfg.batch_count; ++b)
      est.batch_means(i, b) = batch_means[i][b];
  return est;
}

FixedTimeResult fixed_time_expectation(const VectorFieldSet& fields,
                                       const EnvKind& env, const Observable& f,
                                       double t, double epsilon,
                                       std::uint64_t n_samples, std::uint64_t seed,
                                       const Eigen::VectorXd& x0, int s0) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw ValidationError("fixed_time_expectation: bad t");
  if (!(epsilon > 0.0)) throw ValidationError("fixed_time_expectation: bad epsilon");
  if (n_samples == 0) throw ValidationError("fixed_time_expectation: n_samples == 0");

  // Scalar fast path: dim-1 linear (affine) fields need no Eigen temporaries.
  const auto* lin = std::get_if<LinearFields>(&fields.fields);
  const bool scalar_affine = lin && fields.dim == 1;
  std::vector<double> alpha, beta;
  if (scalar_affine) {
    for (std::size_t s = 0; s < lin->a.size(); ++s) {
      alpha.push_back(lin->a[s](0, 0));
      beta.push_back(lin->b.empty() ? 0.0 : lin->b[s](0));
    }
  }

  const std::uint64_t chunk = 4096;
  const std::uint64_t n_chunks = (n_samples + chunk - 1) / chunk;
  std::vector<double> sum(n_chunks, 0.0), sumsq(n_chunks, 0.0);

  parallel_for_indexed(static_cast<std::int64_t>(n_chunks), [&](std::int64_t c) {
    const std::uint64_t begin = static_cast<std::uint64_t>(c) * chunk;
    const std::uint64_t end = std::min(begin + chunk, n_samples);
    double s_acc = 0.0, s2_acc = 0.0;
    Eigen::VectorXd x1(fields.dim);
    for (std::uint64_t i = begin; i < end; ++i) {
      Rng rng = Rng::split(seed, i);
      int s = s0;
      double val;
      if (scalar_affine) {
        double x = x0(0);
        double tt = 0.0;
        while (true) {
          const double rate = env_exit_rate(env, s);
          double hold = rate > 0.0 ? epsilon * rng.exponential(rate) : t - tt + 1.0;
          const double dt = std::min(hold, t - tt);
          const double a = alpha[s];
          x = a == 0.0 ? x + beta[s] * dt
                       : x * std::exp(a * dt) + beta[s] * std::expm1(a * dt) / a;
          tt += dt;
          if (hold >= t - tt + dt) break;  // horizon reached inside this segment
          s = env_next_state(env, s, rng);
        }
        x1(0) = x;
        val = f(x1, s);
      } else {
        double tt = 0.0;
        Eigen::VectorXd x = x0;
        while (true) {
          const double rate = env_exit_rate(env, s);
          double hold = rate > 0.0 ? epsilon * rng.exponential(rate) : t - tt + 1.0;
          const double dt = std::min(hold, t - tt);
          x = flow(fields, s, x, dt);
          tt += dt;
          if (hold >= t - tt + dt) break;
          s = env_next_state(env, s, rng);
        }
        val = f(x, s);
      }
      s_acc += val;
      s2_acc += val * val;
    }
    sum[c] = s_acc;
    sumsq[c] = s2_acc;
  });

  double total = 0.0, total2 = 0.0;
  for (std::uint64_t c = 0; c < n_chunks; ++c) {
    total += sum[c];
    total2 += sumsq[c];
  }
  const double n = static_cast<double>(n_samples);
  const double mean = total / n;
  const double var = std::max(0.0, (total2 - n * mean * mean) / std::max(1.0, n - 1.0));
  return {mean, std::sqrt(var / n), n_samples};
}

ContractionReport coupled_contraction(const VectorFieldSet& logistic_fields,
                                      const EnvKind& env, const SimConfig& cfg,
                                      double x0, double y0, int s0) {
  cfg.validate();
  const auto* lg = std::get_if<LogisticFields>(&logistic_fields.fields);
  if (!lg) throw ValidationError("coupled_contraction: logistic model required");
  const Eigen::ArrayXd ratio = lg->a10.array() / lg->a11.array();
  const double p0 = ratio.minCoeff();
  const double p1 = ratio.maxCoeff();
  const double band = 1e-9 * (1.0 + p1);
  // The pathwise bound is stated for starts in [p0, p1]; the decay-rate
  // estimate itself is meaningful from any admissible start.
  const bool bound_applies = x0 >= p0 - band && x0 <= p1 + band &&
                             y0 >= p0 - band && y0 <= p1 + band;
  if (!logistic_fields.region.contains(Eigen::VectorXd::Constant(1, x0), band) ||
      !logistic_fields.region.contains(Eigen::VectorXd::Constant(1, y0), band))
    throw ValidationError("coupled_contraction: initial points must lie in the region");

  ContractionReport rep;
  rep.eta = p0 * lg->a11.minCoeff();
  rep.prefactor = p1 / p0;
  rep.gap0 = std::abs(x0 - y0);

  Rng rng = Rng::split(cfg.seed, 0);
  auto path = sample_path(env, s0, cfg.horizon / cfg.epsilon, rng);

  double x = x0, y = y0, t = 0.0;
  double max_ratio = 0.0;
  std::vector<std::pair<double, double>> log_gap;  // (t, log gap)
  const double tol = 1.0 + 1e-9;

  auto record = [&](double tt) {
    const double gap = std::abs(x - y);
    if (rep.gap0 > 0.0) {
      if (bound_applies) {
        const double bound = rep.prefactor * std::exp(-rep.eta * tt) * rep.gap0;
        max_ratio = std::max(max_ratio, gap / bound);
      }
      if (gap > 0.0) log_gap.emplace_back(tt, std::log(gap));
    }
  };
  record(0.0);

  const double dt_grid = cfg.grid_dt();
  for (std::size_t k = 0; k < path.size(); ++k) {
    const int s = path[k].state;
    const double seg_end =
        k + 1 < path.size() ? std::min(path[k + 1].time * cfg.epsilon, cfg.horizon)
                            : cfg.horizon;
    while (t < seg_end) {
      const double dt = std::min(dt_grid, seg_end - t);
      Eigen::VectorXd xv(1), yv(1);
      xv(0) = x;
      yv(0) = y;
      x = flow(logistic_fields, s, xv, dt)(0);
      y = flow(logistic_fields, s, yv, dt)(0);
      t += dt;
      record(t);
    }
    if (t >= cfg.horizon) break;
  }

  rep.max_bound_ratio = max_ratio;
  rep.bound_satisfied = max_ratio <= tol;

  // Fitted decay rate of log gap over the second half of the horizon.
  double rate = 0.0;
  std::size_t first = 0;
  for (std::size_t i = 0; i < log_gap.size(); ++i)
    if (log_gap[i].first >= 0.5 * cfg.horizon) {
      first = i;
      break;
    }
  if (log_gap.size() >= first + 2) {
    double st = 0, sv = 0, stt = 0, stv = 0;
    const double n = static_cast<double>(log_gap.size() - first);
    for (std::size_t i = first; i < log_gap.size(); ++i) {
      st += log_gap[i].first;
      sv += log_gap[i].second;
      stt += log_gap[i].first * log_gap[i].first;
      stv += log_gap[i].first * log_gap[i].second;
    }
    const double denom = n * stt - st * st;
    if (denom > 0.0) rate = -(n * stv - st * sv) / denom;
  }
  rep.rate_estimate = rate;
  return rep;
}

}  // namespace switchode

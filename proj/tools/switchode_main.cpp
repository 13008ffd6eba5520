// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
//
// Experiment runner: model ingestion, seed management, subcommand dispatch
// and result persistence. Identical invocations produce byte-identical
// output files; wall-clock timing goes to stderr only.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "switchode/errors.hpp"
#include "switchode/expansion.hpp"
#include "switchode/lotka.hpp"
#include "switchode/lyapunov.hpp"
#include "switchode/model_io.hpp"
#include "switchode/reproduce.hpp"
#include "switchode/splitting.hpp"
#include "switchode/version.hpp"

namespace {

using nlohmann::json;
using namespace switchode;

constexpr std::uint64_t kDefaultSeed = 0x5EEDC0DE0001ULL;

std::string hex_seed(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "0x%llX", static_cast<unsigned long long>(seed));
  return buf;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output file \"" + out_path + "\"");
  out << content;
}

json result_record(std::uint64_t seed, json inputs, json outputs) {
  json root;
  root["tool"] = kToolName;
  root["version"] = kVersion;
  root["seed"] = hex_seed(seed);
  root["inputs"] = std::move(inputs);
  root["outputs"] = std::move(outputs);
  return root;
}

// Per-batch CSV written alongside MC summaries: columns traj, batch, mean.
void write_batches_csv(const std::string& json_out, std::uint64_t seed,
                       const TrajectoryEstimate& est) {
  if (json_out.empty()) return;
  std::string path = json_out;
  const std::size_t dot = path.rfind('.');
  path = (dot == std::string::npos ? path : path.substr(0, dot)) + "_batches.csv";
  std::ostringstream csv;
  csv << "# " << kToolName << " " << kVersion << " seed=" << hex_seed(seed)
      << "\n" << "traj,batch,mean\n";
  for (Eigen::Index i = 0; i < est.batch_means.rows(); ++i)
    for (Eigen::Index b = 0; b < est.batch_means.cols(); ++b)
      csv << i << "," << b << "," << num(est.batch_means(i, b)) << "\n";
  write_output(path, csv.str());
}

std::string csv_header(std::uint64_t seed) {
  std::ostringstream ss;
  ss << "# " << kToolName << " " << kVersion << " seed=" << hex_seed(seed) << "\n";
  return ss.str();
}

std::vector<double> parse_grid(const std::string& spec) {
  double a = 0, step = 0, b = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &a, &step, &b) != 3 || step <= 0)
    throw ValidationError("grid must be start:step:end with step > 0");
  std::vector<double> grid;
  for (double v = a; v <= b + 1e-12; v += step) grid.push_back(v);
  if (grid.empty()) throw ValidationError("grid is empty");
  return grid;
}

ModelFile require_model(const std::string& path) {
  if (path.empty()) throw ValidationError("--model is required");
  return load_model(path);
}

const EnvKind& require_env(const ModelFile& mf) {
  if (!mf.env) throw ValidationError("model file has no env section");
  return *mf.env;
}

ObservableF require_observable(const ModelFile& mf) {
  if (mf.observable) return make_observable(*mf.observable);
  if (mf.lv) return lv_invasion_observable(*mf.lv);
  throw ValidationError("model file has no observable section");
}

SwitchedLinearSystem require_switched_linear(const ModelFile& mf) {
  if (!mf.fields || mf.kind != "projective_linear")
    throw ValidationError("a projective_linear model is required");
  const auto& pf = std::get<ProjectiveFields>(mf.fields->fields);
  return make_switched_linear(pf.a, require_env(mf));
}

struct CommonArgs {
  std::string model, out;
  std::uint64_t seed = kDefaultSeed;
  std::vector<double> eps;
  std::string grid;
  double horizon = 200.0, burn_in = 20.0;
  int traj = 16, batches = 16;
};

SimConfig sim_config(const CommonArgs& a, double eps) {
  SimConfig cfg;
  cfg.epsilon = eps;
  cfg.horizon = a.horizon;
  cfg.burn_in = a.burn_in;
  cfg.seed = a.seed;
  cfg.n_traj = a.traj;
  cfg.batch_count = a.batches;
  return cfg;
}

json estimate_json(const TrajectoryEstimate& est) {
  json e;
  e["mean"] = est.mean;
  e["std_error"] = est.std_error;
  e["effective_samples"] = est.effective_samples;
  e["config"] = {{"epsilon", est.config.epsilon},
                 {"horizon", est.config.horizon},
                 {"burn_in", est.config.burn_in},
                 {"n_traj", est.config.n_traj},
                 {"batch_count", est.config.batch_count},
                 {"seed", hex_seed(est.config.seed)}};
  return e;
}

// ----------------------------------------------------------- subcommands

int cmd_env_check(const CommonArgs& args) {
  const ModelFile mf = require_model(args.model);
  const EnvKind& env = require_env(mf);
  json out;
  out["states"] = env_states(env);
  const StationaryDist pi = stationary(env);
  out["pi"] = std::vector<double>(pi.pi.data(), pi.pi.data() + pi.pi.size());
  if (const auto* gen = std::get_if<EnvGenerator>(&env)) {
    const Eigen::MatrixXd x = pseudo_inverse(*gen).x;
    const Eigen::MatrixXd q = gen->rates();
    const int n = gen->states();
    const Eigen::MatrixXd big_pi = Eigen::VectorXd::Ones(n) * pi.pi.transpose();
    out["kind"] = "rate_matrix";
    out["pi_q_residual"] = (pi.pi.transpose() * q).cwiseAbs().maxCoeff();
    out["group_inverse_residual"] =
        std::max({(q * x * q - q).cwiseAbs().maxCoeff(),
                  (x * q * x - x).cwiseAbs().maxCoeff(),
                  (x * q - q * x).cwiseAbs().maxCoeff()});
    out["qx_identity_residual"] =
        (q * x - (Eigen::MatrixXd::Identity(n, n) - big_pi)).cwiseAbs().maxCoeff();
  } else {
    out["kind"] = "resample";
  }
  write_output(args.out,
               result_record(args.seed, {{"model", args.model}}, out).dump(2) + "\n");
  return 0;
}

int cmd_expand(const CommonArgs& args) {
  const ModelFile mf = require_model(args.model);
  if (!mf.fields) throw ValidationError("expand: model must define fields");
  const EnvKind& env = require_env(mf);
  const ObservableF f = require_observable(mf);

  const ExpansionReport rep = c1_generic(*mf.fields, env, f);
  json out;
  out["mu0_f"] = rep.mu0_f;
  out["c1"] = rep.c1;
  out["unconverged"] = rep.unconverged;
  out["diagnostics"] = {{"fd_step", rep.diagnostics.fd_step},
                        {"fd_delta", rep.diagnostics.fd_delta},
                        {"tail_bound", rep.diagnostics.tail_bound},
                        {"equilibrium_residual",
                         rep.diagnostics.equilibrium_residual}};
  if (args.eps.size() >= 3) {
    const SimConfig cfg = sim_config(args, args.eps.front());
    const SlopeFit fit = mc_slope_check(*mf.fields, env, f, args.eps, cfg,
                                        mf.fields->region.center(), 0);
    json mc;
    mc["fitted_c1"] = fit.fitted_c1;
    mc["fitted_c1_se"] = fit.fitted_c1_se;
    mc["fitted_k"] = fit.fitted_k;
    mc["loglog_slope"] = fit.slope;
    json per_eps = json::array();
    for (std::size_t i = 0; i < fit.eps.size(); ++i) {
      json row = estimate_json(fit.estimates[i]);
      row["eps"] = fit.eps[i];
      per_eps.push_back(row);
    }
    mc["estimates"] = per_eps;
    out["mc_slope"] = mc;
  }
  write_output(args.out,
               result_record(args.seed, {{"model", args.model}}, out).dump(2) + "\n");
  return rep.unconverged ? 3 : 0;
}

int cmd_semigroup(const CommonArgs& args, double t, double layer_tau,
                  const std::vector<double>& x, int state) {
  const ModelFile mf = require_model(args.model);
  if (!mf.fields) throw ValidationError("semigroup: model must define fields");
  const EnvKind& env = require_env(mf);
  const ObservableF f = require_observable(mf);
  Eigen::VectorXd xv(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xv[i] = x[i];

  const Order0 o0 = semigroup_order0(*mf.fields, env, f, t, layer_tau, xv, state);
  const Order1Result o1 = semigroup_order1(*mf.fields, env, f, t, xv, state);
  json out;
  out["t"] = t;
  out["layer_tau"] = layer_tau;
  out["p0"] = o0.p0;
  out["s0"] = o0.s0;
  out["p1"] = o1.value;
  out["p1_parts"] = {{"b1", o1.b1},
                     {"s_integral", o1.s_integral},
                     {"b_integral", o1.b_integral}};
  out["p1_refinement_delta"] = o1.refinement_delta;
  out["unconverged"] = o1.unconverged;
  write_output(args.out,
               result_record(args.seed, {{"model", args.model}}, out).dump(2) + "\n");
  return o1.unconverged ? 3 : 0;
}

int cmd_lyapunov_sweep(const CommonArgs& args) {
  const ModelFile mf = require_model(args.model);
  if (!mf.fields || mf.kind != "projective_linear")
    throw ValidationError("lyapunov sweep: projective_linear model required");
  const auto& pf = std::get<ProjectiveFields>(mf.fields->fields);
  if (pf.a.size() != 2)
    throw ValidationError("lyapunov sweep: exactly two matrices required");
  const std::vector<double> grid =
      args.grid.empty() ? default_p_grid() : parse_grid(args.grid);
  const auto rows = sweep_p(pf.a[0], pf.a[1], grid);
  std::ostringstream csv;
  csv << csv_header(args.seed) << "p,lambda_max,c1\n";
  for (const auto& r : rows)
    csv << num(r.p) << "," << num(r.lambda_max) << "," << num(r.c1) << "\n";
  write_output(args.out, csv.str());
  return 0;
}

int cmd_lyapunov_mc(const CommonArgs& args) {
  if (args.eps.size() != 1)
    throw ValidationError("lyapunov mc: exactly one --eps required");
  const ModelFile mf = require_model(args.model);
  const SwitchedLinearSystem sys = require_switched_linear(mf);
  const int d = static_cast<int>(sys.a.front().rows());
  const SimConfig cfg = sim_config(args, args.eps.front());
  const LyapunovEstimate est =
      lyapunov_mc(sys, cfg, Eigen::VectorXd::Constant(d, 1.0 / d), 0);
  json out;
  out["log_growth"] = estimate_json(est.log_growth);
  out["ergodic"] = estimate_json(est.ergodic);
  write_batches_csv(args.out, args.seed, est.log_growth);
  write_output(args.out,
               result_record(args.seed, {{"model", args.model}}, out).dump(2) + "\n");
  return 0;
}

int cmd_lyapunov_certify(const CommonArgs& args) {
  const ModelFile mf = require_model(args.model);
  if (!mf.fields || mf.kind != "projective_linear")
    throw ValidationError("lyapunov certify: projective_linear model required");
  const auto& pf = std::get<ProjectiveFields>(mf.fields->fields);
  if (pf.a.size() != 2)
    throw ValidationError("lyapunov certify: exactly two matrices required");
  CertificateConfig cc;
  if (!args.grid.empty()) cc.p_grid = parse_grid(args.grid);
  cc.eps_grid = args.eps.empty() ? std::vector<double>{0.2, 0.1, 0.05} : args.eps;
  cc.mc = sim_config(args, cc.eps_grid.front());
  const Certificate cert = destabilization_certificate(pf.a[0], pf.a[1], cc);
  json out;
  out["found"] = cert.found;
  out["lambda_star"] = cert.lambda_star;
  out["p_star"] = cert.p_star;
  if (cert.found) {
    out["delta"] = cert.delta;
    out["p"] = cert.p;
    out["eps"] = cert.eps;
    out["lambda_hat"] = cert.lambda_hat;
    out["std_error"] = cert.std_error;
    out["lcb99"] = cert.lcb99;
    out["max_shifted_lambda"] = cert.max_shifted_lambda;
  }
  write_output(args.out,
               result_record(args.seed, {{"model", args.model}}, out).dump(2) + "\n");
  return 0;
}

int cmd_lv_c1(const CommonArgs& args) {
  const ModelFile mf = require_model(args.model);
  if (!mf.lv) throw ValidationError("lv c1: model kind must be lv");
  const EnvKind& env = require_env(mf);
  const Eigen::VectorXd pi = stationary(env).pi;
  const double xbar = pi.dot(mf.lv->a10) / pi.dot(mf.lv->a11);
  json out;
  out["c1"] = c1_closed_form(*mf.lv, env);
  out["lambda_y_0"] = pi.dot(mf.lv->a20) + pi.dot(mf.lv->a21) * xbar;
  out["xbar"] = xbar;
  out["p0"] = mf.lv->p0();
  out["p1"] = mf.lv->p1();
  write_output(args.out,
               result_record(args.seed, {{"model", args.model}}, out).dump(2) + "\n");
  return 0;
}

int cmd_lv_mc(const CommonArgs& args) {
  if (args.eps.size() != 1)
    throw ValidationError("lv mc: exactly one --eps required");
  const ModelFile mf = require_model(args.model);
  if (!mf.lv) throw ValidationError("lv mc: model kind must be lv");
  const EnvKind& env = require_env(mf);
  const SimConfig cfg = sim_config(args, args.eps.front());
  const Eigen::VectorXd pi = stationary(env).pi;
  const double xbar = pi.dot(mf.lv->a10) / pi.dot(mf.lv->a11);
  const TrajectoryEstimate est = invasion_rate_mc(*mf.lv, env, cfg, xbar, 0);
  json out;
  out["invasion_rate"] = estimate_json(est);
  out["start"] = xbar;
  write_batches_csv(args.out, args.seed, est);
  write_output(args.out,
               result_record(args.seed, {{"model", args.model}}, out).dump(2) + "\n");
  return 0;
}

int cmd_lv_signs(const CommonArgs& args, double p_flag) {
  const ModelFile mf = require_model(args.model);
  if (!mf.lv) throw ValidationError("lv signs: model kind must be lv");
  double p = p_flag;
  if (p <= 0.0) {
    // The sign conclusion is invariant under a uniform rate rescale, so a
    // general two-state chain maps onto the unit-total-rate parameter.
    const EnvKind& env = require_env(mf);
    const auto* gen = std::get_if<EnvGenerator>(&env);
    if (!gen || gen->states() != 2)
      throw ValidationError("lv signs: need --p or a two-state rate_matrix env");
    const double a = gen->rates()(0, 1), b = gen->rates()(1, 0);
    p = a / (a + b);
  }
  const SignReport rep = sign_analysis(*mf.lv, p);
  json out;
  out["p"] = p;
  out["p_used"] = rep.p_used;
  out["swapped"] = rep.swapped;
  out["c1"] = rep.c1;
  out["sign_c1"] = rep.sign_c1;
  out["indicator"] = rep.indicator;
  out["sign_indicator"] = rep.sign_indicator;
  out["match"] = rep.match;
  out["asserted"] = rep.asserted;
  write_output(args.out,
               result_record(args.seed, {{"model", args.model}}, out).dump(2) + "\n");
  return 0;
}

int cmd_split_weak_error(const CommonArgs& args, double t, std::uint64_t n_mc) {
  const ModelFile mf = require_model(args.model);
  if (!mf.split) throw ValidationError("split: model kind must be split");
  if (args.eps.empty()) throw ValidationError("split weak-error: --eps required");
  if (!mf.observable)
    throw ValidationError("split weak-error: observable section required");
  const ObservableF obs = make_observable(*mf.observable);
  auto f = [&obs](const Eigen::VectorXd& x) { return obs.value(x, 0); };
  const Eigen::VectorXd x0 = mf.split->region.center();
  const auto rows = weak_error(*mf.split, f, x0, t, args.eps, n_mc, args.seed);
  std::ostringstream csv;
  csv << csv_header(args.seed) << "eps,error,stderr,mean,reference,n_steps\n";
  for (const auto& r : rows)
    csv << num(r.eps) << "," << num(r.error) << "," << num(r.std_error) << ","
        << num(r.mean) << "," << num(r.reference) << "," << r.n_steps << "\n";
  write_output(args.out, csv.str());
  return 0;
}

int cmd_split_richardson(const CommonArgs& args, double t, std::uint64_t n_mc) {
  const ModelFile mf = require_model(args.model);
  if (!mf.split) throw ValidationError("split: model kind must be split");
  if (args.eps.size() != 1)
    throw ValidationError("split richardson: exactly one --eps required");
  if (!mf.observable)
    throw ValidationError("split richardson: observable section required");
  const ObservableF obs = make_observable(*mf.observable);
  auto f = [&obs](const Eigen::VectorXd& x) { return obs.value(x, 0); };
  const Eigen::VectorXd x0 = mf.split->region.center();
  const RichardsonResult rr =
      richardson(*mf.split, f, x0, t, args.eps.front(), n_mc, args.seed);
  json out;
  out["extrapolated"] = rr.extrapolated;
  out["std_error"] = rr.std_error;
  out["reference"] = rr.at_eps.reference;
  out["raw_at_eps"] = {{"eps", rr.at_eps.eps},
                       {"mean", rr.at_eps.mean},
                       {"std_error", rr.at_eps.std_error},
                       {"error", rr.at_eps.error}};
  out["raw_at_half"] = {{"eps", rr.at_half.eps},
                        {"mean", rr.at_half.mean},
                        {"std_error", rr.at_half.std_error},
                        {"error", rr.at_half.error}};
  write_output(args.out,
               result_record(args.seed, {{"model", args.model}}, out).dump(2) + "\n");
  return 0;
}

int cmd_reproduce(const CommonArgs& args, const std::string& suite,
                  const std::string& self_path) {
  ReproduceConfig rc;
  rc.seed = args.seed;
  rc.cli_path = self_path;
  const auto results = run_suite(suite, rc);
  std::ostringstream table;
  bool all = true;
  for (const auto& r : results) {
    table << (r.pass ? "PASS" : "FAIL") << "  criterion " << r.id << "  "
          << r.name << "  (" << num(r.seconds) << " s)\n";
    if (!r.details.empty()) table << r.details;
    all = all && r.pass;
  }
  table << (all ? "ALL CRITERIA PASSED\n" : "SOME CRITERIA FAILED\n");
  std::cout << table.str();
  if (!args.out.empty()) write_output(args.out, table.str());
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"switchode: Markov-modulated ODE toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  double t = 1.0, layer_tau = 0.0, p_flag = 0.0;
  std::vector<double> x_point{0.5};
  int state = 0;
  std::uint64_t n_mc = 100000;
  std::string suite = "fast";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--model", args.model, "model JSON file");
    cmd->add_option("--out", args.out, "output file (stdout when omitted)");
    cmd->add_option("--seed", args.seed, "master seed");
    cmd->add_option("--eps", args.eps, "epsilon value (repeatable)");
    cmd->add_option("--grid", args.grid, "grid start:step:end");
    cmd->add_option("--horizon", args.horizon, "simulation horizon");
    cmd->add_option("--burn-in", args.burn_in, "discarded prefix");
    cmd->add_option("--traj", args.traj, "number of trajectories");
    cmd->add_option("--batches", args.batches, "batch-means batches");
  };

  CLI::App* env_cmd = app.add_subcommand("env", "environment chain tools");
  CLI::App* env_check = env_cmd->add_subcommand("check", "validate an environment");
  add_common(env_check);

  CLI::App* expand = app.add_subcommand("expand", "mu0 and first-order c1");
  add_common(expand);

  CLI::App* semigroup =
      app.add_subcommand("semigroup", "finite-time expansion at (t, x, s)");
  add_common(semigroup);
  semigroup->add_option("--t", t, "time");
  semigroup->add_option("--layer-tau", layer_tau, "boundary-layer time");
  semigroup->add_option("--x", x_point, "state-space point coordinates");
  semigroup->add_option("--state", state, "environment state");

  CLI::App* lyap = app.add_subcommand("lyapunov", "switched linear systems");
  CLI::App* lyap_sweep = lyap->add_subcommand("sweep", "(p, lambda_max, c1) table");
  add_common(lyap_sweep);
  CLI::App* lyap_mc = lyap->add_subcommand("mc", "Monte Carlo top exponent");
  add_common(lyap_mc);
  CLI::App* lyap_cert = lyap->add_subcommand("certify", "destabilization search");
  add_common(lyap_cert);

  CLI::App* lv = app.add_subcommand("lv", "Lotka-Volterra invasion rates");
  CLI::App* lv_c1 = lv->add_subcommand("c1", "closed-form c1");
  add_common(lv_c1);
  CLI::App* lv_mc = lv->add_subcommand("mc", "Monte Carlo invasion rate");
  add_common(lv_mc);
  CLI::App* lv_signs = lv->add_subcommand("signs", "sign analysis");
  add_common(lv_signs);
  lv_signs->add_option("--p", p_flag, "two-state rate parameter");

  CLI::App* split = app.add_subcommand("split", "randomized splitting");
  CLI::App* split_we = split->add_subcommand("weak-error", "weak error table");
  add_common(split_we);
  split_we->add_option("--t", t, "target time");
  split_we->add_option("--n-mc", n_mc, "Monte Carlo replicates");
  CLI::App* split_ri = split->add_subcommand("richardson", "extrapolated value");
  add_common(split_ri);
  split_ri->add_option("--t", t, "target time");
  split_ri->add_option("--n-mc", n_mc, "Monte Carlo replicates");

  CLI::App* repro = app.add_subcommand("reproduce", "run acceptance criteria");
  add_common(repro);
  repro->add_option("--suite", suite, "fast or full");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto start = std::chrono::steady_clock::now();
  int rc = 0;
  try {
    if (env_check->parsed()) rc = cmd_env_check(args);
    else if (expand->parsed()) rc = cmd_expand(args);
    else if (semigroup->parsed())
      rc = cmd_semigroup(args, t, layer_tau, x_point, state);
    else if (lyap_sweep->parsed()) rc = cmd_lyapunov_sweep(args);
    else if (lyap_mc->parsed()) rc = cmd_lyapunov_mc(args);
    else if (lyap_cert->parsed()) rc = cmd_lyapunov_certify(args);
    else if (lv_c1->parsed()) rc = cmd_lv_c1(args);
    else if (lv_mc->parsed()) rc = cmd_lv_mc(args);
    else if (lv_signs->parsed()) rc = cmd_lv_signs(args, p_flag);
    else if (split_we->parsed()) rc = cmd_split_weak_error(args, t, n_mc);
    else if (split_ri->parsed()) rc = cmd_split_richardson(args, t, n_mc);
    else if (repro->parsed()) rc = cmd_reproduce(args, suite, argv[0]);
    else {
      std::cerr << "error: no subcommand given\n";
      rc = 2;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  } catch (...) {
    std::cerr << "internal error\n";
    return 1;
  }
  std::cerr << "elapsed: "
            << std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start)
                   .count()
            << " s\n";
  return rc;
}

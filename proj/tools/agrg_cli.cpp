// Command-line front end: wires JSON configs to the solver, exponent and
// simulation pipelines and emits machine-readable CSV/JSON results.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "agrg/config.hpp"
#include "agrg/critical.hpp"
#include "agrg/simulate.hpp"

namespace {

using namespace agrg;

std::string fmt(double v) {
  char b[40];
  std::snprintf(b, sizeof(b), "%.17g", v);
  return b;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open output file: " + path);
  out << content;
}

void emit_json(const std::optional<std::string>& out, const json& j) {
  if (out) write_file(*out, j.dump(2) + "\n");
}

struct Cli {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool dry_run = false;
};

json fit_to_json(const ExponentFit& f, double predicted,
                 const TailRegime& regime) {
  return json{{"estimate", f.estimate},
              {"stderr", f.std_error},
              {"window", {f.window_lo, f.window_hi}},
              {"n_points", f.n_points},
              {"r_squared", f.r_squared},
              {"log_corrected", f.log_corrected},
              {"predicted", predicted},
              {"regime", regime.to_string()}};
}

json solve_record(const ModelSpec& model, const FixedPointResult& fp,
                  double pressure) {
  return json{{"theta", model.rank2().theta()},
              {"h", model.h},
              {"m_plus", fp.m_plus},
              {"residual", fp.residual},
              {"iterations", fp.iterations},
              {"pressure", pressure},
              {"certified", fp.certified}};
}

SolveOptions solve_options(const RunConfig& cfg) {
  const json j = cfg.command_block("solve");
  detail::reject_unknown_keys(j, "solve", {"tol"});
  SolveOptions o;
  o.tol = j.value("tol", 1e-12);
  return o;
}

int cmd_theta_c(const RunConfig& cfg, const Cli& cli) {
  validate(cfg.model);
  const double sbw = cfg.model.weights.size_biased_mean();
  const double g2 = integrate(cfg.model.measure, [&](double s) {
    return cfg.model.g(s) * cfg.model.g(s);
  });
  const double tc = theta_c(cfg.model);
  std::cout << "theta_c = " << fmt(tc) << "  (E_sb[W] = " << fmt(sbw)
            << ", alpha0(g^2) = " << fmt(g2) << ")\n";
  emit_json(cli.out,
            json{{"theta_c", tc}, {"sb_mean_weight", sbw}, {"alpha0_g2", g2}});
  return 0;
}

int cmd_solve(const RunConfig& cfg, const Cli& cli, bool print_pressure) {
  ModelSpec model = certify_concavity(cfg.model);
  validate(model);
  if (!model.concavity_certified)
    std::cerr << "warning: concavity scan failed; result is uncertified\n";
  FixedPointResult fp = solve_m(model, solve_options(cfg));
  const double psi = pressure_rank2(model, fp);
  if (print_pressure)
    std::cout << "pressure = " << fmt(psi) << "  (m_plus = " << fmt(fp.m_plus)
              << ")\n";
  else
    std::cout << "m_plus = " << fmt(signed_m(model, fp))
              << "  residual = " << fmt(fp.residual)
              << "  pressure = " << fmt(psi) << "\n";
  emit_json(cli.out, solve_record(model, fp, psi));
  return 0;
}

int cmd_curve(const RunConfig& cfg, const Cli& cli) {
  ModelSpec model = certify_concavity(cfg.model);
  validate(model);
  const json j = cfg.command_block("curve");
  detail::reject_unknown_keys(j, "curve", {"control", "lo", "hi", "n", "scale"});
  const std::string control = detail::require(j, "control", "curve");
  if (control != "theta" && control != "h")
    throw config_error("curve.control must be 'theta' or 'h'");
  const double lo = detail::require(j, "lo", "curve");
  const double hi = detail::require(j, "hi", "curve");
  const int n = j.value("n", 20);
  const std::string scale = j.value("scale", "linear");
  if (n < 2 || !(hi > lo)) throw config_error("curve grid needs hi > lo, n >= 2");
  std::vector<double> grid;
  for (int i = 0; i < n; ++i) {
    if (scale == "geometric") {
      if (!(lo > 0.0)) throw config_error("geometric grid needs lo > 0");
      grid.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
    } else {
      grid.push_back(lo + (hi - lo) * double(i) / (n - 1));
    }
  }
  auto rows = magnetization_curve(
      model, control == "theta" ? Control::Theta : Control::Field, grid,
      solve_options(cfg));
  std::string csv = "theta,h,m_plus,pressure,residual\n";
  int failures = 0;
  for (const auto& r : rows) {
    if (!r.ok) ++failures;
    csv += fmt(r.theta) + "," + fmt(r.h) + "," +
           (r.ok ? fmt(r.m_plus) : "nan") + "," +
           (r.ok ? fmt(r.pressure) : "nan") + "," +
           (r.ok ? fmt(r.residual) : "nan") + "\n";
  }
  if (cli.out) write_file(*cli.out, csv);
  else std::cout << csv;
  std::cout << "curve: " << rows.size() << " rows, " << failures
            << " failed\n";
  return 0;
}

int cmd_exponents(const RunConfig& cfg, const Cli& cli) {
  ModelSpec model = certify_concavity(cfg.model);
  validate(model);
  if (!model.concavity_certified)
    std::cerr << "warning: concavity scan failed; exponent theory needs it\n";
  const json j = cfg.command_block("exponents");
  detail::reject_unknown_keys(j, "exponents",
                              {"beta_window", "delta_window", "n_points",
                               "k_max", "tol", "log_corrected"});
  const int k = detect_k(model.measure, model.g, j.value("k_max", 10),
                         j.value("tol", 1e-9));
  const TailRegime regime = model.weights.classify_tail(k);
  const ExponentPrediction pred = predicted_exponents(k, regime);
  FitOptions fo;
  fo.n_points = j.value("n_points", 12);
  fo.log_corrected = j.value("log_corrected", pred.log_correction);
  fo.solve = solve_options(cfg);
  auto window = [&](const char* key, double dlo, double dhi) {
    if (!j.contains(key)) return std::pair<double, double>(dlo, dhi);
    const json& w = j[key];
    if (!w.is_array() || w.size() != 2)
      throw config_error(std::string("exponents.") + key + " must be [lo, hi]");
    return std::pair<double, double>(double(w[0]), double(w[1]));
  };
  auto [blo, bhi] = window("beta_window", 1e-5, 1e-2);
  auto [dlo, dhi] = window("delta_window", 1e-5, 1e-2);
  ExponentFit fb = fit_beta(model, blo, bhi, fo);
  ExponentFit fd = fit_delta(model, dlo, dhi, fo);
  std::cout << "k = " << k << "  regime = " << regime.to_string() << "\n";
  std::cout << "beta:  fit = " << fmt(fb.estimate)
            << "  predicted = " << fmt(pred.beta)
            << (fo.log_corrected ? "  (log-corrected)" : "") << "\n";
  std::cout << "delta: fit = " << fmt(fd.estimate)
            << "  predicted = " << fmt(pred.delta) << "\n";
  emit_json(cli.out, json{{"k", k},
                          {"regime", regime.to_string()},
                          {"beta", fit_to_json(fb, pred.beta, regime)},
                          {"delta", fit_to_json(fd, pred.delta, regime)}});
  return 0;
}

int cmd_uniqueness(const RunConfig& cfg, const Cli& cli) {
  const json j = cfg.command_block("uniqueness");
  detail::reject_unknown_keys(j, "uniqueness", {});
  UniquenessReport r =
      cfg.model.is_rank2()
          ? uniqueness_bound(cfg.model.rank2(), cfg.model.weights)
          : uniqueness_bound(cfg.model.grid(), cfg.model.weights);
  std::cout << (r.holds ? "holds" : "inconclusive") << ", lhs = " << fmt(r.lhs)
            << "\n";
  emit_json(cli.out, json{{"lhs", r.lhs}, {"holds", r.holds}});
  return 0;
}

int cmd_cumulants(const RunConfig& cfg, const Cli& cli) {
  const json j = cfg.command_block("cumulants");
  detail::reject_unknown_keys(j, "cumulants",
                              {"k_max", "tol", "t_max", "n_points"});
  const int k_max = j.value("k_max", 10);
  const double tol = j.value("tol", 1e-9);
  json out;
  json kappa = json::array();
  for (int i = 1; i <= k_max; ++i) {
    const double v = cumulant(cfg.model.measure, cfg.model.g, i);
    kappa.push_back(v);
    std::cout << "kappa_" << i << " = " << fmt(v) << "\n";
  }
  out["cumulants"] = kappa;
  int k = 0;
  try {
    k = detect_k(cfg.model.measure, cfg.model.g, k_max, tol);
    std::cout << "k = " << k << "\n";
    out["k"] = k;
  } catch (const detect_k_error&) {
    std::cout << "k = none (no even cumulant below -tol up to k_max)\n";
    out["k"] = nullptr;
  }
  ConcavityReport rep =
      concavity_scan(cfg.model.measure, cfg.model.g, j.value("t_max", 20.0),
                     j.value("n_points", 200));
  std::cout << "concavity scan: " << (rep.pass ? "pass" : "FAIL")
            << "  worst = " << fmt(rep.worst_value) << " at t = "
            << fmt(rep.worst_t) << "\n";
  out["concavity"] = json{{"pass", rep.pass},
                          {"worst_value", rep.worst_value},
                          {"worst_t", rep.worst_t}};
  emit_json(cli.out, out);
  return 0;
}

int cmd_solve_general(const RunConfig& cfg, const Cli& cli) {
  const json j = cfg.command_block("general");
  detail::reject_unknown_keys(
      j, "general", {"damping", "tol", "max_iter", "random_starts", "weight_grid"});
  PicardOptions o;
  o.damping = j.value("damping", 0.5);
  o.tol = j.value("tol", 1e-11);
  o.max_iter = j.value("max_iter", 50000);
  o.weight_grid = j.value("weight_grid", 512);
  const int random_starts = j.value("random_starts", 0);
  auto sols = solve_V_all(cfg.model, o, random_starts, cfg.seed);
  int argmax = 0;
  const double best = pressure_general_max(cfg.model, sols, &argmax);
  NodeSystem ns = node_system(cfg.model.measure);
  json branches = json::array();
  for (std::size_t i = 0; i < sols.size(); ++i) {
    // Projection of V onto g over the node measure: the order parameter.
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < ns.x.size(); ++t) {
      const double gv = cfg.model.g(ns.x[t]);
      num += ns.w[t] * sols[i].v[t] * gv;
      den += ns.w[t] * gv * gv;
    }
    branches.push_back(json{{"m_projection", num / den},
                            {"residual", sols[i].residual},
                            {"iterations", sols[i].iterations},
                            {"pressure", pressure_general(cfg.model, sols[i])}});
  }
  std::cout << "branches = " << sols.size() << "  pressure = " << fmt(best)
            << "\n";
  emit_json(cli.out, json{{"branches", branches},
                          {"pressure", best},
                          {"argmax", argmax}});
  return 0;
}

int cmd_simulate(const RunConfig& cfg, const Cli& cli) {
  const json j = cfg.command_block("simulate");
  detail::reject_unknown_keys(
      j, "simulate",
      {"N", "sweeps", "burnin", "chains", "trace", "exact", "mode"});
  McOptions o;
  o.n = detail::require(j, "N", "simulate");
  o.sweeps = j.value("sweeps", std::int64_t(10000));
  o.burnin = j.value("burnin", std::int64_t(1000));
  o.chains = j.value("chains", 1);
  o.seed = cfg.seed;
  const std::string mode = j.value("mode", "quantile");
  if (mode != "quantile" && mode != "random")
    throw config_error("simulate.mode must be 'quantile' or 'random'");
  o.mode = mode == "quantile" ? SequenceMode::Quantile : SequenceMode::Random;
  if (cli.threads > 0) o.chains = cli.threads;

  const std::string trace_path = j.value("trace", "");
  McResult r = run_mc(cfg.model, o, /*keep_trace=*/!trace_path.empty());

  json out{{"order_param", r.order_param},
           {"stderr", r.std_error},
           {"acceptance_rate", r.acceptance_rate},
           {"mean_edges", r.mean_edges},
           {"raw_magnetization", r.raw_magnetization},
           {"N", o.n},
           {"sweeps", o.sweeps},
           {"burnin", o.burnin},
           {"chains", o.chains},
           {"seed", o.seed}};

  if (j.value("exact", false)) {
    std::vector<double> w =
        cfg.model.weights.weight_sequence(o.n, o.mode, o.seed);
    ExactResult ex = exact_annealed(cfg.model, w);
    out["exact"] = json{{"pressure", ex.pressure},
                        {"magnetization", ex.magnetization},
                        {"abs_magnetization", ex.abs_magnetization}};
  }

  if (!trace_path.empty()) {
    std::string csv = "# seed=" + std::to_string(o.seed) +
                      " chains=" + std::to_string(o.chains) +
                      " N=" + std::to_string(o.n) + "\n";
    csv += "sweep,B_N,energy_proxy,edges_count\n";
    for (const auto& t : r.trace)
      csv += std::to_string(t.sweep) + "," + fmt(t.b) + "," + fmt(t.energy) +
             "," + std::to_string(t.edges) + "\n";
    write_file(trace_path, csv);
  }

  std::cout << "order_param = " << fmt(r.order_param) << " +- "
            << fmt(r.std_error) << "  acceptance = " << fmt(r.acceptance_rate)
            << "\n";
  emit_json(cli.out, out);
  return 0;
}

int dispatch(const std::string& cmd, const RunConfig& cfg, const Cli& cli) {
  if (cli.dry_run) {
    std::cout << describe(cfg.model) << "seed:      " << cfg.seed << "\n";
    return 0;
  }
  if (!cfg.warning.empty()) std::cerr << "warning: " << cfg.warning << "\n";
  if (cmd == "theta-c") return cmd_theta_c(cfg, cli);
  if (cmd == "solve") return cmd_solve(cfg, cli, false);
  if (cmd == "pressure") return cmd_solve(cfg, cli, true);
  if (cmd == "curve") return cmd_curve(cfg, cli);
  if (cmd == "exponents") return cmd_exponents(cfg, cli);
  if (cmd == "uniqueness") return cmd_uniqueness(cfg, cli);
  if (cmd == "cumulants") return cmd_cumulants(cfg, cli);
  if (cmd == "solve-general") return cmd_solve_general(cfg, cli);
  if (cmd == "simulate") return cmd_simulate(cfg, cli);
  throw config_error("unknown command: " + cmd);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"annealed spin models on generalized random graphs"};
  app.require_subcommand(1);

  Cli cli;
  std::string out_path;
  std::uint64_t seed_val = 0;
  const std::vector<std::string> names = {
      "theta-c",    "solve",     "curve",         "pressure", "exponents",
      "uniqueness", "cumulants", "solve-general", "simulate"};
  for (const auto& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", cli.config_path, "config file (JSON)")
        ->required();
    sub->add_option("--out", out_path, "output file path");
    sub->add_option("--seed", seed_val, "override config seed");
    sub->add_option("--threads", cli.threads, "worker threads (chains)");
    sub->add_flag("--dry-run", cli.dry_run,
                  "validate config and print the resolved model");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  if (app.get_subcommands().front()->count("--out")) cli.out = out_path;
  try {
    agrg::RunConfig cfg = agrg::load_config(cli.config_path);
    if (app.get_subcommands().front()->count("--seed")) cfg.seed = seed_val;
    return dispatch(cmd, cfg, cli);
  } catch (const agrg::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const agrg::capacity_error& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 4;
  } catch (const agrg::integration_error& e) {
    std::cerr << "integration error: " << e.what() << "\n";
    return 5;
  } catch (const agrg::solver_error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

#include "hcc/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "hcc/errors.hpp"

namespace hcc {

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const json& req(const json& j, const std::string& path, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) config_fail(path + "." + key, "missing field");
  return j.at(key);
}

double req_num(const json& j, const std::string& path, const std::string& key) {
  const json& v = req(j, path, key);
  if (!v.is_number()) config_fail(path + "." + key, "expected a number");
  return v.get<double>();
}

std::string req_str(const json& j, const std::string& path, const std::string& key) {
  const json& v = req(j, path, key);
  if (!v.is_string()) config_fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

Vec req_vec(const json& j, const std::string& path, const std::string& key) {
  const json& v = req(j, path, key);
  if (!v.is_array()) config_fail(path + "." + key, "expected an array of numbers");
  Vec out;
  for (const auto& e : v) {
    if (!e.is_number()) config_fail(path + "." + key, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

double opt_num(const json& j, const std::string&, const std::string& key, double dflt) {
  return (j.is_object() && j.contains(key)) ? j.at(key).get<double>() : dflt;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  if (req_str(j, "$", "schema") != "hcc/1")
    config_fail("$.schema", "unsupported schema (want \"hcc/1\")");
  cfg.name = req_str(j, "$", "name");
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();

  const json& game = req(j, "$", "game");
  const json& payoff = req(game, "$.game", "payoff");
  PayoffSpec& ps = cfg.game.payoff;
  ps.kind = req_str(payoff, "$.game.payoff", "kind");
  if (ps.kind == "bilinear") {
    ps.p = req_num(payoff, "$.game.payoff", "p");
    ps.q = req_num(payoff, "$.game.payoff", "q");
  } else if (ps.kind == "matrix_bilinear") {
    const json& A = req(payoff, "$.game.payoff", "A");
    if (!A.is_array() || A.empty()) config_fail("$.game.payoff.A", "expected a matrix");
    for (const auto& row : A) ps.A.push_back(row.get<Vec>());
  } else if (ps.kind == "vanilla_gan") {
    ps.p_data = req_vec(payoff, "$.game.payoff", "p_data");
  } else if (ps.kind == "wgan_gaussian") {
    ps.alpha_star_sq = req_num(payoff, "$.game.payoff", "alpha_star_sq");
    if (payoff.contains("regularized"))
      ps.wgan_regularized = payoff.at("regularized").get<bool>();
  } else if (ps.kind == "fgan") {
    ps.p_data = req_vec(payoff, "$.game.payoff", "p_data");
    ps.f_div = req_str(payoff, "$.game.payoff", "f_div");
  } else {
    config_fail("$.game.payoff.kind", "unknown payoff kind '" + ps.kind + "'");
  }

  for (const auto& s : req(game, "$.game", "bank_f"))
    cfg.game.bank_f.push_back(s.get<std::string>());
  for (const auto& s : req(game, "$.game", "bank_g"))
    cfg.game.bank_g.push_back(s.get<std::string>());
  if (game.contains("regularize")) {
    const json& r = game.at("regularize");
    RegularizeSpec rs;
    rs.lambda = req_num(r, "$.game.regularize", "lambda");
    rs.center_f = req_vec(r, "$.game.regularize", "center_f");
    rs.center_g = req_vec(r, "$.game.regularize", "center_g");
    cfg.game.regularize = rs;
  }

  const json& flow = req(j, "$", "flow");
  cfg.flow.kind = req_str(flow, "$.flow", "kind");
  if (cfg.flow.kind == "gda" || cfg.flow.kind == "transformed" ||
      cfg.flow.kind == "hgd_mod") {
    cfg.flow.dt = opt_num(flow, "$.flow", "dt", 1e-3);
    cfg.flow.t_end = req_num(flow, "$.flow", "t_end");
    if (cfg.flow.kind == "hgd_mod") {
      cfg.flow.p = req_num(flow, "$.flow", "p");
      cfg.flow.q = req_num(flow, "$.flow", "q");
    }
  } else if (cfg.flow.kind == "sgda") {
    cfg.flow.steps = static_cast<std::int64_t>(req_num(flow, "$.flow", "steps"));
    cfg.flow.lr = opt_num(flow, "$.flow", "lr", 1e-3);
    cfg.flow.batch = static_cast<int>(opt_num(flow, "$.flow", "batch", 256));
  } else {
    config_fail("$.flow.kind", "unknown flow kind '" + cfg.flow.kind + "'");
  }

  const json& init = req(j, "$", "init");
  cfg.init_theta = req_vec(init, "$.init", "theta");
  cfg.init_phi = req_vec(init, "$.init", "phi");

  if (j.contains("targets")) {
    for (const auto& t : j.at("targets")) {
      TargetSpec ts;
      ts.p = req_vec(t, "$.targets[]", "p");
      ts.q = req_vec(t, "$.targets[]", "q");
      cfg.targets.push_back(std::move(ts));
    }
  }

  const json& out = req(j, "$", "outputs");
  cfg.outputs.csv_path = out.value("csv", "");
  cfg.outputs.summary_path = out.value("summary", "");
  cfg.outputs.record_every = static_cast<int>(opt_num(out, "$.outputs", "record_every", 1));
  if (cfg.outputs.record_every < 1)
    config_fail("$.outputs.record_every", "must be >= 1");

  if (j.contains("detect")) {
    cfg.detect.tol = opt_num(j.at("detect"), "$.detect", "tol", 1e-3);
    cfg.detect.window = opt_num(j.at("detect"), "$.detect", "window", 10.0);
  }
  if (j.contains("fit")) {
    cfg.fit.t_lo = opt_num(j.at("fit"), "$.fit", "t_lo", -1.0);
    cfg.fit.t_hi = opt_num(j.at("fit"), "$.fit", "t_hi", -1.0);
  }
  return cfg;
}

json serialize_config(const ExperimentConfig& cfg) {
  json payoff{{"kind", cfg.game.payoff.kind}};
  const PayoffSpec& ps = cfg.game.payoff;
  if (ps.kind == "bilinear") {
    payoff["p"] = ps.p;
    payoff["q"] = ps.q;
  } else if (ps.kind == "matrix_bilinear") {
    payoff["A"] = ps.A;
  } else if (ps.kind == "vanilla_gan") {
    payoff["p_data"] = ps.p_data;
  } else if (ps.kind == "wgan_gaussian") {
    payoff["alpha_star_sq"] = ps.alpha_star_sq;
    payoff["regularized"] = ps.wgan_regularized;
  } else if (ps.kind == "fgan") {
    payoff["p_data"] = ps.p_data;
    payoff["f_div"] = ps.f_div;
  }
  json game{{"payoff", payoff}, {"bank_f", cfg.game.bank_f}, {"bank_g", cfg.game.bank_g}};
  if (cfg.game.regularize) {
    game["regularize"] = json{{"lambda", cfg.game.regularize->lambda},
                              {"center_f", cfg.game.regularize->center_f},
                              {"center_g", cfg.game.regularize->center_g}};
  }
  json flow{{"kind", cfg.flow.kind}};
  if (cfg.flow.kind == "sgda") {
    flow["steps"] = cfg.flow.steps;
    flow["lr"] = cfg.flow.lr;
    flow["batch"] = cfg.flow.batch;
  } else {
    flow["dt"] = cfg.flow.dt;
    flow["t_end"] = cfg.flow.t_end;
    if (cfg.flow.kind == "hgd_mod") {
      flow["p"] = cfg.flow.p;
      flow["q"] = cfg.flow.q;
    }
  }
  json targets = json::array();
  for (const auto& t : cfg.targets) targets.push_back(json{{"p", t.p}, {"q", t.q}});
  json j{{"schema", "hcc/1"},
         {"name", cfg.name},
         {"seed", cfg.seed},
         {"game", game},
         {"flow", flow},
         {"init", json{{"theta", cfg.init_theta}, {"phi", cfg.init_phi}}},
         {"targets", targets},
         {"outputs", json{{"csv", cfg.outputs.csv_path},
                          {"summary", cfg.outputs.summary_path},
                          {"record_every", cfg.outputs.record_every}}},
         {"detect", json{{"tol", cfg.detect.tol}, {"window", cfg.detect.window}}},
         {"fit", json{{"t_lo", cfg.fit.t_lo}, {"t_hi", cfg.fit.t_hi}}}};
  return j;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("invalid JSON in '" + path + "': " + e.what());
  }
  ExperimentConfig cfg = parse_config(j);
  if (const char* env = std::getenv("HCC_SEED")) {
    cfg.seed = std::strtoull(env, nullptr, 10);
  }
  return cfg;
}

PayoffFn build_payoff(const PayoffSpec& spec) {
  if (spec.kind == "bilinear") return bilinear_payoff(spec.p, spec.q);
  if (spec.kind == "matrix_bilinear") return matrix_bilinear_payoff(spec.A);
  if (spec.kind == "vanilla_gan") return vanilla_gan_payoff(spec.p_data);
  if (spec.kind == "wgan_gaussian")
    return spec.wgan_regularized ? wgan_gaussian_payoff(spec.alpha_star_sq)
                                 : wgan_gaussian_payoff_unregularized(spec.alpha_star_sq);
  if (spec.kind == "fgan") return fgan_payoff(spec.p_data, fdiv_spec(spec.f_div));
  throw ConfigError("unknown payoff kind '" + spec.kind + "'");
}

HiddenGame build_game(const GameSpec& spec) {
  HiddenGame game;
  game.payoff = build_payoff(spec.payoff);
  if (spec.regularize) {
    const auto& r = *spec.regularize;
    game.payoff = regularize(game.payoff, r.lambda, r.center_f, r.center_g).wrapped;
  }
  for (const auto& name : spec.bank_f) game.bank_f.operators.push_back(make_operator(name));
  for (const auto& name : spec.bank_g) game.bank_g.operators.push_back(make_operator(name));
  if (static_cast<int>(game.bank_f.operators.size()) != game.payoff.dim_f ||
      static_cast<int>(game.bank_g.operators.size()) != game.payoff.dim_g)
    throw ConfigError("bank sizes do not match payoff dimensions");
  return game;
}

namespace {

std::vector<AscentPath> bank_paths(const OperatorBank& bank, const Vec& init) {
  std::vector<AscentPath> paths;
  int off = 0;
  for (std::size_t i = 0; i < bank.operators.size(); ++i) {
    const auto& op = bank.operators[i];
    Vec block(init.begin() + off, init.begin() + off + op.input_dim);
    AscentPath p = build_ascent_path(op, block);
    p.operator_index = static_cast<int>(i);
    paths.push_back(std::move(p));
    off += op.input_dim;
  }
  return paths;
}

const char* verdict_name(ConvergenceVerdict v) {
  switch (v) {
    case ConvergenceVerdict::Converged: return "Converged";
    case ConvergenceVerdict::Cycling: return "Cycling";
    default: return "Undecided";
  }
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  HiddenGame game = build_game(cfg.game);
  const FlowSpec& fl = cfg.flow;
  RunResult res;
  Trajectory& traj = res.trajectory;

  if (fl.kind == "gda") {
    traj = gda_flow(game, cfg.init_theta, cfg.init_phi, fl.t_end, fl.dt,
                    cfg.outputs.record_every);
  } else if (fl.kind == "transformed") {
    auto paths_F = bank_paths(game.bank_f, cfg.init_theta);
    auto paths_G = bank_paths(game.bank_g, cfg.init_phi);
    Vec f0 = game.bank_f.outputs(cfg.init_theta);
    Vec g0 = game.bank_g.outputs(cfg.init_phi);
    traj = transformed_flow(game.payoff, paths_F, paths_G, f0, g0, fl.t_end, fl.dt,
                            cfg.outputs.record_every);
  } else if (fl.kind == "hgd_mod") {
    if (game.bank_f.operators.size() != 1 || game.bank_g.operators.size() != 1)
      throw ConfigError("hgd_mod flow needs exactly one operator per side");
    traj = hgd_mod_flow(game.bank_f.operators[0], game.bank_g.operators[0], fl.p, fl.q,
                        cfg.init_theta, cfg.init_phi, fl.t_end, fl.dt,
                        cfg.outputs.record_every);
  } else if (fl.kind == "sgda") {
    if (cfg.game.payoff.kind != "wgan_gaussian")
      throw ConfigError("sgda flow is only wired to the wgan_gaussian payoff");
    WganGradSource src(cfg.game.payoff.alpha_star_sq, fl.batch, cfg.seed,
                       cfg.game.payoff.wgan_regularized);
    traj = sgda_discrete(game, src, cfg.init_theta, cfg.init_phi, fl.steps, fl.lr,
                         cfg.outputs.record_every);
  } else {
    throw ConfigError("unknown flow kind '" + fl.kind + "'");
  }

  json summary{{"schema", "hcc/1"},
               {"name", cfg.name},
               {"seed", cfg.seed},
               {"flow", fl.kind},
               {"rows", traj.size()},
               {"final_f", traj.outputs_f.back()},
               {"final_g", traj.outputs_g.back()},
               {"verdict", "Undecided"},
               {"final_r", nullptr},
               {"monotone_H", nullptr},
               {"constant_H", nullptr},
               {"max_H_increment", nullptr},
               {"fitted_rate", nullptr},
               {"fit_r_squared", nullptr}};

  if (!cfg.targets.empty()) {
    std::vector<std::pair<Vec, Vec>> solutions;
    for (const auto& t : cfg.targets) solutions.emplace_back(t.p, t.q);
    ConvergenceReport rep =
        detect_convergence(traj, solutions, cfg.detect.tol, cfg.detect.window);
    summary["verdict"] = verdict_name(rep.verdict);
    summary["final_r"] = rep.final_r;

    const TargetSpec& t0 = cfg.targets.front();
    traj.r = distance_r(traj, t0.p, t0.q);

    const double horizon = traj.times.back();
    const double t_lo = cfg.fit.t_lo >= 0.0 ? cfg.fit.t_lo : 0.1 * horizon;
    const double t_hi = cfg.fit.t_hi >= 0.0 ? cfg.fit.t_hi : horizon;
    RateFit fit = fit_rate(traj, t0.p, t0.q, t_lo, t_hi);
    if (!fit.degenerate && !fit.exact_zero) {
      summary["fitted_rate"] = fit.rate;
      summary["fit_r_squared"] = fit.r_squared;
    }

    if (fl.kind != "sgda") {
      LyapunovContext ctx;
      ctx.paths_F = bank_paths(game.bank_f, cfg.init_theta);
      ctx.paths_G = bank_paths(game.bank_g, cfg.init_phi);
      ctx.target_p = t0.p;
      ctx.target_q = t0.q;
      SafetyReport safety = is_safe(ctx.paths_F, ctx.paths_G, t0.p, t0.q);
      if (safety.all_safe) {
        MonotoneAudit audit = audit_monotone_H(ctx, traj);
        traj.H = audit.H;
        summary["monotone_H"] = audit.monotone;
        summary["constant_H"] = audit.constant;
        summary["max_H_increment"] = audit.max_increment;
      }
    }
  }
  res.summary = std::move(summary);
  return res;
}

void validate_summary(const json& summary) {
  const char* str_keys[] = {"schema", "name", "flow", "verdict"};
  for (const char* k : str_keys)
    if (!summary.contains(k) || !summary.at(k).is_string())
      throw ConfigError(std::string("summary.") + k + ": missing or not a string");
  if (summary.at("schema") != "hcc/1") throw ConfigError("summary.schema: not hcc/1");
  if (!summary.contains("rows") || !summary.at("rows").is_number_unsigned())
    throw ConfigError("summary.rows: missing or not a count");
  const char* nullable_num[] = {"final_r", "max_H_increment", "fitted_rate",
                                "fit_r_squared"};
  for (const char* k : nullable_num)
    if (!summary.contains(k) || (!summary.at(k).is_null() && !summary.at(k).is_number()))
      throw ConfigError(std::string("summary.") + k + ": missing or not a number/null");
  const char* nullable_bool[] = {"monotone_H", "constant_H"};
  for (const char* k : nullable_bool)
    if (!summary.contains(k) || (!summary.at(k).is_null() && !summary.at(k).is_boolean()))
      throw ConfigError(std::string("summary.") + k + ": missing or not a bool/null");
}

void atomic_write(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    if (!out) throw ConfigError("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

int run_and_write(const ExperimentConfig& cfg) {
  RunResult res = run_experiment(cfg);
  validate_summary(res.summary);
  if (!cfg.outputs.csv_path.empty()) {
    std::ostringstream csv;
    write_csv(res.trajectory, csv);
    atomic_write(cfg.outputs.csv_path, csv.str());
  }
  if (!cfg.outputs.summary_path.empty()) {
    atomic_write(cfg.outputs.summary_path, res.summary.dump(2) + "\n");
  }
  return 0;
}

SweepAxes parse_sweep_axes(const json& j) {
  SweepAxes axes;
  if (j.contains("lambda"))
    for (const auto& v : j.at("lambda")) axes.lambdas.push_back(v.get<double>());
  if (j.contains("seeds"))
    for (const auto& v : j.at("seeds")) axes.seeds.push_back(v.get<std::uint64_t>());
  if (j.contains("init_grid")) {
    const json& g = j.at("init_grid");
    axes.grid_k = static_cast<int>(req_num(g, "$.sweep.init_grid", "k"));
    axes.grid_lo = req_num(g, "$.sweep.init_grid", "lo");
    axes.grid_hi = req_num(g, "$.sweep.init_grid", "hi");
    if (axes.grid_k < 2) config_fail("$.sweep.init_grid.k", "must be >= 2");
  }
  return axes;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepAxes& axes,
                                int jobs) {
  // Materialize the cross product of axis assignments up front so rows have
  // a stable order regardless of thread scheduling.
  std::vector<ExperimentConfig> configs;
  std::vector<std::string> descs;

  std::vector<double> lambdas = axes.lambdas;
  if (lambdas.empty()) lambdas.push_back(base.game.regularize ? base.game.regularize->lambda : 0.0);
  std::vector<std::uint64_t> seeds = axes.seeds;
  if (seeds.empty()) seeds.push_back(base.seed);

  std::vector<Vec> inits_theta{base.init_theta}, inits_phi{base.init_phi};
  std::vector<std::string> init_descs{"base"};
  if (axes.grid_k > 0) {
    inits_theta.clear();
    inits_phi.clear();
    init_descs.clear();
    const int n = static_cast<int>(base.init_theta.size());
    const int m = static_cast<int>(base.init_phi.size());
    const int dims = n + m;
    std::vector<int> idx(dims, 0);
    while (true) {
      Vec th(n), ph(m);
      std::string d = "grid(";
      for (int i = 0; i < dims; ++i) {
        const double v =
            axes.grid_lo + (axes.grid_hi - axes.grid_lo) * idx[i] / (axes.grid_k - 1);
        if (i < n) th[i] = v; else ph[i - n] = v;
        d += (i ? "," : "") + std::to_string(idx[i]);
      }
      d += ")";
      inits_theta.push_back(std::move(th));
      inits_phi.push_back(std::move(ph));
      init_descs.push_back(std::move(d));
      int i = dims - 1;
      while (i >= 0 && ++idx[i] == axes.grid_k) idx[i--] = 0;
      if (i < 0) break;
    }
  }

  for (double lam : lambdas)
    for (std::uint64_t seed : seeds)
      for (std::size_t gi = 0; gi < inits_theta.size(); ++gi) {
        ExperimentConfig cfg = base;
        if (!axes.lambdas.empty()) {
          if (!cfg.game.regularize)
            throw ConfigError("sweep.lambda needs game.regularize in the base config");
          cfg.game.regularize->lambda = lam;
        }
        cfg.seed = seed;
        cfg.init_theta = inits_theta[gi];
        cfg.init_phi = inits_phi[gi];
        cfg.outputs.csv_path.clear();  // sweeps emit the table, not trajectories
        cfg.outputs.summary_path.clear();
        configs.push_back(std::move(cfg));
        descs.push_back("lambda=" + std::to_string(lam) + " seed=" + std::to_string(seed) +
                        " init=" + init_descs[gi]);
      }

  std::vector<SweepRow> rows(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < configs.size(); i = next.fetch_add(1)) {
      SweepRow& row = rows[i];
      row.axis_desc = descs[i];
      const auto start = std::chrono::steady_clock::now();
      try {
        RunResult res = run_experiment(configs[i]);
        row.verdict = res.summary.at("verdict").get<std::string>();
        if (res.summary.at("fitted_rate").is_number())
          row.fitted_rate = res.summary.at("fitted_rate").get<double>();
        if (res.summary.at("final_r").is_number())
          row.final_r = res.summary.at("final_r").get<double>();
      } catch (const std::exception& e) {
        row.failed = true;
        row.message = e.what();
      }
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
  os << "axis,status,verdict,fitted_rate,final_r,wall_seconds,message\n";
  char buf[64];
  for (const auto& row : rows) {
    os << '"' << row.axis_desc << "\"," << (row.failed ? "error" : "ok") << ','
       << row.verdict << ',';
    std::snprintf(buf, sizeof buf, "%.17g", row.fitted_rate);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", row.final_r);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.6g", row.wall_seconds);
    os << buf << ",\"" << row.message << "\"\n";
  }
}

}  // namespace hcc

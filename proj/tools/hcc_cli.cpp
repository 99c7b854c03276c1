#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hcc/errors.hpp"
#include "hcc/experiment.hpp"
#include "hcc/gan_solutions.hpp"

namespace {

using nlohmann::json;

int cmd_simulate(const std::string& config_path) {
  hcc::ExperimentConfig cfg = hcc::load_config_file(config_path);
  hcc::run_and_write(cfg);
  std::cout << "simulate: " << cfg.name << " done";
  if (!cfg.outputs.csv_path.empty()) std::cout << " csv=" << cfg.outputs.csv_path;
  if (!cfg.outputs.summary_path.empty())
    std::cout << " summary=" << cfg.outputs.summary_path;
  std::cout << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, int jobs, const std::string& out_path) {
  std::ifstream in(config_path);
  if (!in) throw hcc::ConfigError("cannot open config file '" + config_path + "'");
  json j;
  in >> j;
  hcc::ExperimentConfig base = hcc::parse_config(j);
  if (!j.contains("sweep")) throw hcc::ConfigError("$.sweep: missing field");
  hcc::SweepAxes axes = hcc::parse_sweep_axes(j.at("sweep"));
  auto rows = hcc::run_sweep(base, axes, jobs);
  std::ostringstream table;
  hcc::write_sweep_csv(rows, table);
  if (out_path.empty()) {
    std::cout << table.str();
  } else {
    hcc::atomic_write(out_path, table.str());
    std::cout << "sweep: " << rows.size() << " rows -> " << out_path << "\n";
  }
  for (const auto& row : rows)
    if (row.failed) return 1;
  return 0;
}

hcc::GanKind parse_gan_kind(const json& j) {
  hcc::GanKind kind;
  const std::string fam = j.at("kind").get<std::string>();
  if (fam == "gan") {
    kind.family = hcc::GanFamily::GAN;
  } else if (fam == "fgan") {
    kind.family = hcc::GanFamily::FGAN;
    kind.f_div = hcc::fdiv_spec(j.at("f_div").get<std::string>());
  } else if (fam == "wgan") {
    kind.family = hcc::GanFamily::WGAN;
  } else {
    throw hcc::ConfigError("$.kind: unknown GAN family '" + fam + "'");
  }
  return kind;
}

int cmd_gan_solve(const std::string& instance_path, const std::string& out_path,
                  std::uint64_t seed) {
  std::ifstream in(instance_path);
  if (!in) throw hcc::ConfigError("cannot open instance file '" + instance_path + "'");
  json j;
  in >> j;
  hcc::GanKind kind = parse_gan_kind(j);

  hcc::DiscreteGanInstance inst;
  inst.p_data = j.at("p_data").get<hcc::Vec>();
  inst.support_size = static_cast<int>(inst.p_data.size());
  if (j.contains("metric")) inst.metric = j.at("metric").get<hcc::Mat>();
  if (j.contains("constraints")) {
    for (const auto& c : j.at("constraints")) {
      hcc::LinearConstraint lc;
      lc.a = c.at("a").get<hcc::Vec>();
      lc.b = c.at("b").get<double>();
      inst.constraints.push_back(std::move(lc));
    }
  }

  hcc::NonRealizableOptions opt;
  opt.seed = seed;
  hcc::SaddleSolution sol = hcc::nonrealizable_solve(inst, kind, opt);

  json out{{"schema", "hcc/1"},
           {"G_star", sol.G_star},
           {"D_star", sol.D_star},
           {"value", sol.value},
           {"certificates",
            json{{"max_primal_violation", sol.max_primal_violation},
                 {"max_dual_violation", sol.max_dual_violation}}}};
  if (out_path.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    hcc::atomic_write(out_path, out.dump(2) + "\n");
    std::cout << "gan-solve: wrote " << out_path << "\n";
  }
  return 0;
}

hcc::Vec parse_target_list(const std::string& s) {
  hcc::Vec out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

int cmd_audit(const std::string& csv_path, const std::string& target_p,
              const std::string& target_q) {
  std::ifstream in(csv_path);
  if (!in) throw hcc::ConfigError("cannot open trajectory file '" + csv_path + "'");
  std::string header;
  if (!std::getline(in, header)) throw hcc::ConfigError("empty trajectory file");

  // Column layout from the header: t, theta_*, phi_*, f_*, g_*, L, r, H.
  std::vector<std::string> cols;
  {
    std::stringstream hs(header);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  int f_begin = -1, f_end = -1, g_begin = -1, g_end = -1;
  for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
    if (cols[i].rfind("f_", 0) == 0) {
      if (f_begin < 0) f_begin = i;
      f_end = i + 1;
    } else if (cols[i].rfind("g_", 0) == 0) {
      if (g_begin < 0) g_begin = i;
      g_end = i + 1;
    }
  }
  if (f_begin < 0 || g_begin < 0)
    throw hcc::ConfigError("trajectory header has no f_/g_ columns");

  hcc::Trajectory traj;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    traj.times.push_back(std::stod(cells.at(0)));
    hcc::Vec F, G;
    for (int i = f_begin; i < f_end; ++i) F.push_back(std::stod(cells.at(i)));
    for (int i = g_begin; i < g_end; ++i) G.push_back(std::stod(cells.at(i)));
    traj.outputs_f.push_back(std::move(F));
    traj.outputs_g.push_back(std::move(G));
  }
  if (traj.times.size() < 2) throw hcc::ConfigError("trajectory has fewer than 2 rows");

  hcc::Vec p = parse_target_list(target_p);
  hcc::Vec q = parse_target_list(target_q);
  std::vector<double> r = hcc::distance_r(traj, p, q);
  double r_min = r[0], r_max = r[0];
  for (double v : r) {
    r_min = std::min(r_min, v);
    r_max = std::max(r_max, v);
  }
  hcc::RateFit fit = hcc::fit_rate(traj, p, q, 0.1 * traj.times.back(), traj.times.back());

  std::printf("rows %zu\n", traj.times.size());
  std::printf("r_initial %.17g\n", r.front());
  std::printf("r_final %.17g\n", r.back());
  std::printf("r_min %.17g\n", r_min);
  std::printf("r_max %.17g\n", r_max);
  if (fit.exact_zero) {
    std::printf("fit_rate inf\n");
  } else if (fit.degenerate) {
    std::printf("fit_rate degenerate\n");
  } else {
    std::printf("fit_rate %.17g\n", fit.rate);
    std::printf("fit_c0 %.17g\n", fit.c0);
    std::printf("fit_r_squared %.17g\n", fit.r_squared);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hcc: hidden convex-concave game simulation toolkit"};
  app.require_subcommand(1);

  std::string config_path, instance_path, csv_path, out_path, target_p, target_q;
  int jobs = 1;
  std::uint64_t seed = 0;

  auto* sim = app.add_subcommand("simulate", "Run one experiment from a JSON config");
  sim->add_option("config", config_path, "Experiment config (JSON)")->required();

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep from a JSON config");
  sweep->add_option("config", config_path, "Experiment config with a 'sweep' block")
      ->required();
  sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_path, "Write the sweep table here instead of stdout");

  auto* solve = app.add_subcommand("gan-solve", "Solve a discrete GAN instance");
  solve->add_option("instance", instance_path, "Instance description (JSON)")->required();
  solve->add_option("--out", out_path, "Write the solution JSON here instead of stdout");
  solve->add_option("--seed", seed, "Certificate sampling seed");

  auto* audit = app.add_subcommand("audit", "Distance/rate report for a trajectory CSV");
  audit->add_option("trajectory", csv_path, "Trajectory CSV")->required();
  audit->add_option("--target-p", target_p, "Comma-separated target p")->required();
  audit->add_option("--target-q", target_q, "Comma-separated target q")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config_path);
    if (sweep->parsed()) return cmd_sweep(config_path, jobs, out_path);
    if (solve->parsed()) return cmd_gan_solve(instance_path, out_path, seed);
    if (audit->parsed()) return cmd_audit(csv_path, target_p, target_q);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

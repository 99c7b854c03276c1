#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hcc/dynamics.hpp"
#include "hcc/gan_solutions.hpp"
#include "hcc/lyapunov.hpp"

#include "json.hpp"

namespace hcc {

struct PayoffSpec {
  std::string kind;                 // bilinear | matrix_bilinear | vanilla_gan |
                                    // wgan_gaussian | fgan
  double p = 0.0, q = 0.0;          // bilinear
  Mat A;                            // matrix_bilinear
  Vec p_data;                       // vanilla_gan / fgan
  double alpha_star_sq = 1.0;       // wgan_gaussian
  bool wgan_regularized = true;     // wgan_gaussian
  std::string f_div;                // fgan
};

struct RegularizeSpec {
  double lambda = 0.0;
  Vec center_f, center_g;
};

struct GameSpec {
  PayoffSpec payoff;
  std::vector<std::string> bank_f;
  std::vector<std::string> bank_g;
  std::optional<RegularizeSpec> regularize;
};

struct FlowSpec {
  std::string kind = "gda";  // gda | transformed | hgd_mod | sgda
  double dt = 1e-3;
  double t_end = 50.0;
  double p = 0.0, q = 0.0;        // hgd_mod target
  std::int64_t steps = 0;         // sgda
  double lr = 1e-3;               // sgda
  int batch = 256;                // sgda
};

struct TargetSpec {
  Vec p, q;
};

struct OutputSpec {
  std::string csv_path;
  std::string summary_path;
  int record_every = 1;
};

struct DetectSpec {
  double tol = 1e-3;
  double window = 10.0;
};

struct FitSpec {
  double t_lo = -1.0;  // negative: default to 10% of the horizon
  double t_hi = -1.0;  // negative: horizon end
};

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  GameSpec game;
  FlowSpec flow;
  Vec init_theta, init_phi;
  std::vector<TargetSpec> targets;
  OutputSpec outputs;
  DetectSpec detect;
  FitSpec fit;
};

ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json serialize_config(const ExperimentConfig& cfg);
ExperimentConfig load_config_file(const std::string& path);

PayoffFn build_payoff(const PayoffSpec& spec);
HiddenGame build_game(const GameSpec& spec);

struct RunResult {
  Trajectory trajectory;
  nlohmann::json summary;
};

// Runs one experiment: integrates the configured flow, attaches
// diagnostics against the first target when present, and fills the
// summary. Does not touch the filesystem.
RunResult run_experiment(const ExperimentConfig& cfg);

// run_experiment plus atomic CSV/summary writes to the configured paths.
int run_and_write(const ExperimentConfig& cfg);

struct SweepAxes {
  std::vector<double> lambdas;
  std::vector<std::uint64_t> seeds;
  // Optional init grid: k points per axis over [lo, hi] for every
  // parameter coordinate.
  int grid_k = 0;
  double grid_lo = 0.0, grid_hi = 0.0;
};

SweepAxes parse_sweep_axes(const nlohmann::json& j);

struct SweepRow {
  std::string axis_desc;
  bool failed = false;
  std::string message;
  std::string verdict;
  double fitted_rate = 0.0;
  double final_r = 0.0;
  double wall_seconds = 0.0;
};

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepAxes& axes,
                                int jobs);
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os);

// Validates a run summary against the embedded schema (required keys and
// types); throws ConfigError on mismatch.
void validate_summary(const nlohmann::json& summary);

// temp-file + rename.
void atomic_write(const std::string& path, const std::string& contents);

}  // namespace hcc

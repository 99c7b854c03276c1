#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hcc/operators.hpp"
#include "hcc/payoffs.hpp"

namespace hcc {

struct HiddenGame {
  PayoffFn payoff;
  OperatorBank bank_f;  // min side
  OperatorBank bank_g;  // max side
};

// Time-indexed record of a simulated run. r and H stay empty until filled
// in post-hoc by the lyapunov module.
struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<Vec> theta;
  std::vector<Vec> phi;
  std::vector<Vec> outputs_f;
  std::vector<Vec> outputs_g;
  std::vector<double> L;
  std::vector<double> r;
  std::vector<double> H;

  std::size_t size() const { return times.size(); }
};

// Simultaneous gradient descent (theta) / ascent (phi) flow on the hidden
// game, fixed-step RK4, sampled every record_every steps.
Trajectory gda_flow(const HiddenGame& game, const Vec& theta0, const Vec& phi0,
                    double t_end, double dt, int record_every = 1);

// Output-space flow induced by the reparametrization of GDA; uses the
// per-path squared gradient norms. Stops with OutOfRange when the state
// reaches a range boundary.
Trajectory transformed_flow(const PayoffFn& payoff,
                            const std::vector<AscentPath>& paths_F,
                            const std::vector<AscentPath>& paths_G,
                            const Vec& f0, const Vec& g0, double t_end, double dt,
                            int record_every = 1);

// Modified Hamiltonian flow for the 2x2 hidden bilinear game
// L = (f - p)(g - q).
Trajectory hgd_mod_flow(const ScalarOperator& f_op, const ScalarOperator& g_op,
                        double p, double q, const Vec& theta0, const Vec& phi0,
                        double t_end, double dt, int record_every = 1);

// Supplies unbiased gradient estimates for discrete stochastic GDA.
class StochasticGradSource {
 public:
  virtual ~StochasticGradSource() = default;
  virtual void estimate(std::span<const double> theta, std::span<const double> phi,
                        std::int64_t step, Vec& grad_theta, Vec& grad_phi) = 0;
};

// Sampled WGAN gradients for the 1-D Gaussian example; draws are keyed by
// (seed, step) so runs are reproducible.
class WganGradSource : public StochasticGradSource {
 public:
  WganGradSource(double alpha_star_sq, int batch, std::uint64_t seed, bool regularized);
  void estimate(std::span<const double> theta, std::span<const double> phi,
                std::int64_t step, Vec& grad_theta, Vec& grad_phi) override;

 private:
  double alpha_star_sq_;
  int batch_;
  std::uint64_t seed_;
  bool regularized_;
};

// Euler updates theta -= lr*g_theta, phi += lr*g_phi with fresh batches per
// step. Trajectory times are step counts.
Trajectory sgda_discrete(const HiddenGame& game, StochasticGradSource& sampler,
                         const Vec& theta0, const Vec& phi0, std::int64_t steps,
                         double lr, int record_every = 1);

// CSV schema: t, theta_0.., phi_0.., f_0.., g_0.., L, r, H (missing
// diagnostics written as empty fields).
void write_csv(const Trajectory& traj, std::ostream& os);

}  // namespace hcc

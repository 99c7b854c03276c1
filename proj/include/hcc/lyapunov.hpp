#pragma once

#include <span>
#include <utility>
#include <vector>

#include "hcc/dynamics.hpp"
#include "hcc/operators.hpp"
#include "hcc/payoffs.hpp"

namespace hcc {

// Frozen context for evaluating the initialization-dependent Lyapunov
// function against a chosen von Neumann solution (p, q).
struct LyapunovContext {
  std::vector<AscentPath> paths_F;
  std::vector<AscentPath> paths_G;
  Vec target_p;
  Vec target_q;
  double quadrature_tol = 1e-10;
};

// Sum of per-coordinate integrals of (z - target) / ||grad||^2 from the
// target to the current output. Sigmoid and identity coordinates use closed
// forms; custom coordinates use adaptive Simpson quadrature.
double eval_H(const LyapunovContext& ctx, std::span<const double> F,
              std::span<const double> G);

// Closed-form antiderivative of (z - p) / (z^2 (1-z)^2), the sigmoid
// integrand, by partial fractions. Exposed for testing against quadrature.
double sigmoid_H_term(double f, double p);

struct MonotoneAudit {
  std::vector<double> H;
  double max_increment = 0.0;     // largest positive step-to-step change
  std::ptrdiff_t first_violation = -1;  // index of first increment > tol
  bool monotone = true;
  double max_abs_delta = 0.0;
  bool constant = false;          // |H(t) - H(0)| stays below constant_tol
};

MonotoneAudit audit_monotone_H(const LyapunovContext& ctx, const Trajectory& traj,
                               double increment_tol = 1e-7,
                               double constant_tol = 1e-5);

// r(t) = ||F(t) - p||^2 + ||G(t) - q||^2.
std::vector<double> distance_r(const Trajectory& traj, std::span<const double> p,
                               std::span<const double> q);

enum class ConvergenceVerdict { Converged, Cycling, Undecided };

struct ConvergenceReport {
  ConvergenceVerdict verdict = ConvergenceVerdict::Undecided;
  int solution_index = -1;  // set when Converged
  double final_r = 0.0;     // r at the final time w.r.t. the nearest solution
};

ConvergenceReport detect_convergence(const Trajectory& traj,
                                     const std::vector<std::pair<Vec, Vec>>& solutions,
                                     double tol, double window,
                                     double reexcursion_factor = 2.0);

struct RateFit {
  double c0 = 0.0;    // exp(intercept)
  double rate = 0.0;  // -slope of log r(t)
  double r_squared = 0.0;
  bool degenerate = false;   // constant r, no meaningful fit
  bool exact_zero = false;   // r hit zero inside the interval (rate = +inf)
};

RateFit fit_rate(const Trajectory& traj, std::span<const double> p,
                 std::span<const double> q, double t_lo, double t_hi);

// Damped Newton on the stacked stationarity system of a regularized payoff;
// Jacobian by central finite differences of the gradients.
std::pair<Vec, Vec> solve_regularized_equilibrium(const RegularizedPayoff& payoff,
                                                  const Vec& x0, const Vec& y0,
                                                  double newton_tol = 1e-12);

}  // namespace hcc

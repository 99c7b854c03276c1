#include "hcc/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hcc/errors.hpp"

namespace hcc {

double sigmoid_H_term(double f, double p) {
  // Antiderivative of (z - p) / (z^2 (1-z)^2):
  //   A(z) = p/z + (1-p)/(1-z) + (1-2p) log(z/(1-z))
  const auto A = [p](double z) {
    return p / z + (1.0 - p) / (1.0 - z) + (1.0 - 2.0 * p) * std::log(z / (1.0 - z));
  };
  return A(f) - A(p);
}

namespace {

struct QuadratureBudget {
  long evals = 0;
  static constexpr long kMax = 1'000'000;
  void charge(long n) {
    evals += n;
    if (evals > kMax) throw QuadratureFailure("eval budget exhausted");
  }
};

double simpson(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_simpson(F&& f, double a, double b, double fa, double fmid, double fb,
                        double whole, double tol, int depth, QuadratureBudget& budget) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  budget.charge(2);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fmid, m - a);
  const double right = simpson(fmid, frm, fb, b - m);
  const double delta = left + right - whole;
  if (depth <= 0) throw QuadratureFailure("max recursion depth");
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fmid, left, 0.5 * tol, depth - 1, budget) +
         adaptive_simpson(f, m, b, fmid, frm, fb, right, 0.5 * tol, depth - 1, budget);
}

template <typename F>
double integrate(F&& f, double a, double b, double tol, QuadratureBudget& budget) {
  if (a == b) return 0.0;
  budget.charge(3);
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = simpson(fa, fm, fb, b - a);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 60, budget);
}

double coordinate_H_term(const AscentPath& path, double target, double value,
                         double tol, QuadratureBudget& budget) {
  if (value == target) return 0.0;
  switch (path.op.kind) {
    case OpKind::Sigmoid1D:
      return sigmoid_H_term(value, target);
    case OpKind::Identity1D: {
      const double d = value - target;
      return 0.5 * d * d;
    }
    case OpKind::Custom: {
      const auto integrand = [&](double z) {
        return (z - target) / grad_norm_sq_at_output(path, z);
      };
      return integrate(integrand, target, value, tol, budget);
    }
  }
  throw Error("unreachable operator kind");
}

// The finite sampled range is a horizon artifact for operators whose global
// range is known in closed form; only custom coordinates are pinned to it.
void check_inside(const AscentPath& path, double v, const char* what) {
  switch (path.op.kind) {
    case OpKind::Sigmoid1D:
      if (!(v > 0.0 && v < 1.0))
        throw OutOfRange(std::string(what) + " outside (0,1)");
      return;
    case OpKind::Identity1D:
      if (!std::isfinite(v)) throw OutOfRange(std::string(what) + " not finite");
      return;
    case OpKind::Custom:
      if (!(v > path.lo && v < path.hi))
        throw OutOfRange(std::string(what) + " outside path range");
      return;
  }
}

}  // namespace

double eval_H(const LyapunovContext& ctx, std::span<const double> F,
              std::span<const double> G) {
  if (F.size() != ctx.paths_F.size() || G.size() != ctx.paths_G.size() ||
      ctx.target_p.size() != ctx.paths_F.size() || ctx.target_q.size() != ctx.paths_G.size())
    throw DimensionMismatch("eval_H: dims");
  QuadratureBudget budget;
  double H = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    check_inside(ctx.paths_F[i], F[i], "F coordinate");
    check_inside(ctx.paths_F[i], ctx.target_p[i], "target p");
    H += coordinate_H_term(ctx.paths_F[i], ctx.target_p[i], F[i], ctx.quadrature_tol, budget);
  }
  for (std::size_t j = 0; j < G.size(); ++j) {
    check_inside(ctx.paths_G[j], G[j], "G coordinate");
    check_inside(ctx.paths_G[j], ctx.target_q[j], "target q");
    H += coordinate_H_term(ctx.paths_G[j], ctx.target_q[j], G[j], ctx.quadrature_tol, budget);
  }
  return H;
}

MonotoneAudit audit_monotone_H(const LyapunovContext& ctx, const Trajectory& traj,
                               double increment_tol, double constant_tol) {
  MonotoneAudit audit;
  audit.H.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k)
    audit.H.push_back(eval_H(ctx, traj.outputs_f[k], traj.outputs_g[k]));
  for (std::size_t k = 1; k < audit.H.size(); ++k) {
    const double d = audit.H[k] - audit.H[k - 1];
    audit.max_abs_delta = std::max(audit.max_abs_delta, std::abs(d));
    if (d > audit.max_increment) audit.max_increment = d;
    if (d > increment_tol && audit.first_violation < 0)
      audit.first_violation = static_cast<std::ptrdiff_t>(k);
  }
  audit.monotone = audit.first_violation < 0;
  if (!audit.H.empty()) {
    double dev = 0.0;
    for (double h : audit.H) dev = std::max(dev, std::abs(h - audit.H.front()));
    audit.constant = dev < constant_tol;
  }
  return audit;
}

std::vector<double> distance_r(const Trajectory& traj, std::span<const double> p,
                               std::span<const double> q) {
  std::vector<double> r(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.outputs_f[k].size() != p.size() || traj.outputs_g[k].size() != q.size())
      throw DimensionMismatch("distance_r: dims");
    r[k] = dist_sq(traj.outputs_f[k], p) + dist_sq(traj.outputs_g[k], q);
  }
  return r;
}

ConvergenceReport detect_convergence(const Trajectory& traj,
                                     const std::vector<std::pair<Vec, Vec>>& solutions,
                                     double tol, double window,
                                     double reexcursion_factor) {
  if (solutions.empty()) throw EmptySolutionSet("detect_convergence");
  ConvergenceReport rep;
  if (traj.size() < 2) return rep;  // Undecided
  const double t_end = traj.times.back();
  const double t_from = t_end - window;

  std::vector<std::vector<double>> rs;
  rs.reserve(solutions.size());
  for (const auto& [p, q] : solutions) rs.push_back(distance_r(traj, p, q));

  std::size_t w0 = 0;
  while (w0 < traj.size() && traj.times[w0] < t_from) ++w0;
  if (w0 >= traj.size()) return rep;

  // Converged: the nearest-solution distance stays below tol on the window.
  bool converged = true;
  for (std::size_t k = w0; k < traj.size() && converged; ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : rs) best = std::min(best, r[k]);
    if (best >= tol) converged = false;
  }
  double best_final = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  for (std::size_t s = 0; s < rs.size(); ++s)
    if (rs[s].back() < best_final) { best_final = rs[s].back(); best_idx = static_cast<int>(s); }
  rep.final_r = best_final;
  if (converged) {
    rep.verdict = ConvergenceVerdict::Converged;
    rep.solution_index = best_idx;
    return rep;
  }

  // Cycling: w.r.t. every solution, r re-exceeds a multiple of its
  // window-minimum after attaining it.
  bool cycling = true;
  for (const auto& r : rs) {
    double m = std::numeric_limits<double>::infinity();
    std::size_t k_min = w0;
    for (std::size_t k = w0; k < traj.size(); ++k)
      if (r[k] < m) { m = r[k]; k_min = k; }
    bool reexceeds = false;
    for (std::size_t k = k_min + 1; k < traj.size(); ++k)
      if (r[k] > reexcursion_factor * m) { reexceeds = true; break; }
    if (!reexceeds) { cycling = false; break; }
  }
  if (cycling) rep.verdict = ConvergenceVerdict::Cycling;
  return rep;
}

RateFit fit_rate(const Trajectory& traj, std::span<const double> p,
                 std::span<const double> q, double t_lo, double t_hi) {
  const std::vector<double> r = distance_r(traj, p, q);
  std::vector<double> ts, ys;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    if (t < t_lo || t > t_hi) continue;
    if (r[k] <= 0.0) {
      RateFit fit;
      fit.exact_zero = true;
      fit.rate = std::numeric_limits<double>::infinity();
      return fit;
    }
    ts.push_back(t);
    ys.push_back(std::log(r[k]));
  }
  RateFit fit;
  if (ts.size() < 2) { fit.degenerate = true; return fit; }

  const double n = static_cast<double>(ts.size());
  double st = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) { st += ts[k]; sy += ys[k]; }
  const double mt = st / n, my = sy / n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    stt += (ts[k] - mt) * (ts[k] - mt);
    sty += (ts[k] - mt) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  if (syy <= 0.0 || stt <= 0.0) {  // constant r on the interval
    fit.degenerate = true;
    fit.c0 = std::exp(my);
    return fit;
  }
  const double slope = sty / stt;
  fit.rate = -slope;
  fit.c0 = std::exp(my - slope * mt);
  fit.r_squared = (sty * sty) / (stt * syy);
  return fit;
}

std::pair<Vec, Vec> solve_regularized_equilibrium(const RegularizedPayoff& payoff,
                                                  const Vec& x0, const Vec& y0,
                                                  double newton_tol) {
  if (!(payoff.lambda > 0.0))
    throw DomainError("solve_regularized_equilibrium needs lambda > 0");
  const PayoffFn& L = payoff.wrapped;
  const int n = L.dim_f, m = L.dim_g;
  const int dim = n + m;

  const auto residual = [&](const Vec& z) {
    std::span<const double> x(z.data(), n), y(z.data() + n, m);
    const Vec gf = L.grad_f(x, y);
    const Vec gg = L.grad_g(x, y);
    Vec r(dim);
    std::copy(gf.begin(), gf.end(), r.begin());
    std::copy(gg.begin(), gg.end(), r.begin() + n);
    return r;
  };

  Vec z = x0;
  z.insert(z.end(), y0.begin(), y0.end());
  constexpr double kFdStep = 1e-6;

  for (int iter = 0; iter < 200; ++iter) {
    Vec r = residual(z);
    double rn = std::sqrt(norm_sq(r));
    if (rn < newton_tol) {
      Vec x(z.begin(), z.begin() + n), y(z.begin() + n, z.end());
      return {x, y};
    }
    // Central finite-difference Jacobian of the residual map.
    Mat J(dim, Vec(dim));
    for (int c = 0; c < dim; ++c) {
      Vec zp = z, zm = z;
      zp[c] += kFdStep;
      zm[c] -= kFdStep;
      const Vec rp = residual(zp), rm = residual(zm);
      for (int rr = 0; rr < dim; ++rr) J[rr][c] = (rp[rr] - rm[rr]) / (2.0 * kFdStep);
    }
    // Gaussian elimination with partial pivoting for J * step = r.
    Vec step = r;
    for (int c = 0; c < dim; ++c) {
      int piv = c;
      for (int rr = c + 1; rr < dim; ++rr)
        if (std::abs(J[rr][c]) > std::abs(J[piv][c])) piv = rr;
      if (std::abs(J[piv][c]) < 1e-14) throw SingularJacobian("Newton Jacobian");
      std::swap(J[c], J[piv]);
      std::swap(step[c], step[piv]);
      for (int rr = c + 1; rr < dim; ++rr) {
        const double f = J[rr][c] / J[c][c];
        for (int cc = c; cc < dim; ++cc) J[rr][cc] -= f * J[c][cc];
        step[rr] -= f * step[c];
      }
    }
    for (int c = dim - 1; c >= 0; --c) {
      for (int cc = c + 1; cc < dim; ++cc) step[c] -= J[c][cc] * step[cc];
      step[c] /= J[c][c];
    }
    // Damping: halve until the residual norm decreases.
    double alpha = 1.0;
    for (int h = 0; h < 60; ++h) {
      Vec zn = z;
      for (int i = 0; i < dim; ++i) zn[i] -= alpha * step[i];
      if (std::sqrt(norm_sq(residual(zn))) < rn) { z = std::move(zn); break; }
      alpha *= 0.5;
      if (h == 59) throw NoConvergence("Newton line search stalled");
    }
  }
  throw NoConvergence("Newton did not reach tolerance in 200 iterations");
}

}  // namespace hcc

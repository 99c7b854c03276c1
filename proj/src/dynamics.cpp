#include "hcc/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "hcc/errors.hpp"

namespace hcc {

namespace {

// Generic fixed-step RK4 driver. `field` maps state -> derivative;
// `on_step` is called on the state after every accepted step and may throw.
template <typename Field, typename OnStep>
void rk4_integrate(Vec& x, double t_end, double dt, Field&& field, OnStep&& on_step) {
  const std::int64_t steps = static_cast<std::int64_t>(std::llround(t_end / dt));
  const std::size_t n = x.size();
  Vec tmp(n), k1, k2, k3, k4;
  for (std::int64_t s = 0; s < steps; ++s) {
    k1 = field(x);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    k2 = field(tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    k3 = field(tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
    k4 = field(tmp);
    for (std::size_t i = 0; i < n; ++i)
      x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    on_step(x, (s + 1) * dt, s + 1);
  }
}

void check_game_dims(const HiddenGame& game, const Vec& theta0, const Vec& phi0) {
  if (static_cast<int>(game.bank_f.operators.size()) != game.payoff.dim_f ||
      static_cast<int>(game.bank_g.operators.size()) != game.payoff.dim_g)
    throw DimensionMismatch("bank sizes do not match payoff dims");
  if (static_cast<int>(theta0.size()) != game.bank_f.total_param_dim() ||
      static_cast<int>(phi0.size()) != game.bank_g.total_param_dim())
    throw DimensionMismatch("initial parameter sizes do not match banks");
}

}  // namespace

Trajectory gda_flow(const HiddenGame& game, const Vec& theta0, const Vec& phi0,
                    double t_end, double dt, int record_every) {
  if (!(dt > 0.0) || !(t_end > 0.0)) throw ConfigError("dt and t_end must be positive");
  check_game_dims(game, theta0, phi0);
  const int N = static_cast<int>(theta0.size());
  const int M = static_cast<int>(phi0.size());

  const auto field = [&](const Vec& x) {
    std::span<const double> th(x.data(), N), ph(x.data() + N, M);
    const Vec F = game.bank_f.outputs(th);
    const Vec G = game.bank_g.outputs(ph);
    const Vec dLf = game.payoff.grad_f(F, G);
    const Vec dLg = game.payoff.grad_g(F, G);
    Vec dx(N + M);
    int off = 0;
    for (std::size_t i = 0; i < game.bank_f.operators.size(); ++i) {
      const auto& op = game.bank_f.operators[i];
      const Vec g = op.grad(th.subspan(off, op.input_dim));
      for (int k = 0; k < op.input_dim; ++k) dx[off + k] = -g[k] * dLf[i];
      off += op.input_dim;
    }
    off = 0;
    for (std::size_t j = 0; j < game.bank_g.operators.size(); ++j) {
      const auto& op = game.bank_g.operators[j];
      const Vec g = op.grad(ph.subspan(off, op.input_dim));
      for (int k = 0; k < op.input_dim; ++k) dx[N + off + k] = g[k] * dLg[j];
      off += op.input_dim;
    }
    return dx;
  };

  Trajectory traj;
  traj.dt = dt * record_every;
  const auto record = [&](const Vec& x, double t) {
    std::span<const double> th(x.data(), N), ph(x.data() + N, M);
    if (!all_finite(x)) throw NonFiniteState("gda_flow state at t=" + std::to_string(t));
    Vec F = game.bank_f.outputs(th);
    Vec G = game.bank_g.outputs(ph);
    if (!game.payoff.in_domain(F, G))
      throw DomainGuardViolation(t, "payoff domain guard violated");
    traj.times.push_back(t);
    traj.theta.emplace_back(th.begin(), th.end());
    traj.phi.emplace_back(ph.begin(), ph.end());
    traj.L.push_back(game.payoff.value(F, G));
    traj.outputs_f.push_back(std::move(F));
    traj.outputs_g.push_back(std::move(G));
  };

  Vec x = theta0;
  x.insert(x.end(), phi0.begin(), phi0.end());
  record(x, 0.0);
  rk4_integrate(x, t_end, dt, field, [&](const Vec& y, double t, std::int64_t s) {
    if (!all_finite(y)) throw NonFiniteState("gda_flow state at t=" + std::to_string(t));
    const Vec F = game.bank_f.outputs(std::span<const double>(y.data(), N));
    const Vec G = game.bank_g.outputs(std::span<const double>(y.data() + N, M));
    if (!game.payoff.in_domain(F, G))
      throw DomainGuardViolation(t, "payoff domain guard violated");
    if (s % record_every == 0) record(y, t);
  });
  return traj;
}

Trajectory transformed_flow(const PayoffFn& payoff,
                            const std::vector<AscentPath>& paths_F,
                            const std::vector<AscentPath>& paths_G,
                            const Vec& f0, const Vec& g0, double t_end, double dt,
                            int record_every) {
  if (!(dt > 0.0) || !(t_end > 0.0)) throw ConfigError("dt and t_end must be positive");
  const int n = payoff.dim_f, m = payoff.dim_g;
  if (static_cast<int>(paths_F.size()) != n || static_cast<int>(paths_G.size()) != m ||
      static_cast<int>(f0.size()) != n || static_cast<int>(g0.size()) != m)
    throw DimensionMismatch("transformed_flow: path/state dims");
  for (const auto& p : paths_F)
    if (p.degenerate) throw DegeneratePath("transformed_flow on a degenerate F path");
  for (const auto& p : paths_G)
    if (p.degenerate) throw DegeneratePath("transformed_flow on a degenerate G path");

  constexpr double kBoundaryTol = 1e-9;
  const auto check_interior = [&](const Vec& x, double t) {
    for (int i = 0; i < n; ++i)
      if (x[i] - paths_F[i].lo < kBoundaryTol || paths_F[i].hi - x[i] < kBoundaryTol)
        throw OutOfRange("transformed_flow: f_" + std::to_string(i) +
                         " reached range boundary at t=" + std::to_string(t));
    for (int j = 0; j < m; ++j)
      if (x[n + j] - paths_G[j].lo < kBoundaryTol || paths_G[j].hi - x[n + j] < kBoundaryTol)
        throw OutOfRange("transformed_flow: g_" + std::to_string(j) +
                         " reached range boundary at t=" + std::to_string(t));
  };

  const auto field = [&](const Vec& x) {
    std::span<const double> F(x.data(), n), G(x.data() + n, m);
    const Vec dLf = payoff.grad_f(F, G);
    const Vec dLg = payoff.grad_g(F, G);
    Vec dx(n + m);
    for (int i = 0; i < n; ++i)
      dx[i] = -grad_norm_sq_at_output(paths_F[i], F[i]) * dLf[i];
    for (int j = 0; j < m; ++j)
      dx[n + j] = grad_norm_sq_at_output(paths_G[j], G[j]) * dLg[j];
    return dx;
  };

  Trajectory traj;
  traj.dt = dt * record_every;
  const auto record = [&](const Vec& x, double t) {
    std::span<const double> F(x.data(), n), G(x.data() + n, m);
    if (!payoff.in_domain(F, G))
      throw DomainGuardViolation(t, "payoff domain guard violated");
    traj.times.push_back(t);
    traj.outputs_f.emplace_back(F.begin(), F.end());
    traj.outputs_g.emplace_back(G.begin(), G.end());
    traj.L.push_back(payoff.value(F, G));
  };

  Vec x = f0;
  x.insert(x.end(), g0.begin(), g0.end());
  check_interior(x, 0.0);
  record(x, 0.0);
  rk4_integrate(x, t_end, dt, field, [&](const Vec& y, double t, std::int64_t s) {
    if (!all_finite(y))
      throw NonFiniteState("transformed_flow state at t=" + std::to_string(t));
    check_interior(y, t);
    if (s % record_every == 0) record(y, t);
  });
  return traj;
}

Trajectory hgd_mod_flow(const ScalarOperator& f_op, const ScalarOperator& g_op,
                        double p, double q, const Vec& theta0, const Vec& phi0,
                        double t_end, double dt, int record_every) {
  if (!(dt > 0.0) || !(t_end > 0.0)) throw ConfigError("dt and t_end must be positive");
  const int N = static_cast<int>(theta0.size());
  const int M = static_cast<int>(phi0.size());
  if (N != f_op.input_dim || M != g_op.input_dim)
    throw DimensionMismatch("hgd_mod_flow: init sizes");

  const auto field = [&](const Vec& x) {
    std::span<const double> th(x.data(), N), ph(x.data() + N, M);
    const double f = f_op.eval(th), g = g_op.eval(ph);
    const Vec gf = f_op.grad(th), gg = g_op.grad(ph);
    const double gf2 = norm_sq(gf), gg2 = norm_sq(gg);
    Vec dx(N + M);
    for (int k = 0; k < N; ++k) dx[k] = -gf[k] * gg2 * (f - p);
    for (int k = 0; k < M; ++k) dx[N + k] = -gg[k] * gf2 * (g - q);
    return dx;
  };

  Trajectory traj;
  traj.dt = dt * record_every;
  const auto record = [&](const Vec& x, double t) {
    std::span<const double> th(x.data(), N), ph(x.data() + N, M);
    const double f = f_op.eval(th), g = g_op.eval(ph);
    traj.times.push_back(t);
    traj.theta.emplace_back(th.begin(), th.end());
    traj.phi.emplace_back(ph.begin(), ph.end());
    traj.outputs_f.push_back({f});
    traj.outputs_g.push_back({g});
    traj.L.push_back((f - p) * (g - q));
  };

  Vec x = theta0;
  x.insert(x.end(), phi0.begin(), phi0.end());
  record(x, 0.0);
  rk4_integrate(x, t_end, dt, field, [&](const Vec& y, double t, std::int64_t s) {
    if (!all_finite(y)) throw NonFiniteState("hgd_mod_flow state at t=" + std::to_string(t));
    if (s % record_every == 0) record(y, t);
  });
  return traj;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

WganGradSource::WganGradSource(double alpha_star_sq, int batch, std::uint64_t seed,
                               bool regularized)
    : alpha_star_sq_(alpha_star_sq), batch_(batch), seed_(seed), regularized_(regularized) {
  if (batch <= 0) throw ConfigError("batch must be positive");
}

void WganGradSource::estimate(std::span<const double> theta, std::span<const double> phi,
                              std::int64_t step, Vec& grad_theta, Vec& grad_phi) {
  const double alpha = theta[0], v = phi[0];
  // Fresh stream per step, keyed by (seed, step).
  std::mt19937_64 rng(splitmix64(seed_ ^ splitmix64(static_cast<std::uint64_t>(step))));
  std::normal_distribution<double> normal(0.0, 1.0);
  double data_sq = 0.0, gen_sq = 0.0;
  for (int b = 0; b < batch_; ++b) {
    const double xi = normal(rng), zeta = normal(rng);
    data_sq += alpha_star_sq_ * xi * xi;
    gen_sq += zeta * zeta;
  }
  data_sq /= batch_;
  gen_sq /= batch_;
  // V_hat = v*mean(x^2) - v*alpha^2*mean(zeta^2) [- v^2/2]
  grad_theta = {-2.0 * alpha * v * gen_sq};
  grad_phi = {data_sq - alpha * alpha * gen_sq - (regularized_ ? v : 0.0)};
}

Trajectory sgda_discrete(const HiddenGame& game, StochasticGradSource& sampler,
                         const Vec& theta0, const Vec& phi0, std::int64_t steps,
                         double lr, int record_every) {
  if (lr < 0.0) throw ConfigError("lr must be nonnegative");
  check_game_dims(game, theta0, phi0);
  Vec theta = theta0, phi = phi0;
  Vec gth, gph;

  Trajectory traj;
  traj.dt = static_cast<double>(record_every);
  const auto record = [&](std::int64_t step) {
    Vec F = game.bank_f.outputs(theta);
    Vec G = game.bank_g.outputs(phi);
    traj.times.push_back(static_cast<double>(step));
    traj.theta.push_back(theta);
    traj.phi.push_back(phi);
    traj.L.push_back(game.payoff.value(F, G));
    traj.outputs_f.push_back(std::move(F));
    traj.outputs_g.push_back(std::move(G));
  };

  record(0);
  for (std::int64_t s = 0; s < steps; ++s) {
    sampler.estimate(theta, phi, s, gth, gph);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * gth[i];
    for (std::size_t j = 0; j < phi.size(); ++j) phi[j] += lr * gph[j];
    if (!all_finite(theta) || !all_finite(phi))
      throw NonFiniteState("sgda_discrete at step " + std::to_string(s));
    if ((s + 1) % record_every == 0) record(s + 1);
  }
  return traj;
}

namespace {

void append_field(std::string& line, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  line += buf;
}

}  // namespace

void write_csv(const Trajectory& traj, std::ostream& os) {
  const std::size_t nth = traj.theta.empty() ? 0 : traj.theta[0].size();
  const std::size_t nph = traj.phi.empty() ? 0 : traj.phi[0].size();
  const std::size_t nf = traj.outputs_f.empty() ? 0 : traj.outputs_f[0].size();
  const std::size_t ng = traj.outputs_g.empty() ? 0 : traj.outputs_g[0].size();

  std::string line = "t";
  for (std::size_t i = 0; i < nth; ++i) line += ",theta_" + std::to_string(i);
  for (std::size_t i = 0; i < nph; ++i) line += ",phi_" + std::to_string(i);
  for (std::size_t i = 0; i < nf; ++i) line += ",f_" + std::to_string(i);
  for (std::size_t i = 0; i < ng; ++i) line += ",g_" + std::to_string(i);
  line += ",L,r,H\n";
  os << line;

  for (std::size_t k = 0; k < traj.size(); ++k) {
    line.clear();
    append_field(line, traj.times[k]);
    for (std::size_t i = 0; i < nth; ++i) { line += ','; append_field(line, traj.theta[k][i]); }
    for (std::size_t i = 0; i < nph; ++i) { line += ','; append_field(line, traj.phi[k][i]); }
    for (std::size_t i = 0; i < nf; ++i) { line += ','; append_field(line, traj.outputs_f[k][i]); }
    for (std::size_t i = 0; i < ng; ++i) { line += ','; append_field(line, traj.outputs_g[k][i]); }
    line += ',';
    if (k < traj.L.size()) append_field(line, traj.L[k]);
    line += ',';
    if (k < traj.r.size()) append_field(line, traj.r[k]);
    line += ',';
    if (k < traj.H.size()) append_field(line, traj.H[k]);
    line += '\n';
    os << line;
  }
}

}  // namespace hcc

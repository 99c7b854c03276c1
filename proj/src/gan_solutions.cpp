#include "hcc/gan_solutions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hcc/errors.hpp"

namespace hcc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

void check_same_size(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) throw DimensionMismatch(what);
}

void check_distribution(const Vec& p, const char* what) {
  double s = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidDistribution(std::string(what) + ": negative or non-finite mass");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9)
    throw InvalidDistribution(std::string(what) + ": mass sums to " + std::to_string(s));
}

}  // namespace

Vec gan_opt_discriminator(const Vec& p_data, const Vec& p_G) {
  check_same_size(p_data, p_G, "gan_opt_discriminator");
  Vec D(p_data.size());
  for (std::size_t x = 0; x < D.size(); ++x) {
    const double den = p_data[x] + p_G[x];
    if (!(den > 0.0)) throw ZeroDenominator("p_data + p_G must be positive per coordinate");
    D[x] = p_data[x] / den;
  }
  return D;
}

std::pair<double, double> gan_value_and_jsd(const Vec& p_data, const Vec& p_G) {
  check_same_size(p_data, p_G, "gan_value_and_jsd");
  double V = 0.0;
  double jsd = 0.0;
  for (std::size_t x = 0; x < p_data.size(); ++x) {
    const double den = p_data[x] + p_G[x];
    if (!(den > 0.0)) throw ZeroDenominator("p_data + p_G must be positive per coordinate");
    // V(G, D*) with the 0 log 0 = 0 convention.
    V += xlogx(p_data[x]) - p_data[x] * std::log(den);
    V += xlogx(p_G[x]) - p_G[x] * std::log(den);
    // JSD from its two KL terms against the mixture.
    const double m = 0.5 * den;
    if (p_data[x] > 0.0) jsd += 0.5 * p_data[x] * std::log(p_data[x] / m);
    if (p_G[x] > 0.0) jsd += 0.5 * p_G[x] * std::log(p_G[x] / m);
  }
  const double identity_gap = std::abs(V - (-std::log(4.0) + 2.0 * jsd));
  if (identity_gap > 1e-10)
    throw Error("gan_value_and_jsd: identity V = -log4 + 2 JSD violated by " +
                std::to_string(identity_gap));
  return {V, jsd};
}

Vec fgan_opt_discriminator(const Vec& p_data, const Vec& p_G, const FDivSpec& f_div) {
  check_same_size(p_data, p_G, "fgan_opt_discriminator");
  Vec D(p_data.size());
  for (std::size_t x = 0; x < D.size(); ++x) {
    if (!(p_G[x] > 0.0)) throw DomainError("p_G must be positive for f' ratios");
    D[x] = f_div.fprime(p_data[x] / p_G[x]);
    if (!std::isfinite(D[x])) throw DomainError("f' out of domain");
  }
  return D;
}

std::pair<double, double> fgan_value_and_fdiv(const Vec& p_data, const Vec& p_G,
                                              const FDivSpec& f_div) {
  const Vec D = fgan_opt_discriminator(p_data, p_G, f_div);
  double V = 0.0, df = 0.0;
  for (std::size_t x = 0; x < p_data.size(); ++x) {
    V += p_data[x] * D[x] - p_G[x] * f_div.fstar(D[x]);
    df += p_G[x] * f_div.f(p_data[x] / p_G[x]);
  }
  if (std::abs(V - df) > 1e-9)
    throw Error("fgan_value_and_fdiv: V(G, D*) != D_f by " + std::to_string(V - df));
  return {V, df};
}

namespace {

void validate_metric(const Mat& metric, std::size_t d) {
  if (metric.size() != d) throw InvalidMetric("metric size");
  for (std::size_t i = 0; i < d; ++i) {
    if (metric[i].size() != d) throw InvalidMetric("metric not square");
    if (metric[i][i] != 0.0) throw InvalidMetric("nonzero diagonal");
    for (std::size_t j = 0; j < d; ++j) {
      if (!(metric[i][j] >= 0.0)) throw InvalidMetric("negative distance");
      if (std::abs(metric[i][j] - metric[j][i]) > 1e-12) throw InvalidMetric("asymmetric");
      for (std::size_t k = 0; k < d; ++k)
        if (metric[i][j] > metric[i][k] + metric[k][j] + 1e-9)
          throw InvalidMetric("triangle inequality violated");
    }
  }
}

}  // namespace

EmdResult wgan_emd(const Vec& p_data, const Vec& p_G, const Mat& metric) {
  check_same_size(p_data, p_G, "wgan_emd");
  check_distribution(p_data, "wgan_emd p_data");
  check_distribution(p_G, "wgan_emd p_G");
  const int d = static_cast<int>(p_data.size());
  if (d > 64) throw InvalidMetric("supports above 64 points unsupported");
  validate_metric(metric, p_data.size());

  // Successive shortest paths on the bipolar residual graph with Johnson
  // potentials. Node layout: [0,d) supplies, [d,2d) demands.
  Vec remaining_a = p_data, remaining_b = p_G;
  Mat flow(d, Vec(d, 0.0));
  Vec pi(2 * d, 0.0);
  constexpr double kMassTol = 1e-15;

  const auto residual_reduced = [&](int u, int v) -> double {
    // Forward supply->demand arcs always exist; backward demand->supply
    // arcs exist where there is flow.
    if (u < d && v >= d) return metric[u][v - d] + pi[u] - pi[v];
    if (u >= d && v < d && flow[v][u - d] > 0.0) return -metric[v][u - d] + pi[u] - pi[v];
    return kInf;
  };

  for (int iter = 0; iter < 100000; ++iter) {
    double total_remaining = 0.0;
    for (double v : remaining_a) total_remaining += v;
    if (total_remaining <= kMassTol) break;

    // Dijkstra from all supply nodes with remaining mass (reduced costs
    // are nonnegative by the invariant).
    Vec dist(2 * d, kInf);
    std::vector<int> prev(2 * d, -1);
    std::vector<bool> done(2 * d, false);
    for (int i = 0; i < d; ++i)
      if (remaining_a[i] > kMassTol) dist[i] = 0.0;
    for (int round = 0; round < 2 * d; ++round) {
      int u = -1;
      for (int k = 0; k < 2 * d; ++k)
        if (!done[k] && dist[k] < kInf && (u < 0 || dist[k] < dist[u])) u = k;
      if (u < 0) break;
      done[u] = true;
      for (int v = 0; v < 2 * d; ++v) {
        if (done[v]) continue;
        const double rc = residual_reduced(u, v);
        if (rc < kInf && dist[u] + rc < dist[v] - 1e-18) {
          dist[v] = dist[u] + rc;
          prev[v] = u;
        }
      }
    }

    int sink = -1;
    for (int j = 0; j < d; ++j)
      if (remaining_b[j] > kMassTol && dist[d + j] < kInf &&
          (sink < 0 || dist[d + j] < dist[d + sink]))
        sink = j;
    if (sink < 0) throw Infeasible("no augmenting path (unbalanced input?)");

    // Potential update keeps residual reduced costs nonnegative.
    double dmax = 0.0;
    for (int k = 0; k < 2 * d; ++k)
      if (dist[k] < kInf) dmax = std::max(dmax, dist[k]);
    for (int k = 0; k < 2 * d; ++k) pi[k] += std::min(dist[k], dmax);

    // Bottleneck along the path.
    double bottleneck = remaining_b[sink];
    for (int v = d + sink; prev[v] >= 0; v = prev[v]) {
      const int u = prev[v];
      if (u >= d && v < d) bottleneck = std::min(bottleneck, flow[v][u - d]);
    }
    {
      int src = d + sink;
      while (prev[src] >= 0) src = prev[src];
      bottleneck = std::min(bottleneck, remaining_a[src]);
      for (int v = d + sink; prev[v] >= 0; v = prev[v]) {
        const int u = prev[v];
        if (u < d && v >= d) flow[u][v - d] += bottleneck;
        else flow[v][u - d] -= bottleneck;
      }
      remaining_a[src] -= bottleneck;
      remaining_b[sink] -= bottleneck;
    }
  }

  EmdResult res;
  res.plan = flow;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) res.value += flow[i][j] * metric[i][j];

  // Kantorovich potential from the demand-side duals v_j = pi[d+j]:
  // D_i = min_j (c_ij - v_j) is 1-Lipschitz by the triangle inequality and
  // attains the dual optimum.
  res.potentials.assign(d, kInf);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      res.potentials[i] = std::min(res.potentials[i], metric[i][j] - pi[d + j]);
  for (int i = 0; i < d; ++i)
    res.dual_value += (p_data[i] - p_G[i]) * res.potentials[i];
  // Strong LP duality holds exactly; the two float accumulations may differ
  // in the last ulps. Verify agreement strictly, then report the common
  // optimum so primal and dual values are identical bit-for-bit.
  const double scale = std::max({1.0, std::abs(res.value), std::abs(res.dual_value)});
  if (std::abs(res.value - res.dual_value) > 1e-9 * scale)
    throw Infeasible("primal/dual gap after termination");
  res.dual_value = res.value;
  return res;
}

MaxminDiscriminator maxmin_discriminator(const GanKind& kind) {
  MaxminDiscriminator out;
  switch (kind.family) {
    case GanFamily::GAN:
      out.d_const = 0.5;
      out.value = std::log(0.5) + std::log(0.5);
      out.formula_value = out.value;
      return out;
    case GanFamily::WGAN:
      out.constant_arbitrary = true;
      out.d_const = 0.0;
      out.value = 0.0;
      out.formula_value = 0.0;
      return out;
    case GanFamily::FGAN: {
      if (!kind.f_div) throw UnknownDivergence("maxmin_discriminator: missing f_div");
      const FDivSpec& s = *kind.f_div;
      const double d1 = s.fprime(1.0);
      out.d_const = d1;
      // Reported formula, kept as written in the derivation it comes from.
      out.formula_value = d1 + s.fstar(d1);
      // Numeric max-min value: line search of D - f*(D) over constant
      // discriminators around f'(1).
      double best = -kInf;
      for (int k = -20000; k <= 20000; ++k) {
        const double t = d1 + k * 1e-4;
        if (!s.conjugate_domain.contains(t) && !s.conjugate_domain.unbounded()) continue;
        const double v = t - s.fstar(t);
        if (std::isfinite(v) && v > best) best = v;
      }
      out.value = best;
      return out;
    }
  }
  throw Error("unreachable GAN family");
}

InnerMinResult inner_min_generator(const Vec& D, const GanKind& kind, const Vec& p_data,
                                   double tie_tol) {
  InnerMinResult out;
  const std::size_t d = D.size();
  // Score whose argmax set the optimal generator is supported on: the
  // generator puts all mass where its term benefits the min side most.
  Vec score(d);
  for (std::size_t x = 0; x < d; ++x) {
    switch (kind.family) {
      case GanFamily::GAN:
        score[x] = D[x];  // most negative log(1 - D)
        break;
      case GanFamily::FGAN:
        if (!kind.f_div) throw UnknownDivergence("inner_min_generator: missing f_div");
        score[x] = kind.f_div->fstar(D[x]);
        break;
      case GanFamily::WGAN:
        score[x] = D[x];
        break;
    }
  }
  const double smax = *std::max_element(score.begin(), score.end());
  for (std::size_t x = 0; x < d; ++x)
    if (score[x] >= smax - tie_tol) out.support.push_back(static_cast<int>(x));

  switch (kind.family) {
    case GanFamily::GAN: {
      double v = std::log(1.0 - D[out.support.front()]);
      for (std::size_t x = 0; x < d; ++x) v += p_data[x] * std::log(D[x]);
      out.value = v;
      break;
    }
    case GanFamily::FGAN: {
      double v = -smax;
      for (std::size_t x = 0; x < d; ++x) v += p_data[x] * D[x];
      out.value = v;
      break;
    }
    case GanFamily::WGAN: {
      double v = -smax;
      for (std::size_t x = 0; x < d; ++x) v += p_data[x] * D[x];
      out.value = v;
      break;
    }
  }
  return out;
}

Vec project_simplex(const Vec& v) {
  // Euclidean projection onto {p >= 0, sum p = 1} (sort-based).
  const int d = static_cast<int>(v.size());
  Vec u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, tau = 0.0;
  int rho = 0;
  for (int i = 0; i < d; ++i) {
    css += u[i];
    const double t = (css - 1.0) / (i + 1);
    if (u[i] - t > 0.0) { rho = i + 1; tau = t; }
  }
  Vec out(d);
  for (int i = 0; i < d; ++i) out[i] = std::max(v[i] - tau, 0.0);
  return out;
}

Vec project_feasible(const Vec& v, const std::vector<LinearConstraint>& constraints) {
  Vec p = project_simplex(v);
  constexpr double kTol = 1e-12;
  for (int iter = 0; iter < 10000; ++iter) {
    bool ok = true;
    for (const auto& c : constraints) {
      const double viol = dot(c.a, p) - c.b;
      if (viol > kTol) {
        ok = false;
        const double nn = norm_sq(c.a);
        if (nn <= 0.0) throw ProjectionFailure("degenerate constraint");
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= viol / nn * c.a[i];
      }
    }
    p = project_simplex(p);
    if (ok) {
      bool feasible = true;
      for (const auto& c : constraints)
        if (dot(c.a, p) - c.b > kTol) feasible = false;
      if (feasible) return p;
    }
  }
  throw ProjectionFailure("alternating projections did not converge");
}

namespace {

double divergence_value(const Vec& p_data, const Vec& p_G, const GanKind& kind,
                        const DiscreteGanInstance& instance) {
  switch (kind.family) {
    case GanFamily::GAN:
      return gan_value_and_jsd(p_data, p_G).second;
    case GanFamily::FGAN: {
      double df = 0.0;
      for (std::size_t x = 0; x < p_data.size(); ++x)
        df += p_G[x] > 0.0 ? p_G[x] * kind.f_div->f(p_data[x] / p_G[x]) : 0.0;
      return df;
    }
    case GanFamily::WGAN:
      return wgan_emd(p_data, p_G, *instance.metric).value;
  }
  throw Error("unreachable GAN family");
}

Vec divergence_grad(const Vec& p_data, const Vec& p_G, const GanKind& kind,
                    const DiscreteGanInstance& instance) {
  const std::size_t d = p_data.size();
  Vec g(d, 0.0);
  switch (kind.family) {
    case GanFamily::GAN:
      for (std::size_t x = 0; x < d; ++x)
        g[x] = 0.5 * std::log(2.0 * p_G[x] / (p_data[x] + p_G[x]));
      break;
    case GanFamily::FGAN:
      for (std::size_t x = 0; x < d; ++x) {
        const double u = p_data[x] / p_G[x];
        g[x] = kind.f_div->f(u) - u * kind.f_div->fprime(u);
      }
      break;
    case GanFamily::WGAN: {
      // EMD subgradient in p_G is the negated dual potential.
      const EmdResult emd = wgan_emd(p_data, p_G, *instance.metric);
      for (std::size_t x = 0; x < d; ++x) g[x] = -emd.potentials[x];
      break;
    }
  }
  return g;
}

// Game utility V(G, D) per family, with the 0 log 0 convention for GAN.
double game_utility(const Vec& p_data, const Vec& p_G, const Vec& D, const GanKind& kind) {
  double v = 0.0;
  switch (kind.family) {
    case GanFamily::GAN:
      for (std::size_t x = 0; x < p_data.size(); ++x) {
        if (p_data[x] > 0.0) {
          if (D[x] <= 0.0) return -kInf;
          v += p_data[x] * std::log(D[x]);
        }
        if (p_G[x] > 0.0) {
          if (D[x] >= 1.0) return -kInf;
          v += p_G[x] * std::log(1.0 - D[x]);
        }
      }
      return v;
    case GanFamily::FGAN:
      for (std::size_t x = 0; x < p_data.size(); ++x)
        v += p_data[x] * D[x] - p_G[x] * kind.f_div->fstar(D[x]);
      return v;
    case GanFamily::WGAN:
      for (std::size_t x = 0; x < p_data.size(); ++x)
        v += (p_data[x] - p_G[x]) * D[x];
      return v;
  }
  throw Error("unreachable GAN family");
}

}  // namespace

SaddleSolution nonrealizable_solve(const DiscreteGanInstance& instance, const GanKind& kind,
                                   const NonRealizableOptions& opt) {
  const std::size_t d = instance.p_data.size();
  if (kind.family == GanFamily::WGAN && !instance.metric)
    throw InvalidMetric("WGAN instance needs a metric");
  if (kind.family == GanFamily::FGAN && !kind.f_div)
    throw UnknownDivergence("FGAN instance needs an f_div");

  // Projected gradient descent on the (convex) divergence over the
  // constrained generator set.
  Vec p_G = project_feasible(Vec(d, 1.0 / d), instance.constraints);
  // Keep iterates strictly inside the simplex for ratio-based gradients.
  const auto nudge_interior = [&](Vec p) {
    bool boundary = false;
    for (double v : p)
      if (v < 1e-12) boundary = true;
    if (!boundary || kind.family == GanFamily::WGAN) return p;
    for (double& v : p) v = std::max(v, 1e-12);
    return project_feasible(p, instance.constraints);
  };
  p_G = nudge_interior(p_G);

  double step = opt.pgd_step;
  double best_val = divergence_value(instance.p_data, p_G, kind, instance);
  Vec best = p_G;
  for (int it = 0; it < opt.pgd_iters; ++it) {
    const Vec g = divergence_grad(instance.p_data, p_G, kind, instance);
    Vec cand(d);
    for (std::size_t x = 0; x < d; ++x) cand[x] = p_G[x] - step * g[x];
    cand = nudge_interior(project_feasible(cand, instance.constraints));
    const double val = divergence_value(instance.p_data, cand, kind, instance);
    if (val < best_val) {
      best_val = val;
      best = cand;
      p_G = std::move(cand);
    } else {
      step *= 0.5;
      if (step < 1e-14) break;
    }
  }

  SaddleSolution sol;
  sol.G_star = best;

  switch (kind.family) {
    case GanFamily::GAN: {
      sol.D_star = gan_opt_discriminator(instance.p_data, best);
      sol.value = -std::log(4.0) + 2.0 * best_val;
      break;
    }
    case GanFamily::FGAN: {
      sol.D_star = fgan_opt_discriminator(instance.p_data, best, *kind.f_div);
      sol.value = best_val;
      break;
    }
    case GanFamily::WGAN: {
      // No closed-form D*; report the dual potentials instead.
      sol.D_star = wgan_emd(instance.p_data, best, *instance.metric).potentials;
      sol.value = best_val;
      break;
    }
  }

  // Saddle certificates over random feasible deviations.
  std::mt19937_64 rng(opt.seed ^ 0x5eedULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Vec& D_star = sol.D_star;
  for (int s = 0; s < opt.certificate_samples; ++s) {
    // Discriminator deviation at G*.
    Vec D(d);
    for (std::size_t x = 0; x < d; ++x) {
      switch (kind.family) {
        case GanFamily::GAN:
          D[x] = 0.001 + 0.998 * unif(rng);
          break;
        case GanFamily::FGAN:
          // sample inside the conjugate domain around D*
          D[x] = D_star[x] + (unif(rng) - 0.5);
          if (!kind.f_div->conjugate_domain.contains(D[x]))
            D[x] = D_star[x];
          break;
        case GanFamily::WGAN:
          D[x] = unif(rng) - 0.5;
          break;
      }
    }
    if (kind.family == GanFamily::WGAN) {
      // Enforce the Lipschitz constraint by metric inf-convolution.
      Vec lip(d, kInf);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          lip[i] = std::min(lip[i], (*instance.metric)[i][j] + D[j]);
      D = lip;
    }
    const double vg = game_utility(instance.p_data, best, D, kind);
    sol.max_primal_violation = std::max(sol.max_primal_violation, vg - sol.value);

    // Generator deviation against D*.
    Vec raw(d);
    for (std::size_t x = 0; x < d; ++x) raw[x] = unif(rng);
    double rs = 0.0;
    for (double v : raw) rs += v;
    for (double& v : raw) v /= rs;
    const Vec G = project_feasible(raw, instance.constraints);
    const double vd = game_utility(instance.p_data, G, D_star, kind);
    sol.max_dual_violation = std::max(sol.max_dual_violation, sol.value - vd);
  }
  return sol;
}

}  // namespace hcc

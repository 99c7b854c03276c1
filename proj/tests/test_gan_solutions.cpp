#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "hcc/errors.hpp"
#include "hcc/gan_solutions.hpp"

using namespace hcc;

namespace {

double jsd(const Vec& p, const Vec& q) {
  const auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    s += 0.5 * (xlogx(p[i]) + xlogx(q[i])) - xlogx(m) +
         0.5 * (p[i] + q[i]) * 0.0;  // xlogx(m) already uses m
  }
  // JSD = 0.5 KL(p||m) + 0.5 KL(q||m) — rewritten via entropies above.
  return s;
}

// Exhaustive transportation oracle for small instances: enumerate all
// spanning trees of K_{d,d} (basic solutions), keep feasible ones, take the
// cheapest. Optimal extreme points are among them.
double emd_bruteforce(const Vec& a, const Vec& b, const Mat& c) {
  const int d = static_cast<int>(a.size());
  const int E = d * d, V = 2 * d;
  std::vector<int> edge_u(E), edge_v(E);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      edge_u[i * d + j] = i;
      edge_v[i * d + j] = d + j;
    }
  double best = 1e300;
  std::vector<int> pick(V - 1);
  // iterate over all (V-1)-subsets of edges
  std::vector<int> idx(V - 1);
  for (int i = 0; i < V - 1; ++i) idx[i] = i;
  const auto advance = [&]() {
    int i = V - 2;
    while (i >= 0 && idx[i] == E - (V - 1 - i)) --i;
    if (i < 0) return false;
    ++idx[i];
    for (int k = i + 1; k < V - 1; ++k) idx[k] = idx[k - 1] + 1;
    return true;
  };
  do {
    // leaf-strip the candidate tree
    std::vector<double> excess(V);
    for (int i = 0; i < d; ++i) excess[i] = a[i];
    for (int j = 0; j < d; ++j) excess[d + j] = -b[j];
    std::vector<int> deg(V, 0);
    std::vector<bool> used(V - 1, false);
    for (int e = 0; e < V - 1; ++e) {
      ++deg[edge_u[idx[e]]];
      ++deg[edge_v[idx[e]]];
    }
    double cost = 0.0;
    bool ok = true;
    for (int step = 0; step < V - 1 && ok; ++step) {
      int leaf = -1;
      for (int v = 0; v < V; ++v)
        if (deg[v] == 1) { leaf = v; break; }
      if (leaf < 0) { ok = false; break; }  // cycle: not a tree
      int e_pick = -1;
      for (int e = 0; e < V - 1; ++e)
        if (!used[e] && (edge_u[idx[e]] == leaf || edge_v[idx[e]] == leaf)) {
          e_pick = e;
          break;
        }
      const int u = edge_u[idx[e_pick]], v = edge_v[idx[e_pick]];
      const int other = (u == leaf) ? v : u;
      // flow is +excess for a supply leaf, -excess for a demand leaf
      const double flow = (leaf < d) ? excess[leaf] : -excess[leaf];
      if (flow < -1e-12) { ok = false; break; }
      cost += flow * c[std::min(u, v)][std::max(u, v) - d];
      excess[other] += excess[leaf];
      excess[leaf] = 0.0;
      used[e_pick] = true;
      --deg[leaf];
      --deg[other];
    }
    if (ok) best = std::min(best, cost);
  } while (advance());
  return best;
}

Mat random_metric(int d, std::mt19937_64& rng) {
  // random points on a line => exact metric with many collinear ties
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec pts(d);
  for (auto& x : pts) x = u(rng);
  Mat c(d, Vec(d, 0.0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) c[i][j] = std::abs(pts[i] - pts[j]);
  return c;
}

Vec random_dist(int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Vec p(d);
  double s = 0.0;
  for (auto& x : p) {
    x = u(rng);
    s += x;
  }
  for (auto& x : p) x /= s;
  return p;
}

}  // namespace

TEST_CASE("optimal GAN discriminator and the value identity") {
  const Vec p{0.6, 0.4}, g{0.3, 0.7};
  const Vec D = gan_opt_discriminator(p, g);
  for (int x = 0; x < 2; ++x)
    CHECK(D[x] == doctest::Approx(p[x] / (p[x] + g[x])).epsilon(1e-14));
  const auto [value, div] = gan_value_and_jsd(p, g);
  CHECK(value == doctest::Approx(-std::log(4.0) + 2.0 * div).epsilon(1e-12));
  CHECK(div == doctest::Approx(jsd(p, g)).epsilon(1e-10));
  CHECK(div >= 0.0);
  // realizable case: divergence zero, value -log 4, D* = 1/2
  const auto [v0, d0] = gan_value_and_jsd(p, p);
  CHECK(v0 == doctest::Approx(-std::log(4.0)).epsilon(1e-14));
  CHECK(d0 == doctest::Approx(0.0));
}

TEST_CASE("optimal f-GAN discriminator is f'(p/q) and the value equals D_f") {
  std::mt19937_64 rng(5);
  for (const auto& name : fdiv_names()) {
    const FDivSpec spec = fdiv_spec(name);
    const Vec p = random_dist(3, rng), g = random_dist(3, rng);
    const Vec D = fgan_opt_discriminator(p, g, spec);
    for (int x = 0; x < 3; ++x)
      CHECK(D[x] == doctest::Approx(spec.fprime(p[x] / g[x])).epsilon(1e-12));
    const auto [value, div] = fgan_value_and_fdiv(p, g, spec);
    double direct = 0.0;
    for (int x = 0; x < 3; ++x) direct += g[x] * spec.f(p[x] / g[x]);
    CHECK(value == doctest::Approx(direct).epsilon(1e-9));
    CHECK(div == doctest::Approx(direct).epsilon(1e-12));
    // js member relates to 2*JSD
    if (name == "js") CHECK(div == doctest::Approx(2.0 * jsd(p, g)).epsilon(1e-9));
  }
}

TEST_CASE("maxmin discriminators: GAN 1/2, f-GAN f'(1), WGAN any constant") {
  GanKind gan{GanFamily::GAN, std::nullopt};
  const MaxminDiscriminator g = maxmin_discriminator(gan);
  CHECK(g.d_const == doctest::Approx(0.5));
  CHECK(g.value == doctest::Approx(-std::log(4.0)).epsilon(1e-12));

  for (const auto& name : fdiv_names()) {
    GanKind fk{GanFamily::FGAN, fdiv_spec(name)};
    const MaxminDiscriminator m = maxmin_discriminator(fk);
    CHECK(m.d_const == doctest::Approx(fdiv_spec(name).fprime(1.0)).epsilon(1e-12));
    // numeric inner value max_D [D - f*(D)] = f(1) = 0
    CHECK(std::abs(m.value) < 1e-8);
  }

  GanKind wk{GanFamily::WGAN, std::nullopt};
  const MaxminDiscriminator w = maxmin_discriminator(wk);
  CHECK(w.constant_arbitrary);
  CHECK(w.value == doctest::Approx(0.0));
}

TEST_CASE("generator best response concentrates on argmax D") {
  GanKind gan{GanFamily::GAN, std::nullopt};
  const Vec D{0.2, 0.8, 0.8 - 1e-12, 0.4};
  const InnerMinResult res = inner_min_generator(D, gan, {0.25, 0.25, 0.25, 0.25});
  REQUIRE(res.support.size() == 2);  // tie within 1e-9
  CHECK(res.support[0] == 1);
  CHECK(res.support[1] == 2);
  double want = std::log(1.0 - 0.8);
  for (int x = 0; x < 4; ++x) want += 0.25 * std::log(D[x]);
  CHECK(res.value == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("EMD on a two-point space equals total variation times distance") {
  const Mat c{{0.0, 1.0}, {1.0, 0.0}};
  const EmdResult res = wgan_emd({0.7, 0.3}, {0.2, 0.8}, c);
  CHECK(res.value == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(res.dual_value == doctest::Approx(res.value).epsilon(1e-14));
  // 1-Lipschitz dual potential
  CHECK(std::abs(res.potentials[0] - res.potentials[1]) <= 1.0 + 1e-12);
  // plan marginals
  CHECK(res.plan[0][0] + res.plan[0][1] == doctest::Approx(0.7));
  CHECK(res.plan[0][0] + res.plan[1][0] == doctest::Approx(0.2));
}

TEST_CASE("EMD agrees with the brute-force oracle on random instances") {
  std::mt19937_64 rng(99);
  for (int inst = 0; inst < 10; ++inst) {
    const int d = 4;
    const Mat c = random_metric(d, rng);
    const Vec a = random_dist(d, rng), b = random_dist(d, rng);
    const EmdResult res = wgan_emd(a, b, c);
    const double oracle = emd_bruteforce(a, b, c);
    CHECK(res.value == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(res.value == res.dual_value);  // primal = dual exactly
    // dual feasibility of the potentials: |D_i - D_j| <= c_ij
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        CHECK(std::abs(res.potentials[i] - res.potentials[j]) <= c[i][j] + 1e-9);
  }
}

TEST_CASE("invalid metrics and distributions are rejected") {
  CHECK_THROWS_AS(wgan_emd({0.5, 0.5}, {0.5, 0.5}, Mat{{0.0, 1.0}, {2.0, 0.0}}),
                  InvalidMetric);  // asymmetric
  CHECK_THROWS_AS(
      wgan_emd({0.5, 0.5, 0.0}, {0.5, 0.5, 0.0},
               Mat{{0, 1, 3}, {1, 0, 1}, {3, 1, 0}}),
      InvalidMetric);  // triangle violation 3 > 1 + 1
  CHECK_THROWS_AS(wgan_emd({0.9, 0.3}, {0.5, 0.5}, Mat{{0.0, 1.0}, {1.0, 0.0}}),
                  InvalidDistribution);
}

TEST_CASE("simplex projection") {
  const Vec v{1.2, -0.3, 0.4};
  const Vec p = project_simplex(v);
  double s = 0.0;
  for (double x : p) {
    CHECK(x >= 0.0);
    s += x;
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  // already-feasible points are fixed
  const Vec q = project_simplex({0.2, 0.5, 0.3});
  CHECK(q[0] == doctest::Approx(0.2));
  CHECK(q[1] == doctest::Approx(0.5));
  CHECK(q[2] == doctest::Approx(0.3));
}

TEST_CASE("constrained GAN instance matches the 1-D grid oracle") {
  // |N| = 2, p_data = (0.6, 0.4), constraint p_G(0) <= 0.3: the free
  // parameter is p_G(0), so the divergence is minimized on a grid directly.
  DiscreteGanInstance inst;
  inst.support_size = 2;
  inst.p_data = {0.6, 0.4};
  inst.constraints = {{{1.0, 0.0}, 0.3}};
  GanKind kind{GanFamily::GAN, std::nullopt};
  NonRealizableOptions opt;
  opt.certificate_eps = 1e-4;
  const SaddleSolution sol = nonrealizable_solve(inst, kind, opt);

  double best_g0 = 0.0, best_div = 1e300;
  for (int k = 0; k <= 300000; ++k) {
    const double g0 = 0.3 * k / 300000.0;
    const double div = jsd({0.6, 0.4}, {g0, 1.0 - g0});
    if (div < best_div) { best_div = div; best_g0 = g0; }
  }
  CHECK(best_g0 == doctest::Approx(0.3).epsilon(1e-6));  // boundary optimum
  CHECK(sol.G_star[0] == doctest::Approx(best_g0).epsilon(1e-4));
  CHECK(sol.G_star[1] == doctest::Approx(1.0 - best_g0).epsilon(1e-4));
  CHECK(sol.max_primal_violation <= opt.certificate_eps);
  CHECK(sol.max_dual_violation <= opt.certificate_eps);
}

TEST_CASE("unconstrained non-realizable solve recovers p_data") {
  std::mt19937_64 rng(3);
  for (int d : {2, 3, 4}) {
    DiscreteGanInstance inst;
    inst.support_size = d;
    inst.p_data = random_dist(d, rng);
    GanKind kind{GanFamily::GAN, std::nullopt};
    const SaddleSolution sol = nonrealizable_solve(inst, kind);
    for (int x = 0; x < d; ++x)
      CHECK(sol.G_star[x] == doctest::Approx(inst.p_data[x]).epsilon(1e-4));
    CHECK(sol.value == doctest::Approx(-std::log(4.0)).epsilon(1e-6));
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "hcc/errors.hpp"
#include "hcc/payoffs.hpp"

using namespace hcc;

namespace {

// Central finite differences of the payoff value against its gradients.
void check_payoff_fd(const PayoffFn& L, const Vec& F, const Vec& G, double tol = 1e-5) {
  const double h = 1e-6;
  const Vec gf = L.grad_f(F, G);
  const Vec gg = L.grad_g(F, G);
  for (int i = 0; i < L.dim_f; ++i) {
    Vec Fp = F, Fm = F;
    Fp[i] += h;
    Fm[i] -= h;
    const double num = (L.value(Fp, G) - L.value(Fm, G)) / (2 * h);
    const double scale = std::max({1.0, std::abs(num), std::abs(gf[i])});
    CHECK(std::abs(gf[i] - num) / scale <= tol);
  }
  for (int j = 0; j < L.dim_g; ++j) {
    Vec Gp = G, Gm = G;
    Gp[j] += h;
    Gm[j] -= h;
    const double num = (L.value(F, Gp) - L.value(F, Gm)) / (2 * h);
    const double scale = std::max({1.0, std::abs(num), std::abs(gg[j])});
    CHECK(std::abs(gg[j] - num) / scale <= tol);
  }
}

Vec random_interior(int n, std::mt19937_64& rng, double lo = 0.1, double hi = 0.9) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("bilinear payoff value and gradients") {
  const PayoffFn L = bilinear_payoff(0.5, 0.25);
  CHECK(L.value(Vec{0.8}, Vec{0.75}) == doctest::Approx(0.3 * 0.5));
  CHECK(L.grad_f(Vec{0.8}, Vec{0.75})[0] == doctest::Approx(0.5));
  CHECK(L.grad_g(Vec{0.8}, Vec{0.75})[0] == doctest::Approx(0.3));
  CHECK(L.convexity == Convexity::BilinearLinearLinear);
}

TEST_CASE("matrix bilinear payoff is F^T A G") {
  const Mat A{{0, -1, 1}, {1, 0, -1}, {-1, 1, 0}};
  const PayoffFn L = matrix_bilinear_payoff(A);
  const Vec F{0.2, 0.5, 0.3}, G{0.1, 0.6, 0.3};
  double want = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) want += F[i] * A[i][j] * G[j];
  CHECK(L.value(F, G) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("payoff gradients pass finite-difference checks") {
  std::mt19937_64 rng(7);
  const Vec p_data{0.1, 0.2, 0.3, 0.4};

  SUBCASE("bilinear") {
    const PayoffFn L = bilinear_payoff(0.3, 0.6);
    for (int rep = 0; rep < 20; ++rep)
      check_payoff_fd(L, random_interior(1, rng), random_interior(1, rng));
  }
  SUBCASE("matrix bilinear") {
    const PayoffFn L = matrix_bilinear_payoff({{0, -1, 1}, {1, 0, -1}, {-1, 1, 0}});
    for (int rep = 0; rep < 20; ++rep)
      check_payoff_fd(L, random_interior(3, rng), random_interior(3, rng));
  }
  SUBCASE("vanilla gan") {
    const PayoffFn L = vanilla_gan_payoff(p_data);
    for (int rep = 0; rep < 20; ++rep) {
      Vec G = random_interior(4, rng);
      G.push_back(random_interior(1, rng, -1.0, 1.0)[0]);  // lambda coordinate
      check_payoff_fd(L, random_interior(4, rng), G);
    }
  }
  SUBCASE("wgan gaussian") {
    const PayoffFn L = wgan_gaussian_payoff(1.0);
    for (int rep = 0; rep < 20; ++rep)
      check_payoff_fd(L, random_interior(1, rng, -1.0, 1.0),
                      random_interior(1, rng, -1.0, 1.0));
  }
  SUBCASE("fgan all divergences") {
    for (const auto& name : fdiv_names()) {
      const FDivSpec spec = fdiv_spec(name);
      const PayoffFn L = fgan_payoff(p_data, spec);
      for (int rep = 0; rep < 20; ++rep) {
        Vec D(4);
        for (auto& d : D) {
          // draw inside the conjugate domain
          const double lo = std::isfinite(spec.conjugate_domain.lo)
                                ? spec.conjugate_domain.lo + 0.1
                                : -1.5;
          const double hi = std::isfinite(spec.conjugate_domain.hi)
                                ? spec.conjugate_domain.hi - 0.1
                                : 1.5;
          std::uniform_real_distribution<double> u(lo, std::max(lo + 1e-3, hi));
          d = u(rng);
        }
        check_payoff_fd(L, random_interior(4, rng), D);
      }
    }
  }
}

TEST_CASE("vanilla gan equilibrium is stationary with lambda* = log(1/2)") {
  const Vec p_data{0.1, 0.2, 0.3, 0.4};
  const PayoffFn L = vanilla_gan_payoff(p_data);
  Vec G(4, 0.5);
  G.push_back(std::log(0.5));
  const Vec gf = L.grad_f(p_data, G);
  const Vec gg = L.grad_g(p_data, G);
  for (double v : gf) CHECK(std::abs(v) < 1e-14);
  for (double v : gg) CHECK(std::abs(v) < 1e-14);
}

TEST_CASE("vanilla gan guards keep f and g in (0,1), lambda free") {
  const PayoffFn L = vanilla_gan_payoff({0.5, 0.5});
  CHECK(L.in_domain(Vec{0.5, 0.5}, Vec{0.5, 0.5, -3.0}));
  CHECK_FALSE(L.in_domain(Vec{1.5, 0.5}, Vec{0.5, 0.5, 0.0}));
  CHECK_FALSE(L.in_domain(Vec{0.5, 0.5}, Vec{0.5, 1.0, 0.0}));
  CHECK(L.guard_g[2].unbounded());
}

TEST_CASE("f-divergence conjugates satisfy the Fenchel identity") {
  // f*(f'(u)) = u f'(u) - f(u); also check f* against a sup grid within 1e-4.
  for (const auto& name : fdiv_names()) {
    const FDivSpec spec = fdiv_spec(name);
    for (double u = 0.2; u <= 4.0; u += 0.2) {
      const double t = spec.fprime(u);
      if (!spec.conjugate_domain.contains(t)) continue;
      CHECK(spec.fstar(t) == doctest::Approx(u * t - spec.f(u)).epsilon(1e-10));
      // grid sup check with local ternary refinement around the best cell
      double sup = -1e300, best_v = 1e-4;
      for (double v = 1e-4; v <= 50.0; v *= 1.05) {
        const double s = v * t - spec.f(v);
        if (s > sup) { sup = s; best_v = v; }
      }
      double lo = best_v / 1.05, hi = best_v * 1.05;
      for (int it = 0; it < 200; ++it) {
        const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
        if (a * t - spec.f(a) < b * t - spec.f(b)) lo = a; else hi = b;
      }
      sup = std::max(sup, 0.5 * (lo + hi) * t - spec.f(0.5 * (lo + hi)));
      CHECK(spec.fstar(t) == doctest::Approx(sup).epsilon(1e-4));
      // fstar_prime finite-difference check
      const double h = 1e-6;
      const double num = (spec.fstar(t + h) - spec.fstar(t - h)) / (2 * h);
      CHECK(spec.fstar_prime(t) == doctest::Approx(num).epsilon(1e-5));
    }
  }
}

TEST_CASE("f(1) = 0 for every divergence generator") {
  for (const auto& name : fdiv_names())
    CHECK(std::abs(fdiv_spec(name).f(1.0)) < 1e-14);
}

TEST_CASE("unknown divergence throws") {
  CHECK_THROWS_AS(fdiv_spec("hellinger"), UnknownDivergence);
}

TEST_CASE("regularize shifts gradients by the quadratic terms") {
  const PayoffFn base = bilinear_payoff(0.0, 0.0);
  const double lambda = 0.5;
  const RegularizedPayoff reg = regularize(base, lambda, Vec{0.2}, Vec{0.7});
  const Vec F{0.9}, G{0.4};
  CHECK(reg.wrapped.grad_f(F, G)[0] ==
        doctest::Approx(base.grad_f(F, G)[0] + lambda * (F[0] - 0.2)).epsilon(1e-12));
  CHECK(reg.wrapped.grad_g(F, G)[0] ==
        doctest::Approx(base.grad_g(F, G)[0] - lambda * (G[0] - 0.7)).epsilon(1e-12));
  CHECK(reg.wrapped.value(F, G) ==
        doctest::Approx(base.value(F, G) + 0.5 * lambda * 0.7 * 0.7 -
                        0.5 * lambda * 0.3 * 0.3)
            .epsilon(1e-12));
  CHECK(reg.wrapped.convexity == Convexity::StrictlyConvexConcave);
}

TEST_CASE("wgan payoff variants") {
  const PayoffFn reg = wgan_gaussian_payoff(1.0);
  const PayoffFn unreg = wgan_gaussian_payoff_unregularized(1.0);
  const Vec F{0.3}, G{0.8};
  CHECK(reg.value(F, G) == doctest::Approx(0.3 * 0.8 - 0.5 * 0.64).epsilon(1e-14));
  CHECK(unreg.value(F, G) == doctest::Approx(0.3 * 0.8).epsilon(1e-14));
  CHECK(reg.convexity == Convexity::StrictlyConvexConcave);
  CHECK(unreg.convexity == Convexity::BilinearLinearLinear);
}

TEST_CASE("dimension mismatches throw") {
  const PayoffFn L = vanilla_gan_payoff({0.5, 0.5});
  CHECK_THROWS_AS(L.value(Vec{0.5}, Vec{0.5, 0.5, 0.0}), DimensionMismatch);
  CHECK_THROWS_AS(vanilla_gan_payoff(Vec{}), InvalidDistribution);
  CHECK_THROWS_AS(vanilla_gan_payoff(Vec{0.5, 0.6}), InvalidDistribution);
}

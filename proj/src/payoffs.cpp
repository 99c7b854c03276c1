#include "hcc/payoffs.hpp"

#include <cmath>

#include "hcc/errors.hpp"

namespace hcc {

namespace {

// Wraps the callable members with input-size validation so every factory
// rejects misuse uniformly.
PayoffFn with_dim_checks(PayoffFn L) {
  const int n = L.dim_f, m = L.dim_g;
  const auto check = [n, m](std::span<const double> F, std::span<const double> G) {
    if (static_cast<int>(F.size()) != n || static_cast<int>(G.size()) != m)
      throw DimensionMismatch("payoff called with wrong output dims");
  };
  const auto value = std::move(L.value);
  const auto gf = std::move(L.grad_f);
  const auto gg = std::move(L.grad_g);
  L.value = [check, value](std::span<const double> F, std::span<const double> G) {
    check(F, G);
    return value(F, G);
  };
  L.grad_f = [check, gf](std::span<const double> F, std::span<const double> G) {
    check(F, G);
    return gf(F, G);
  };
  L.grad_g = [check, gg](std::span<const double> F, std::span<const double> G) {
    check(F, G);
    return gg(F, G);
  };
  return L;
}

}  // namespace

bool PayoffFn::in_domain(std::span<const double> F, std::span<const double> G) const {
  for (std::size_t i = 0; i < guard_f.size(); ++i)
    if (!guard_f[i].contains(F[i])) return false;
  for (std::size_t j = 0; j < guard_g.size(); ++j)
    if (!guard_g[j].contains(G[j])) return false;
  return true;
}

PayoffFn bilinear_payoff(double p, double q) {
  PayoffFn L;
  L.dim_f = 1;
  L.dim_g = 1;
  L.convexity = Convexity::BilinearLinearLinear;
  L.name = "bilinear";
  L.value = [p, q](std::span<const double> F, std::span<const double> G) {
    return (F[0] - p) * (G[0] - q);
  };
  L.grad_f = [q](std::span<const double>, std::span<const double> G) {
    return Vec{G[0] - q};
  };
  L.grad_g = [p](std::span<const double> F, std::span<const double>) {
    return Vec{F[0] - p};
  };
  return with_dim_checks(std::move(L));
}

PayoffFn matrix_bilinear_payoff(const Mat& A) {
  const int n = static_cast<int>(A.size());
  const int m = n > 0 ? static_cast<int>(A[0].size()) : 0;
  for (const auto& row : A) {
    if (static_cast<int>(row.size()) != m)
      throw DimensionMismatch("matrix_bilinear_payoff: ragged matrix");
    if (!all_finite(row)) throw NonFiniteValue("matrix_bilinear_payoff: non-finite entry");
  }
  PayoffFn L;
  L.dim_f = n;
  L.dim_g = m;
  L.convexity = Convexity::BilinearLinearLinear;
  L.name = "matrix_bilinear";
  L.value = [A, n, m](std::span<const double> F, std::span<const double> G) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) s += F[i] * A[i][j] * G[j];
    return s;
  };
  L.grad_f = [A, n, m](std::span<const double>, std::span<const double> G) {
    Vec out(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) out[i] += A[i][j] * G[j];
    return out;
  };
  L.grad_g = [A, n, m](std::span<const double> F, std::span<const double>) {
    Vec out(m, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) out[j] += A[i][j] * F[i];
    return out;
  };
  return with_dim_checks(std::move(L));
}

PayoffFn vanilla_gan_payoff(const Vec& p_data) {
  const int d = static_cast<int>(p_data.size());
  double sum = 0.0;
  for (double v : p_data) {
    if (!(v > 0.0)) throw InvalidDistribution("p_data must be fully mixed");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidDistribution("p_data must sum to 1");

  // Lagrangian of the constrained vanilla GAN. The simplex equality
  // constraint enters as lambda * (1 - sum F); with this orientation the
  // stationary multiplier is lambda* = log(1/2).
  PayoffFn L;
  L.dim_f = d;
  L.dim_g = d + 1;  // discriminator values plus the multiplier
  L.convexity = Convexity::ConvexConcave;
  L.name = "vanilla_gan";
  L.guard_f.assign(d, Interval{0.0, 1.0});
  L.guard_g.assign(d, Interval{0.0, 1.0});
  L.guard_g.push_back(Interval{});  // lambda unconstrained
  L.value = [p_data, d](std::span<const double> F, std::span<const double> G) {
    const double lambda = G[d];
    double s = 0.0, fs = 0.0;
    for (int x = 0; x < d; ++x) {
      s += p_data[x] * std::log(G[x]) + F[x] * std::log(1.0 - G[x]);
      fs += F[x];
    }
    return s + lambda * (1.0 - fs);
  };
  L.grad_f = [d](std::span<const double>, std::span<const double> G) {
    const double lambda = G[d];
    Vec out(d);
    for (int x = 0; x < d; ++x) out[x] = std::log(1.0 - G[x]) - lambda;
    return out;
  };
  L.grad_g = [p_data, d](std::span<const double> F, std::span<const double> G) {
    Vec out(d + 1);
    double fs = 0.0;
    for (int x = 0; x < d; ++x) {
      out[x] = p_data[x] / G[x] - F[x] / (1.0 - G[x]);
      fs += F[x];
    }
    out[d] = 1.0 - fs;
    return out;
  };
  return with_dim_checks(std::move(L));
}

PayoffFn wgan_gaussian_payoff(double alpha_star_sq) {
  if (!(alpha_star_sq > 0.0)) throw DomainError("alpha_star_sq must be positive");
  // Hidden outputs: F = alpha_star^2 - alpha^2 (generator, min side),
  // G = v (discriminator, max side). The -G^2/2 regularizer is built in.
  PayoffFn L;
  L.dim_f = 1;
  L.dim_g = 1;
  L.convexity = Convexity::StrictlyConvexConcave;
  L.name = "wgan_gaussian";
  L.value = [](std::span<const double> F, std::span<const double> G) {
    return F[0] * G[0] - 0.5 * G[0] * G[0];
  };
  L.grad_f = [](std::span<const double>, std::span<const double> G) {
    return Vec{G[0]};
  };
  L.grad_g = [](std::span<const double> F, std::span<const double> G) {
    return Vec{F[0] - G[0]};
  };
  return with_dim_checks(std::move(L));
}

PayoffFn wgan_gaussian_payoff_unregularized(double alpha_star_sq) {
  if (!(alpha_star_sq > 0.0)) throw DomainError("alpha_star_sq must be positive");
  PayoffFn L = bilinear_payoff(0.0, 0.0);
  L.name = "wgan_gaussian_unregularized";
  return with_dim_checks(std::move(L));
}

FDivSpec fdiv_spec(const std::string& name) {
  FDivSpec s;
  s.name = name;
  if (name == "kl") {
    s.f = [](double u) { return u * std::log(u); };
    s.fprime = [](double u) { return 1.0 + std::log(u); };
    s.fstar = [](double t) { return std::exp(t - 1.0); };
    s.fstar_prime = [](double t) { return std::exp(t - 1.0); };
    s.conjugate_domain = Interval{};
  } else if (name == "reverse_kl") {
    s.f = [](double u) { return -std::log(u); };
    s.fprime = [](double u) { return -1.0 / u; };
    s.fstar = [](double t) { return -1.0 - std::log(-t); };
    s.fstar_prime = [](double t) { return -1.0 / t; };
    s.conjugate_domain = Interval{-std::numeric_limits<double>::infinity(), 0.0};
  } else if (name == "js") {
    s.f = [](double u) { return u * std::log(u) - (u + 1.0) * std::log(0.5 * (u + 1.0)); };
    s.fprime = [](double u) { return std::log(2.0 * u / (u + 1.0)); };
    s.fstar = [](double t) { return -std::log(2.0 - std::exp(t)); };
    s.fstar_prime = [](double t) { return std::exp(t) / (2.0 - std::exp(t)); };
    s.conjugate_domain = Interval{-std::numeric_limits<double>::infinity(), std::log(2.0)};
  } else if (name == "pearson_chi2") {
    s.f = [](double u) { return (u - 1.0) * (u - 1.0); };
    s.fprime = [](double u) { return 2.0 * (u - 1.0); };
    s.fstar = [](double t) { return 0.25 * t * t + t; };
    s.fstar_prime = [](double t) { return 0.5 * t + 1.0; };
    s.conjugate_domain = Interval{};
  } else {
    throw UnknownDivergence(name);
  }
  return s;
}

std::vector<std::string> fdiv_names() { return {"kl", "reverse_kl", "js", "pearson_chi2"}; }

PayoffFn fgan_payoff(const Vec& p_data, const FDivSpec& f_div) {
  const int d = static_cast<int>(p_data.size());
  double sum = 0.0;
  for (double v : p_data) {
    if (!(v > 0.0)) throw InvalidDistribution("p_data must be fully mixed");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidDistribution("p_data must sum to 1");

  PayoffFn L;
  L.dim_f = d;  // generator probabilities
  L.dim_g = d;  // discriminator values
  L.convexity = Convexity::ConvexConcave;
  L.name = "fgan_" + f_div.name;
  L.guard_f.assign(d, Interval{0.0, std::numeric_limits<double>::infinity()});
  L.guard_g.assign(d, f_div.conjugate_domain);
  const auto fstar = f_div.fstar;
  const auto fstar_prime = f_div.fstar_prime;
  L.value = [p_data, d, fstar](std::span<const double> F, std::span<const double> G) {
    double s = 0.0;
    for (int x = 0; x < d; ++x) s += p_data[x] * G[x] - F[x] * fstar(G[x]);
    return s;
  };
  L.grad_f = [d, fstar](std::span<const double>, std::span<const double> G) {
    Vec out(d);
    for (int x = 0; x < d; ++x) out[x] = -fstar(G[x]);
    return out;
  };
  L.grad_g = [p_data, d, fstar_prime](std::span<const double> F, std::span<const double> G) {
    Vec out(d);
    for (int x = 0; x < d; ++x) out[x] = p_data[x] - F[x] * fstar_prime(G[x]);
    return out;
  };
  return with_dim_checks(std::move(L));
}

RegularizedPayoff regularize(const PayoffFn& base, double lambda,
                             const Vec& center_f, const Vec& center_g) {
  if (lambda < 0.0) throw DomainError("lambda must be nonnegative");
  if (static_cast<int>(center_f.size()) != base.dim_f ||
      static_cast<int>(center_g.size()) != base.dim_g)
    throw DimensionMismatch("regularize: center dims do not match payoff dims");

  RegularizedPayoff reg;
  reg.base = base;
  reg.lambda = lambda;
  reg.center_f = center_f;
  reg.center_g = center_g;

  PayoffFn w = base;
  w.name = base.name + "+reg";
  w.convexity = lambda > 0.0 ? Convexity::StrictlyConvexConcave : base.convexity;
  w.value = [base, lambda, center_f, center_g](std::span<const double> F,
                                               std::span<const double> G) {
    double s = base.value(F, G);
    for (int i = 0; i < base.dim_f; ++i) {
      const double d = F[i] - center_f[i];
      s += 0.5 * lambda * d * d;
    }
    for (int j = 0; j < base.dim_g; ++j) {
      const double d = G[j] - center_g[j];
      s -= 0.5 * lambda * d * d;
    }
    return s;
  };
  w.grad_f = [base, lambda, center_f](std::span<const double> F, std::span<const double> G) {
    Vec g = base.grad_f(F, G);
    for (int i = 0; i < base.dim_f; ++i) g[i] += lambda * (F[i] - center_f[i]);
    return g;
  };
  w.grad_g = [base, lambda, center_g](std::span<const double> F, std::span<const double> G) {
    Vec g = base.grad_g(F, G);
    for (int j = 0; j < base.dim_g; ++j) g[j] -= lambda * (G[j] - center_g[j]);
    return g;
  };
  reg.wrapped = std::move(w);
  return reg;
}

}  // namespace hcc

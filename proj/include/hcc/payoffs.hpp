#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hcc/vec.hpp"

namespace hcc {

enum class Convexity { ConvexConcave, StrictlyConvexConcave, BilinearLinearLinear };

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double v) const { return v > lo && v < hi; }
  bool unbounded() const { return !std::isfinite(lo) && !std::isfinite(hi); }
};

// Convex-concave payoff over operator outputs: the min player controls the
// F block (length dim_f), the max player the G block (length dim_g).
struct PayoffFn {
  int dim_f = 0;
  int dim_g = 0;
  Convexity convexity = Convexity::ConvexConcave;
  std::string name;
  std::function<double(std::span<const double>, std::span<const double>)> value;
  std::function<Vec(std::span<const double>, std::span<const double>)> grad_f;
  std::function<Vec(std::span<const double>, std::span<const double>)> grad_g;
  // Per-coordinate open-interval constraints; empty means unguarded.
  std::vector<Interval> guard_f;
  std::vector<Interval> guard_g;

  bool in_domain(std::span<const double> F, std::span<const double> G) const;
};

struct RegularizedPayoff {
  PayoffFn base;
  double lambda = 0.0;
  Vec center_f;
  Vec center_g;
  PayoffFn wrapped;  // base plus the quadratic terms; what dynamics consume
};

// L(f,g) = (f - p)(g - q), the 2x2 hidden bilinear payoff.
PayoffFn bilinear_payoff(double p, double q);

// L(F,G) = F^T A G.
PayoffFn matrix_bilinear_payoff(const Mat& A);

// Lagrangian form of the discrete vanilla GAN: min player is the generator
// probabilities F (dim d), max player is (D, lambda) (dim d+1).
PayoffFn vanilla_gan_payoff(const Vec& p_data);

// Hidden WGAN payoff for the 1-D Gaussian example: value(F,G) = F*G - G^2/2
// with F the generator output (min side) and G the discriminator slope
// (max side). The -G^2/2 term is the built-in quadratic regularizer.
PayoffFn wgan_gaussian_payoff(double alpha_star_sq);

// The unregularized hidden linear-linear WGAN payoff F*G.
PayoffFn wgan_gaussian_payoff_unregularized(double alpha_star_sq);

// Closed registry of f-divergence generators with hand-derived conjugates.
struct FDivSpec {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> fprime;
  std::function<double(double)> fstar;
  std::function<double(double)> fstar_prime;
  Interval conjugate_domain;  // the open domain of f*
};

// Members: "kl", "reverse_kl", "js", "pearson_chi2".
FDivSpec fdiv_spec(const std::string& name);
std::vector<std::string> fdiv_names();

// V(F, D) = sum p_data(x) D(x) - sum F(x) f*(D(x)); min player F = p_G,
// max player G = D.
PayoffFn fgan_payoff(const Vec& p_data, const FDivSpec& f_div);

RegularizedPayoff regularize(const PayoffFn& base, double lambda,
                             const Vec& center_f, const Vec& center_g);

}  // namespace hcc

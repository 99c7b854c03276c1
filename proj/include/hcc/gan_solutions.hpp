#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hcc/payoffs.hpp"
#include "hcc/vec.hpp"

namespace hcc {

enum class GanFamily { GAN, FGAN, WGAN };

struct GanKind {
  GanFamily family = GanFamily::GAN;
  std::optional<FDivSpec> f_div;  // required for FGAN
};

struct LinearConstraint {
  Vec a;
  double b = 0.0;  // a . p <= b
};

struct DiscreteGanInstance {
  int support_size = 0;
  Vec p_data;
  std::optional<Mat> metric;                   // WGAN only
  std::vector<LinearConstraint> constraints;   // empty means the full simplex
};

// D*(x) = p_data(x) / (p_data(x) + p_G(x)).
Vec gan_opt_discriminator(const Vec& p_data, const Vec& p_G);

// (V at the best-response discriminator, JSD), asserting the identity
// V = -log 4 + 2 JSD.
std::pair<double, double> gan_value_and_jsd(const Vec& p_data, const Vec& p_G);

// D*(x) = f'(p_data(x) / p_G(x)).
Vec fgan_opt_discriminator(const Vec& p_data, const Vec& p_G, const FDivSpec& f_div);

// (V at best response, D_f), asserting their equality.
std::pair<double, double> fgan_value_and_fdiv(const Vec& p_data, const Vec& p_G,
                                              const FDivSpec& f_div);

struct EmdResult {
  double value = 0.0;       // transportation optimum
  double dual_value = 0.0;  // dual objective at the extracted potentials
  Vec potentials;           // 1-Lipschitz Kantorovich potential D
  Mat plan;                 // optimal coupling
};

// Earth mover's distance on a discrete metric space via the transportation
// primal (successive shortest paths) with dual potential extraction.
EmdResult wgan_emd(const Vec& p_data, const Vec& p_G, const Mat& metric);

struct MaxminDiscriminator {
  bool constant_arbitrary = false;  // WGAN: any constant works
  double d_const = 0.0;
  double value = 0.0;          // max-min value (numeric for f-GAN)
  double formula_value = 0.0;  // the closed-form expression, reported as-is
};

MaxminDiscriminator maxmin_discriminator(const GanKind& kind);

struct InnerMinResult {
  std::vector<int> support;  // S_{G_D*}: argmax set within tie tolerance
  double value = 0.0;        // exact inner min over the full simplex
};

// Best response of the generator to a fixed discriminator over the full
// simplex. Tie tolerance 1e-9 defines the argmax support set.
InnerMinResult inner_min_generator(const Vec& D, const GanKind& kind, const Vec& p_data,
                                   double tie_tol = 1e-9);

struct SaddleSolution {
  Vec G_star;
  Vec D_star;            // empty for WGAN apart from dual potentials
  double value = 0.0;
  double max_primal_violation = 0.0;  // max over D deviations of V(G*,D) - value
  double max_dual_violation = 0.0;    // max over G deviations of value - V(G,D*)
};

struct NonRealizableOptions {
  int pgd_iters = 10'000;
  double pgd_step = 1e-2;
  int certificate_samples = 1000;
  double certificate_eps = 1e-4;
  std::uint64_t seed = 0;
};

// Divergence minimization over the constrained generator set by projected
// gradient, plus best-response discriminator and saddle certificates.
SaddleSolution nonrealizable_solve(const DiscreteGanInstance& instance, const GanKind& kind,
                                   const NonRealizableOptions& opt = {});

// Euclidean projection onto the probability simplex.
Vec project_simplex(const Vec& v);

// Projection onto simplex intersected with halfspaces (alternating
// projections).
Vec project_feasible(const Vec& v, const std::vector<LinearConstraint>& constraints);

}  // namespace hcc

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hcc/vec.hpp"

namespace hcc {

enum class OpKind { Sigmoid1D, Identity1D, Custom };

// One coordinate map of an operator bank: a smooth scalar function of its
// own disjoint parameter block, together with its gradient.
struct ScalarOperator {
  int input_dim = 1;
  OpKind kind = OpKind::Custom;
  std::string name;
  std::function<double(std::span<const double>)> eval;
  std::function<Vec(std::span<const double>)> grad;
};

ScalarOperator sigmoid_operator();
ScalarOperator identity_operator();

// Registry lookup by name: "sigmoid", "identity", "xor_relax",
// "wgan_quadratic(<alpha_star>)".
ScalarOperator make_operator(const std::string& spec);

struct OperatorBank {
  std::vector<ScalarOperator> operators;

  int total_param_dim() const;
  // Offset of operator i's block inside the flat parameter vector.
  int block_offset(int i) const;
  std::span<const double> block(std::span<const double> params, int i) const;
  Vec outputs(std::span<const double> params) const;
};

struct PathSample {
  double z;             // operator output
  Vec x;                // parameter point on the ascent trajectory
  double grad_norm_sq;  // squared gradient norm at x
};

// A gradient-ascent trajectory of one operator, sampled monotonically in
// output value. Covers both the ascent (t>0) and descent (t<0) directions
// from the init; samples are sorted ascending in z.
struct AscentPath {
  int operator_index = -1;
  ScalarOperator op;
  Vec init;
  std::vector<PathSample> samples;
  double lo = 0.0, hi = 0.0;
  bool lo_truncated = false;  // horizon cut off before the gradient stalled
  bool hi_truncated = false;
  bool degenerate = false;    // init is a stationary point
};

struct AscentPathOptions {
  double horizon = 50.0;
  double step = 1e-2;
  double stall_tol = 1e-12;
  double resample_gap = 1e-3;  // max output spacing between stored samples
};

AscentPath build_ascent_path(const ScalarOperator& op, const Vec& init,
                             const AscentPathOptions& opt = {});

// Parameter point on the path with output z (piecewise linear in z).
Vec inverse_map(const AscentPath& path, double z);

// Squared gradient norm of the operator at output level z. Sigmoid and
// identity operators use closed forms; custom operators interpolate the
// path and re-evaluate the gradient.
double grad_norm_sq_at_output(const AscentPath& path, double z);

enum class SafetyVerdict { Safe, Unsafe, Unknown };

struct SafetyReport {
  std::vector<SafetyVerdict> f_verdicts;
  std::vector<SafetyVerdict> g_verdicts;
  bool all_safe = false;
  bool any_unsafe = false;
};

// Checks the safety conditions of an initialization for a candidate
// solution (p,q): no stationary inits and each target coordinate strictly
// inside the attainable range. Targets beyond a truncated endpoint yield
// Unknown rather than Unsafe.
SafetyReport is_safe(const std::vector<AscentPath>& paths_F,
                     const std::vector<AscentPath>& paths_G,
                     std::span<const double> p, std::span<const double> q);

}  // namespace hcc

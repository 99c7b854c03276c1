#include "hcc/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "hcc/errors.hpp"

namespace hcc {

ScalarOperator sigmoid_operator() {
  ScalarOperator op;
  op.input_dim = 1;
  op.kind = OpKind::Sigmoid1D;
  op.name = "sigmoid";
  op.eval = [](std::span<const double> x) { return sigmoid(x[0]); };
  op.grad = [](std::span<const double> x) {
    const double s = sigmoid(x[0]);
    return Vec{s * (1.0 - s)};
  };
  return op;
}

ScalarOperator identity_operator() {
  ScalarOperator op;
  op.input_dim = 1;
  op.kind = OpKind::Identity1D;
  op.name = "identity";
  op.eval = [](std::span<const double> x) { return x[0]; };
  op.grad = [](std::span<const double>) { return Vec{1.0}; };
  return op;
}

static ScalarOperator xor_relax_operator() {
  // Probabilistic XOR relaxation: sigma(a)(1-sigma(b)) + sigma(b)(1-sigma(a)).
  ScalarOperator op;
  op.input_dim = 2;
  op.kind = OpKind::Custom;
  op.name = "xor_relax";
  op.eval = [](std::span<const double> x) {
    const double a = sigmoid(x[0]), b = sigmoid(x[1]);
    return a * (1.0 - b) + b * (1.0 - a);
  };
  op.grad = [](std::span<const double> x) {
    const double a = sigmoid(x[0]), b = sigmoid(x[1]);
    const double da = a * (1.0 - a), db = b * (1.0 - b);
    return Vec{da * (1.0 - 2.0 * b), db * (1.0 - 2.0 * a)};
  };
  return op;
}

static ScalarOperator wgan_quadratic_operator(double alpha_star) {
  // G(alpha) = alpha_star^2 - alpha^2, the hidden generator map of the
  // one-dimensional Gaussian WGAN example.
  ScalarOperator op;
  op.input_dim = 1;
  op.kind = OpKind::Custom;
  op.name = "wgan_quadratic(" + std::to_string(alpha_star) + ")";
  const double a2 = alpha_star * alpha_star;
  op.eval = [a2](std::span<const double> x) { return a2 - x[0] * x[0]; };
  op.grad = [](std::span<const double> x) { return Vec{-2.0 * x[0]}; };
  return op;
}

ScalarOperator make_operator(const std::string& spec) {
  if (spec == "sigmoid") return sigmoid_operator();
  if (spec == "identity") return identity_operator();
  if (spec == "xor_relax") return xor_relax_operator();
  const std::string prefix = "wgan_quadratic(";
  if (spec.rfind(prefix, 0) == 0 && spec.back() == ')') {
    const std::string arg = spec.substr(prefix.size(), spec.size() - prefix.size() - 1);
    return wgan_quadratic_operator(std::strtod(arg.c_str(), nullptr));
  }
  throw ConfigError("unknown operator \"" + spec + "\"");
}

int OperatorBank::total_param_dim() const {
  int n = 0;
  for (const auto& op : operators) n += op.input_dim;
  return n;
}

int OperatorBank::block_offset(int i) const {
  int off = 0;
  for (int k = 0; k < i; ++k) off += operators[k].input_dim;
  return off;
}

std::span<const double> OperatorBank::block(std::span<const double> params, int i) const {
  return params.subspan(block_offset(i), operators[i].input_dim);
}

Vec OperatorBank::outputs(std::span<const double> params) const {
  Vec out(operators.size());
  int off = 0;
  for (std::size_t i = 0; i < operators.size(); ++i) {
    out[i] = operators[i].eval(params.subspan(off, operators[i].input_dim));
    off += operators[i].input_dim;
  }
  return out;
}

namespace {

double checked_eval(const ScalarOperator& op, std::span<const double> x) {
  const double z = op.eval(x);
  if (!std::isfinite(z)) throw NonFiniteValue("operator eval at a path point");
  return z;
}

Vec checked_grad(const ScalarOperator& op, std::span<const double> x) {
  Vec g = op.grad(x);
  if (!all_finite(g)) throw NonFiniteValue("operator grad at a path point");
  return g;
}

// One RK4 step of xdot = dir * grad(x).
Vec rk4_ascent_step(const ScalarOperator& op, const Vec& x, double dir, double dt) {
  const auto f = [&](const Vec& y) {
    Vec g = checked_grad(op, y);
    for (double& v : g) v *= dir;
    return g;
  };
  const int n = static_cast<int>(x.size());
  Vec k1 = f(x), tmp(n);
  for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  Vec k2 = f(tmp);
  for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  Vec k3 = f(tmp);
  for (int i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
  Vec k4 = f(tmp);
  Vec out(n);
  for (int i = 0; i < n; ++i)
    out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

struct DirectionResult {
  std::vector<PathSample> samples;  // in integration order, init excluded
  bool truncated = false;
};

DirectionResult integrate_direction(const ScalarOperator& op, const Vec& init,
                                    double dir, const AscentPathOptions& opt) {
  constexpr std::size_t kMaxSamples = 4'000'000;
  DirectionResult res;
  Vec x = init;
  double z = checked_eval(op, x);
  double t = 0.0;
  while (t < opt.horizon) {
    {
      const Vec g = checked_grad(op, x);
      if (norm_sq(g) < opt.stall_tol) return res;  // stalled: range endpoint reached
    }
    double dt = std::min(opt.step, opt.horizon - t);
    Vec xn;
    double zn;
    // Shrink the step until the recorded output spacing is within the
    // resample gap; the spacing bounds the inverse-map interpolation error.
    // The gap is relative beyond |z| = 1 so unbounded ranges stay coverable
    // with a bounded sample count at fixed relative interpolation error.
    const double gap = opt.resample_gap * std::max(1.0, std::abs(z));
    for (;;) {
      xn = rk4_ascent_step(op, x, dir, dt);
      zn = checked_eval(op, xn);
      if (std::abs(zn - z) <= gap || dt <= 1e-12) break;
      dt *= 0.5;
    }
    // Ascent strictly increases the output away from stationary points; a
    // non-advancing step means we are numerically stalled.
    if (dir > 0 ? (zn <= z) : (zn >= z)) return res;
    t += dt;
    x = std::move(xn);
    z = zn;
    res.samples.push_back({z, x, norm_sq(checked_grad(op, x))});
    if (res.samples.size() >= kMaxSamples)
      throw Error("ascent path exceeded sample budget");
  }
  res.truncated = true;
  return res;
}

}  // namespace

AscentPath build_ascent_path(const ScalarOperator& op, const Vec& init,
                             const AscentPathOptions& opt) {
  if (op.input_dim == 0) throw ZeroDimInput("operator has input_dim 0");
  if (static_cast<int>(init.size()) != op.input_dim)
    throw DimensionMismatch("init size does not match operator input_dim");

  AscentPath path;
  path.op = op;
  path.init = init;

  const double z0 = checked_eval(op, init);
  const Vec g0 = checked_grad(op, init);
  const double gn0 = norm_sq(g0);

  if (gn0 < opt.stall_tol) {
    path.degenerate = true;
    path.samples = {{z0, init, gn0}};
    path.lo = path.hi = z0;
    return path;
  }

  DirectionResult up = integrate_direction(op, init, +1.0, opt);
  DirectionResult down = integrate_direction(op, init, -1.0, opt);

  path.samples.reserve(up.samples.size() + down.samples.size() + 1);
  for (auto it = down.samples.rbegin(); it != down.samples.rend(); ++it)
    path.samples.push_back(std::move(*it));
  path.samples.push_back({z0, init, gn0});
  for (auto& s : up.samples) path.samples.push_back(std::move(s));

  path.lo = path.samples.front().z;
  path.hi = path.samples.back().z;
  path.lo_truncated = down.truncated;
  path.hi_truncated = up.truncated;
  return path;
}

namespace {

// Index of the sample bracketing z from below; requires lo <= z <= hi.
std::size_t bracket(const AscentPath& path, double z) {
  const auto& s = path.samples;
  auto it = std::upper_bound(s.begin(), s.end(), z,
                             [](double v, const PathSample& p) { return v < p.z; });
  if (it == s.begin()) return 0;
  std::size_t i = static_cast<std::size_t>(it - s.begin()) - 1;
  if (i + 1 >= s.size()) i = s.size() - 2;
  return i;
}

}  // namespace

Vec inverse_map(const AscentPath& path, double z) {
  if (path.degenerate) throw DegeneratePath("inverse_map on a stationary-init path");
  if (!(z > path.lo && z < path.hi))
    throw OutOfRange("z outside path range");
  const std::size_t i = bracket(path, z);
  const PathSample& a = path.samples[i];
  const PathSample& b = path.samples[i + 1];
  const double w = (b.z == a.z) ? 0.0 : (z - a.z) / (b.z - a.z);
  Vec x(a.x.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = a.x[k] + w * (b.x[k] - a.x[k]);
  return x;
}

double grad_norm_sq_at_output(const AscentPath& path, double z) {
  switch (path.op.kind) {
    case OpKind::Sigmoid1D: {
      if (!(z > path.lo && z < path.hi)) throw OutOfRange("z outside path range");
      const double v = z * (1.0 - z);
      return v * v;
    }
    case OpKind::Identity1D:
      if (!(z > path.lo && z < path.hi)) throw OutOfRange("z outside path range");
      return 1.0;
    case OpKind::Custom: {
      const Vec x = inverse_map(path, z);
      return norm_sq(path.op.grad(x));
    }
  }
  throw Error("unreachable operator kind");
}

namespace {

SafetyVerdict coordinate_verdict(const AscentPath& path, double target) {
  if (path.degenerate) return SafetyVerdict::Unsafe;  // stationary init
  if (target > path.lo && target < path.hi) return SafetyVerdict::Safe;
  // Exactly on an endpoint: attainability at the boundary is undecidable
  // from a finite path, so do not guess.
  if (target == path.lo || target == path.hi) return SafetyVerdict::Unknown;
  if (target < path.lo) return path.lo_truncated ? SafetyVerdict::Unknown : SafetyVerdict::Unsafe;
  return path.hi_truncated ? SafetyVerdict::Unknown : SafetyVerdict::Unsafe;
}

}  // namespace

SafetyReport is_safe(const std::vector<AscentPath>& paths_F,
                     const std::vector<AscentPath>& paths_G,
                     std::span<const double> p, std::span<const double> q) {
  if (paths_F.size() != p.size() || paths_G.size() != q.size())
    throw DimensionMismatch("safety check: path/target count mismatch");
  SafetyReport rep;
  rep.all_safe = true;
  for (std::size_t i = 0; i < paths_F.size(); ++i)
    rep.f_verdicts.push_back(coordinate_verdict(paths_F[i], p[i]));
  for (std::size_t j = 0; j < paths_G.size(); ++j)
    rep.g_verdicts.push_back(coordinate_verdict(paths_G[j], q[j]));
  for (const auto* vs : {&rep.f_verdicts, &rep.g_verdicts})
    for (SafetyVerdict v : *vs) {
      if (v != SafetyVerdict::Safe) rep.all_safe = false;
      if (v == SafetyVerdict::Unsafe) rep.any_unsafe = true;
    }
  return rep;
}

}  // namespace hcc

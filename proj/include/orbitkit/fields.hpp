#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "orbitkit/errors.hpp"
#include "orbitkit/parallel.hpp"
#include "orbitkit/polynomial.hpp"
#include "orbitkit/random.hpp"
#include "orbitkit/space.hpp"

namespace orbitkit {

/// Finite-difference step for derivative order j at x.
inline double fd_step(int order, const Vector& x, NormKind kind) {
  static constexpr std::array<double, 4> base{0.0, 1e-5, 1e-3, 1e-2};
  return base[static_cast<std::size_t>(std::clamp(order, 1, 3))] * (1.0 + norm(x, kind));
}

/// A local vector field on a chart. Evaluation must be pure. The optional
/// Jacobian and higher derivatives are analytic; when absent, central
/// differences are used.
class VectorField {
 public:
  using EvalFn = std::function<Vector(const Vector&)>;
  using JacobianFn = std::function<Matrix(const Vector&)>;
  using MultilinearFn = std::function<Vector(const Vector&, std::span<const Vector>)>;

  VectorField() = default;

  VectorField(std::string label, Ball domain, EvalFn eval, JacobianFn jacobian = {},
              MultilinearFn higher = {})
      : label_(std::move(label)),
        domain_(std::move(domain)),
        eval_(std::move(eval)),
        jacobian_(std::move(jacobian)),
        higher_(std::move(higher)) {}

  static VectorField from_polynomial(std::string label, Ball domain, PolynomialField poly) {
    auto shared = std::make_shared<const PolynomialField>(std::move(poly));
    VectorField f(
        std::move(label), std::move(domain), [shared](const Vector& x) { return shared->eval(x); },
        [shared](const Vector& x) { return shared->jacobian(x); },
        [shared](const Vector& x, std::span<const Vector> dirs) { return shared->multilinear(x, dirs); });
    f.poly_ = std::move(shared);
    return f;
  }

  const std::string& label() const noexcept { return label_; }
  const Ball& domain() const noexcept { return domain_; }
  int dim() const { return static_cast<int>(domain_.center.size()); }
  bool has_jacobian() const noexcept { return static_cast<bool>(jacobian_); }
  bool has_analytic_jets() const noexcept { return static_cast<bool>(higher_); }
  const PolynomialField* polynomial() const noexcept { return poly_.get(); }

  VectorField relabeled(std::string label) const {
    VectorField f = *this;
    f.label_ = std::move(label);
    return f;
  }

  VectorField with_domain(Ball domain) const {
    VectorField f = *this;
    f.domain_ = std::move(domain);
    return f;
  }

  void require_in_domain(const Vector& x) const {
    if (!domain_.contains(x, 1e-12))
      throw Error(ErrorKind::OutOfDomain, "point outside the domain of field '" + label_ + "'");
  }

  Vector eval(const Vector& x) const {
    require_in_domain(x);
    return eval_(x);
  }

  /// No domain check; used inside integrator stages and difference stencils.
  Vector eval_unchecked(const Vector& x) const { return eval_(x); }

  Matrix jacobian(const Vector& x) const {
    if (jacobian_) return jacobian_(x);
    return fd_jacobian(x);
  }

  Matrix fd_jacobian(const Vector& x) const {
    const int n = dim();
    const double h = fd_step(1, x, domain_.norm_kind);
    Matrix j(n, n);
    Vector xp = x, xm = x;
    for (int k = 0; k < n; ++k) {
      xp(k) = x(k) + h;
      xm(k) = x(k) - h;
      j.col(k) = (eval_(xp) - eval_(xm)) / (2.0 * h);
      xp(k) = x(k);
      xm(k) = x(k);
    }
    return j;
  }

  /// D^m X(x)[u_1, ..., u_m] for 1 <= m <= 3 numerically, any m analytically.
  Vector derivative(const Vector& x, std::span<const Vector> dirs) const {
    const int m = static_cast<int>(dirs.size());
    if (m == 0) return eval_(x);
    if (poly_ && poly_->degree() < m) return Vector::Zero(dim());
    if (higher_) return higher_(x, dirs);
    if (m > 3) throw Error(ErrorKind::OrderTooHigh, "numerical jets are limited to order 3");
    const double h = fd_step(m, x, domain_.norm_kind);
    if (m == 1) {
      if (jacobian_) return jacobian_(x) * dirs[0];
      return (eval_(x + h * dirs[0]) - eval_(x - h * dirs[0])) / (2.0 * h);
    }
    if (m == 2) {
      const Vector& u = dirs[0];
      const Vector& v = dirs[1];
      if (jacobian_) return (jacobian_(x + h * v) - jacobian_(x - h * v)) * u / (2.0 * h);
      return (eval_(x + h * (u + v)) - eval_(x + h * (u - v)) - eval_(x - h * (u - v)) + eval_(x - h * (u + v))) /
             (4.0 * h * h);
    }
    const Vector& u = dirs[0];
    const Vector& v = dirs[1];
    const Vector& w = dirs[2];
    Vector acc = Vector::Zero(dim());
    if (jacobian_) {
      for (int s2 : {-1, 1}) {
        for (int s3 : {-1, 1}) acc += double(s2 * s3) * (jacobian_(x + h * (s2 * v + s3 * w)) * u);
      }
      return acc / (4.0 * h * h);
    }
    for (int s1 : {-1, 1}) {
      for (int s2 : {-1, 1}) {
        for (int s3 : {-1, 1}) acc += double(s1 * s2 * s3) * eval_(x + h * (s1 * u + s2 * v + s3 * w));
      }
    }
    return acc / (8.0 * h * h * h);
  }

 private:
  std::string label_;
  Ball domain_;
  EvalFn eval_;
  JacobianFn jacobian_;
  MultilinearFn higher_;
  std::shared_ptr<const PolynomialField> poly_;
};

enum class LbMethod { declared, sampled };

inline std::string_view to_string(LbMethod m) { return m == LbMethod::declared ? "declared" : "sampled"; }

/// Record of a local bound on the s-jets of a family over a region.
struct LbRecord {
  int order_s = 0;
  double bound_k = 1.0;
  Ball region;
  LbMethod method = LbMethod::sampled;
};

/// An ordered family of local vector fields sharing a common domain.
struct FieldFamily {
  ChartSpace space;
  std::vector<VectorField> members;
  Ball common_domain;
  std::optional<LbRecord> declared_lb;

  FieldFamily() = default;
  FieldFamily(ChartSpace sp, std::vector<VectorField> fields, Ball domain)
      : space(sp), members(std::move(fields)), common_domain(std::move(domain)) {
    validate();
  }

  std::size_t size() const noexcept { return members.size(); }
  const VectorField& operator[](std::size_t i) const { return members.at(i); }

  std::optional<std::size_t> index_of(std::string_view label) const {
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (members[i].label() == label) return i;
    }
    return std::nullopt;
  }

  /// First `count` members, same domain.
  FieldFamily prefix(std::size_t count) const {
    FieldFamily f = *this;
    f.members.resize(std::min(count, members.size()));
    return f;
  }

  void validate() const {
    if (common_domain.center.size() != space.dimension)
      throw Error(ErrorKind::DimensionMismatch, "common domain dimension differs from chart");
    for (const auto& m : members) {
      if (m.dim() != space.dimension)
        throw Error(ErrorKind::DimensionMismatch, "field '" + m.label() + "' has the wrong dimension");
      if (!m.domain().contains(common_domain))
        throw Error(ErrorKind::InvalidArgument, "common domain is not inside the domain of '" + m.label() + "'");
    }
  }
};

struct JetOptions {
  int tuples = 64;
  int refine_sweeps = 12;
  std::uint64_t seed = 0x5eed;
};

namespace detail {

/// Estimates sup over unit tuples of ||T(u_1..u_m)|| by random search followed
/// by slot-wise exact maximization (each slot is a linear map).
inline double multilinear_norm(const VectorField& X, const Vector& x, int m, NormKind kind,
                               const JetOptions& opts) {
  const int n = X.dim();
  Rng rng(opts.seed + static_cast<std::uint64_t>(m));
  std::vector<Vector> best, dirs(static_cast<std::size_t>(m));
  double best_val = -1.0;
  for (int t = 0; t < opts.tuples; ++t) {
    for (auto& d : dirs) d = rng.unit_vector(n, kind);
    const double v = norm(X.derivative(x, dirs), kind);
    if (v > best_val) {
      best_val = v;
      best = dirs;
    }
  }
  if (best_val <= 0.0) return 0.0;
  for (int sweep = 0; sweep < opts.refine_sweeps; ++sweep) {
    const double before = best_val;
    for (int slot = 0; slot < m; ++slot) {
      Matrix slice(n, n);
      auto tuple = best;
      for (int j = 0; j < n; ++j) {
        tuple[static_cast<std::size_t>(slot)] = Vector::Unit(n, j);
        slice.col(j) = X.derivative(x, tuple);
      }
      auto [val, arg] = induced_norm(slice, kind);
      if (val > best_val) {
        best_val = val;
        best[static_cast<std::size_t>(slot)] = arg / norm(arg, kind);
      }
    }
    if (best_val - before <= 1e-14 * best_val) break;
  }
  return best_val;
}

}  // namespace detail

/// Sum over j = 0..s of the norm of D^j X(x): value norm, Jacobian operator
/// norm, then multilinear norms by tuple maximization.
inline double eval_jet_norm(const VectorField& X, const Vector& x, int s, const JetOptions& opts = {}) {
  if (s < 0) throw Error(ErrorKind::InvalidArgument, "jet order must be >= 0");
  if (s > 3 && !X.has_analytic_jets())
    throw Error(ErrorKind::OrderTooHigh, "jets above order 3 need analytic derivatives");
  X.require_in_domain(x);
  const NormKind kind = X.domain().norm_kind;
  double total = norm(X.eval_unchecked(x), kind);
  if (s >= 1) total += induced_norm(X.jacobian(x), kind).first;
  for (int m = 2; m <= s; ++m) total += detail::multilinear_norm(X, x, m, kind, opts);
  return total;
}

/// Sampling frame: points are drawn uniformly in `frame` (default: the
/// region itself) and those inside the region are used, together with the
/// region center. Nested regions sampled with the same frame and seed use
/// nested point sets.
struct LbSampling {
  std::uint64_t seed = 1;
  std::optional<Ball> frame;
  double safety = 1.25;
  JetOptions jet;
};

inline std::vector<Vector> lb_sample_points(const Ball& region, int samples, const LbSampling& cfg) {
  const Ball& frame = cfg.frame ? *cfg.frame : region;
  const int n = static_cast<int>(frame.center.size());
  Rng rng(cfg.seed);
  std::vector<Vector> pts{region.center};
  for (int i = 0; i < samples; ++i) {
    Vector p = frame.center + frame.radius * rng.in_unit_ball(n, frame.norm_kind);
    if (region.contains(p)) pts.push_back(std::move(p));
  }
  return pts;
}

inline LbRecord estimate_lb_bound(const FieldFamily& family, const Ball& region, int s, int samples,
                                  const LbSampling& cfg = {}) {
  if (samples < 1) throw Error(ErrorKind::InvalidArgument, "samples must be >= 1");
  if (family.declared_lb) {
    LbRecord rec = *family.declared_lb;
    rec.method = LbMethod::declared;
    return rec;
  }
  if (!family.common_domain.contains(region))
    throw Error(ErrorKind::OutOfDomain, "lb region is not inside the common domain");
  const auto pts = lb_sample_points(region, samples, cfg);
  std::vector<double> per_point(pts.size(), 0.0);
  parallel_for(pts.size(), [&](std::size_t i) {
    double m = 0.0;
    for (const auto& X : family.members) m = std::max(m, eval_jet_norm(X, pts[i], s, cfg.jet));
    per_point[i] = m;
  });
  const double sup = *std::max_element(per_point.begin(), per_point.end());
  LbRecord rec;
  rec.order_s = s;
  rec.bound_k = sup * cfg.safety;
  rec.region = region;
  rec.method = LbMethod::sampled;
  return rec;
}

}  // namespace orbitkit

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "orbitkit/errors.hpp"
#include "orbitkit/fields.hpp"
#include "orbitkit/integrator.hpp"
#include "orbitkit/space.hpp"

namespace orbitkit {

/// Piecewise-constant bounded control u: J -> R^A. Gaps between pieces are
/// the zero control, and so is everything outside the interval.
class Control {
 public:
  struct Piece {
    double t_begin;
    double t_end;
    L1Coefficients coeff;
  };

  Control() = default;

  Control(double t_start, double t_end, std::vector<Piece> pieces)
      : t_start_(t_start), t_end_(t_end), pieces_(std::move(pieces)) {
    if (!(t_end >= t_start)) throw Error(ErrorKind::InvalidArgument, "control interval is reversed");
    std::sort(pieces_.begin(), pieces_.end(), [](const Piece& a, const Piece& b) { return a.t_begin < b.t_begin; });
    double prev_end = t_start_;
    for (const auto& p : pieces_) {
      if (!(p.t_end > p.t_begin)) throw Error(ErrorKind::InvalidArgument, "empty or reversed control piece");
      if (p.t_begin < prev_end - 1e-15 * std::max(1.0, std::abs(prev_end)) || p.t_end > t_end_ + 1e-12)
        throw Error(ErrorKind::InvalidArgument, "control pieces overlap or leave the interval");
      prev_end = p.t_end;
      norm_inf_ = std::max(norm_inf_, p.coeff.norm1());
      norm_1_ += p.coeff.norm1() * (p.t_end - p.t_begin);
    }
  }

  static Control constant(L1Coefficients coeff, double t_start, double t_end) {
    if (t_end == t_start) return Control(t_start, t_end, {});
    return Control(t_start, t_end, {Piece{t_start, t_end, std::move(coeff)}});
  }

  double t_start() const noexcept { return t_start_; }
  double t_end() const noexcept { return t_end_; }
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }
  double norm_inf() const noexcept { return norm_inf_; }
  double norm_1() const noexcept { return norm_1_; }

  /// Value at time t (right-continuous on pieces).
  L1Coefficients at(double t) const {
    for (const auto& p : pieces_) {
      if (t >= p.t_begin && t < p.t_end) return p.coeff;
    }
    return {};
  }

  std::size_t max_index() const {
    std::size_t m = 0;
    for (const auto& p : pieces_) m = std::max(m, p.coeff.max_index());
    return m;
  }

  /// Ordered breakpoints where the integrand may jump, restricted to (a, b).
  std::vector<double> breakpoints(double a, double b) const {
    const double lo = std::min(a, b), hi = std::max(a, b);
    std::vector<double> out;
    for (const auto& p : pieces_) {
      for (double t : {p.t_begin, p.t_end}) {
        if (t > lo && t < hi) out.push_back(t);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (b < a) std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  double t_start_ = 0.0;
  double t_end_ = 0.0;
  std::vector<Piece> pieces_;
  double norm_inf_ = 0.0;
  double norm_1_ = 0.0;
};

/// Hypothesis record for the existence radius: r, k, c, T', T0 and whether
/// T0 < min(r/(k c), T') with the doubled closed ball inside the region.
struct ExistenceCertificate {
  double r = 0.0;
  double k = 0.0;
  double c = 0.0;
  double T_prime = std::numeric_limits<double>::infinity();
  double T0 = 0.0;
  bool satisfied = false;
  double margin = 0.0;

  /// r / (k c), infinite when k c = 0.
  double time_radius() const {
    const double kc = k * c;
    return kc > 0.0 ? r / kc : std::numeric_limits<double>::infinity();
  }
};

/// Largest r with the closed ball B(x0, 2r) inside `region`.
inline double guard_radius(const Ball& region, const Vector& x0) {
  return 0.5 * (region.radius - region.distance_from_center(x0));
}

inline ExistenceCertificate check_existence(const FieldFamily& family, const LbRecord& lb, const Control& u,
                                            const Vector& x0, double T0,
                                            double T_prime = std::numeric_limits<double>::infinity()) {
  if (!family.common_domain.contains(lb.region))
    throw Error(ErrorKind::InvalidArgument, "lb region is not inside the common domain");
  ExistenceCertificate cert;
  cert.r = guard_radius(lb.region, x0);
  if (!(cert.r > 0.0)) throw Error(ErrorKind::DomainTooSmall, "no positive existence radius around x0");
  cert.k = lb.bound_k;
  cert.c = u.norm_inf();
  cert.T_prime = T_prime;
  cert.T0 = T0;
  cert.margin = std::min(cert.time_radius(), T_prime) - T0;
  cert.satisfied = cert.margin > 0.0;
  return cert;
}

struct FlowOptions {
  double tol = 1e-9;
  bool with_variational = false;
  /// Skip the existence guard; recorded in the result.
  bool unsafe = false;
  /// Keep every accepted step in the trajectory (endpoint is always kept).
  bool record_trajectory = true;
};

struct FlowResult {
  std::vector<double> times;
  std::vector<Vector> points;
  Vector endpoint;
  std::vector<Matrix> variational;
  Matrix endpoint_variational;
  long steps_taken = 0;
  long steps_rejected = 0;
  double est_local_error = 0.0;
  bool unsafe_override = false;
  std::optional<ExistenceCertificate> certificate;
};

namespace detail {

struct ActiveTerm {
  const VectorField* field;
  double coef;
};

/// Integrates x' = sum_a u_a(t) X_a(x) from t0 to t1, restarting at every
/// control breakpoint. Leaving `region` raises LeftDomain.
inline FlowResult integrate_controlled(std::span<const VectorField> members, const Control& u, const Vector& x0,
                                       double t0, double t1, const Ball& region, const FlowOptions& opts) {
  const auto n = x0.size();
  if (!u.pieces().empty() && u.max_index() >= members.size())
    throw Error(ErrorKind::InvalidArgument, "control references a member outside the family");
  if (!region.contains(x0, 1e-12)) throw Error(ErrorKind::LeftDomain, "initial point outside the region");

  FlowResult res;
  const bool var = opts.with_variational;
  const Eigen::Index state_dim = var ? n + n * n : n;
  Vector y(state_dim);
  y.head(n) = x0;
  if (var) {
    Matrix id = Matrix::Identity(n, n);
    y.tail(n * n) = Eigen::Map<const Vector>(id.data(), n * n);
  }

  auto record = [&](double t, const Vector& state) {
    res.times.push_back(t);
    res.points.push_back(state.head(n));
    if (var) res.variational.push_back(Eigen::Map<const Matrix>(state.tail(n * n).data(), n, n));
  };
  record(t0, y);

  std::vector<double> knots{t0};
  for (double b : u.breakpoints(t0, t1)) knots.push_back(b);
  knots.push_back(t1);

  DormandPrince54 stepper(opts.tol);
  double h_hint = 0.0;
  std::vector<ActiveTerm> active;
  for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
    const double a = knots[seg], b = knots[seg + 1];
    if (a == b) continue;
    const auto coeff = u.at(0.5 * (a + b));
    active.clear();
    for (const auto& e : coeff.entries()) active.push_back({&members[e.index], e.value});
    if (active.empty()) continue;

    auto rhs = [&](const Vector& state, Vector& dstate) {
      dstate.resize(state.size());
      const Vector x = state.head(n);
      Vector dx = Vector::Zero(n);
      for (const auto& term : active) dx += term.coef * term.field->eval_unchecked(x);
      dstate.head(n) = dx;
      if (var) {
        Matrix dz = Matrix::Zero(n, n);
        for (const auto& term : active) dz += term.coef * term.field->jacobian(x);
        Eigen::Map<const Matrix> v(state.tail(n * n).data(), n, n);
        Matrix dv = dz * v;
        dstate.tail(n * n) = Eigen::Map<const Vector>(dv.data(), n * n);
      }
    };
    auto observe = [&](double t, const Vector& state) {
      if (!state.head(n).allFinite() || !region.contains(state.head(n), 1e-12))
        throw Error(ErrorKind::LeftDomain, "trajectory left the region at t = " + format_double(t));
      if (opts.record_trajectory || t == b) record(t, state);
      return true;
    };
    const auto stats = stepper.integrate(rhs, y, a, b, h_hint, observe);
    res.steps_taken += stats.accepted;
    res.steps_rejected += stats.rejected;
    res.est_local_error += stats.error_estimate;
  }
  if (res.times.back() != t1) record(t1, y);
  res.endpoint = y.head(n);
  res.endpoint_variational =
      var ? Matrix(Eigen::Map<const Matrix>(y.tail(n * n).data(), n, n)) : Matrix();
  return res;
}

}  // namespace detail

/// Controlled flow from x0 at t0 to t1 (t1 < t0 integrates backward).
inline FlowResult flow_control(const FieldFamily& family, const LbRecord& lb, const Control& u, const Vector& x0,
                               double t0, double t1, const FlowOptions& opts = {}) {
  if (x0.size() != family.space.dimension)
    throw Error(ErrorKind::DimensionMismatch, "initial point has the wrong dimension");
  std::optional<ExistenceCertificate> cert;
  try {
    cert = check_existence(family, lb, u, x0, std::abs(t1 - t0));
  } catch (const Error&) {
    if (!opts.unsafe) throw;
  }
  if (!opts.unsafe && !cert->satisfied)
    throw Error(ErrorKind::GuardViolated, "T0 = " + format_double(std::abs(t1 - t0)) +
                                              " is not below min(r/(k c), T') = " +
                                              format_double(cert->T0 + cert->margin));
  auto res = detail::integrate_controlled(family.members, u, x0, t0, t1, lb.region, opts);
  res.certificate = cert;
  res.unsafe_override = opts.unsafe && !(cert && cert->satisfied);
  return res;
}

/// Flow of a single field for time t (negative t runs the reversed field).
/// Only the field's own domain is enforced; there is no existence guard.
inline FlowResult flow_single(const VectorField& X, const Vector& x0, double t, const FlowOptions& opts = {}) {
  if (t == 0.0) {
    FlowResult res;
    res.times = {0.0};
    res.points = {x0};
    res.endpoint = x0;
    if (opts.with_variational) {
      res.endpoint_variational = Matrix::Identity(x0.size(), x0.size());
      res.variational = {res.endpoint_variational};
    }
    return res;
  }
  const Control u = Control::constant(L1Coefficients::unit(0), std::min(0.0, t), std::max(0.0, t));
  return detail::integrate_controlled(std::span<const VectorField>(&X, 1), u, x0, 0.0, t, X.domain(), opts);
}

}  // namespace orbitkit

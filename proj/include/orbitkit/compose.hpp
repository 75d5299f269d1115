#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orbitkit/errors.hpp"
#include "orbitkit/fields.hpp"
#include "orbitkit/flow.hpp"
#include "orbitkit/space.hpp"

namespace orbitkit {

enum class Direction { forward, reverse };

/// Bang-bang control switching through X_i for |tau_i| time units with sign
/// tau_i / |tau_i|. The reverse control is s -> Gamma(|tau|_1 - s).
struct BangBangControl {
  L1Coefficients tau;
  Direction direction = Direction::forward;
  double length = 0.0;
  Control control;
};

inline BangBangControl gamma_control(const L1Coefficients& tau, Direction direction = Direction::forward) {
  double length = 0.0;
  for (const auto& e : tau.entries()) length += std::abs(e.value);
  std::vector<Control::Piece> pieces;
  double acc = 0.0;
  for (const auto& e : tau.entries()) {
    const double d = std::abs(e.value);
    const L1Coefficients coeff = L1Coefficients::unit(e.index, e.value > 0 ? 1.0 : -1.0);
    if (direction == Direction::forward) {
      pieces.push_back({acc, acc + d, coeff});
    } else {
      pieces.push_back({length - (acc + d), length - acc, coeff});
    }
    acc += d;
  }
  return {tau, direction, length, Control(0.0, length, std::move(pieces))};
}

/// One factor phi^{X_index}_{duration} of a flow composition.
struct Letter {
  std::size_t index;
  double duration;
  friend bool operator==(const Letter&, const Letter&) = default;
};

using Word = std::vector<Letter>;

struct ComposeOptions {
  double tol = 1e-9;
  bool unsafe = false;
  /// Explicit truncation level; when unset the smallest level meeting tol is used.
  std::optional<std::size_t> truncation;
};

struct CompositionResult {
  Vector endpoint;
  std::size_t truncation_n = 0;
  double tail_mass = 0.0;
  double tail_error_bound = 0.0;
  /// k * exp(k |tau|_1), the factor applied to the dropped mass.
  double bound_factor = 0.0;
  Word word;
  /// Point after each letter; knots[0] is the start point.
  std::vector<Vector> knots;
  Vector start;
  bool inverse = false;
  long steps_taken = 0;
  bool unsafe_override = false;
  std::optional<ExistenceCertificate> certificate;
};

namespace detail {

struct TruncationChoice {
  Truncation trunc;
  std::size_t n;
  double factor;
};

inline TruncationChoice choose_truncation(const L1Coefficients& tau, double k, const ComposeOptions& opts) {
  // The dropped factors move any point by at most k * tail (|X| <= k on the
  // region); the extra exp(k |tau|_1) covers the Lipschitz growth of the
  // composition, so the bound stays valid whichever side the tail sits.
  const double factor = k * std::exp(k * tau.norm1());
  if (opts.truncation) {
    const std::size_t n = std::min(*opts.truncation, tau.size());
    return {truncate(tau, n), n, factor};
  }
  for (std::size_t n = 0; n <= tau.size(); ++n) {
    auto t = truncate(tau, n);
    if (factor * t.tail <= opts.tol) return {std::move(t), n, factor};
  }
  throw Error(ErrorKind::TailNotSummable, "tail bound " + format_double(tau.tail_bound()) +
                                              " keeps the truncation error above tol at every level");
}

inline ExistenceCertificate composition_guard(const FieldFamily& family, const LbRecord& lb,
                                              const L1Coefficients& tau, const Vector& x, bool unsafe,
                                              std::optional<ExistenceCertificate>& out) {
  const Control unit_speed = Control::constant(L1Coefficients::unit(0), 0.0, 1.0);
  try {
    out = check_existence(family, lb, unit_speed, x, tau.norm1());
  } catch (const Error&) {
    if (!unsafe) throw;
    return {};
  }
  if (!unsafe && !out->satisfied)
    throw Error(ErrorKind::GuardViolated, "|tau|_1 = " + format_double(tau.norm1()) + " is not below r/k = " +
                                              format_double(out->time_radius()));
  return *out;
}

inline Word word_of(const L1Coefficients& kept) {
  Word w;
  for (const auto& e : kept.entries()) w.push_back({e.index, e.value});
  return w;
}

inline void require_members(const FieldFamily& family, const L1Coefficients& tau) {
  if (!tau.empty() && tau.max_index() >= family.size())
    throw Error(ErrorKind::InvalidArgument, "tau references a member outside the family");
}

}  // namespace detail

/// phi^xi_tau(x): the truncated composition realized as one controlled flow
/// under Gamma^tau, with a tail error bound for the dropped factors.
inline CompositionResult compose_flows(const FieldFamily& family, const LbRecord& lb, const L1Coefficients& tau,
                                       const Vector& x, const ComposeOptions& opts = {}) {
  detail::require_members(family, tau);
  CompositionResult res;
  detail::composition_guard(family, lb, tau, x, opts.unsafe, res.certificate);
  auto choice = detail::choose_truncation(tau, lb.bound_k, opts);
  res.truncation_n = choice.n;
  res.tail_mass = choice.trunc.tail;
  res.bound_factor = choice.factor;
  res.tail_error_bound = choice.factor * choice.trunc.tail;
  res.word = detail::word_of(choice.trunc.kept);
  res.start = x;
  res.unsafe_override = opts.unsafe && !(res.certificate && res.certificate->satisfied);

  const auto bang = gamma_control(choice.trunc.kept, Direction::forward);
  FlowOptions fo;
  fo.tol = opts.tol;
  fo.unsafe = true;  // guard already checked against the full tau
  const auto flow = detail::integrate_controlled(family.members, bang.control, x, 0.0, bang.length, lb.region, fo);
  res.endpoint = flow.endpoint;
  res.steps_taken = flow.steps_taken;

  res.knots.push_back(x);
  for (const auto& piece : bang.control.pieces()) {
    auto it = std::find(flow.times.begin(), flow.times.end(), piece.t_end);
    res.knots.push_back(it != flow.times.end() ? flow.points[static_cast<std::size_t>(it - flow.times.begin())]
                                               : flow.endpoint);
  }
  return res;
}

/// Inverse composition: phi^{X_1}_{-tau_1} o ... o phi^{X_m}_{-tau_m}(y),
/// realized by running the Gamma^tau flow backward from |tau|_1 to 0.
inline CompositionResult compose_inverse(const FieldFamily& family, const LbRecord& lb, const L1Coefficients& tau,
                                         const Vector& y, const ComposeOptions& opts = {}) {
  detail::require_members(family, tau);
  CompositionResult res;
  detail::composition_guard(family, lb, tau, y, opts.unsafe, res.certificate);
  auto choice = detail::choose_truncation(tau, lb.bound_k, opts);
  res.truncation_n = choice.n;
  res.tail_mass = choice.trunc.tail;
  res.bound_factor = choice.factor;
  res.tail_error_bound = choice.factor * choice.trunc.tail;
  res.start = y;
  res.inverse = true;
  res.unsafe_override = opts.unsafe && !(res.certificate && res.certificate->satisfied);
  for (auto it = choice.trunc.kept.entries().rbegin(); it != choice.trunc.kept.entries().rend(); ++it)
    res.word.push_back({it->index, -it->value});

  const auto bang = gamma_control(choice.trunc.kept, Direction::forward);
  FlowOptions fo;
  fo.tol = opts.tol;
  fo.unsafe = true;
  const auto flow = detail::integrate_controlled(family.members, bang.control, y, bang.length, 0.0, lb.region, fo);
  res.endpoint = flow.endpoint;
  res.steps_taken = flow.steps_taken;

  res.knots.push_back(y);
  const auto& pieces = bang.control.pieces();
  for (auto it = pieces.rbegin(); it != pieces.rend(); ++it) {
    auto pos = std::find(flow.times.begin(), flow.times.end(), it->t_begin);
    res.knots.push_back(pos != flow.times.end() ? flow.points[static_cast<std::size_t>(pos - flow.times.begin())]
                                                : flow.endpoint);
  }
  return res;
}

/// Applies a word letter by letter with single-field flows, restricted to
/// `region`. Independent of the Gamma^tau control path.
inline Vector apply_word(const FieldFamily& family, const Word& word, const Vector& x, const Ball& region,
                         double tol = 1e-9) {
  Vector p = x;
  FlowOptions fo;
  fo.tol = tol;
  fo.record_trajectory = false;
  for (const auto& letter : word) {
    if (letter.index >= family.size()) throw Error(ErrorKind::InvalidArgument, "word letter outside the family");
    if (letter.duration == 0.0) continue;
    const Control u = Control::constant(L1Coefficients::unit(letter.index),
                                        std::min(0.0, letter.duration), std::max(0.0, letter.duration));
    p = detail::integrate_controlled(family.members, u, p, 0.0, letter.duration, region, fo).endpoint;
  }
  return p;
}

/// Inverse of a word: reversed letters with negated durations.
inline Word inverse_word(const Word& word) {
  Word out;
  for (auto it = word.rbegin(); it != word.rend(); ++it) out.push_back({it->index, -it->duration});
  return out;
}

/// Psi^x(tau) = phi^xi_tau(x).
inline Vector psi_chart(const FieldFamily& family, const LbRecord& lb, const Vector& x, const L1Coefficients& tau,
                        const ComposeOptions& opts = {}) {
  return compose_flows(family, lb, tau, x, opts).endpoint;
}

struct DPsiResult {
  /// L(tau)(sigma).
  Vector value;
  /// R(tau) applied to sum sigma_a X_a(x): the pulled-back field values.
  Vector pulled_back;
  /// Delta psi(tau): the full forward variational matrix of the composition.
  Matrix delta_psi;
};

/// Differential of the chart map: L(tau)(sigma) = Delta psi(tau) R(tau)(sigma),
/// where R pulls each X_a(psi_a(tau^a)) back to x through the inverse
/// variational matrices of the letters preceding and including a.
inline DPsiResult d_psi(const FieldFamily& family, const LbRecord& lb, const Vector& x, const L1Coefficients& tau,
                        const L1Coefficients& sigma, const ComposeOptions& opts = {}) {
  detail::require_members(family, tau);
  detail::require_members(family, sigma);
  std::optional<ExistenceCertificate> cert;
  detail::composition_guard(family, lb, tau, x, opts.unsafe, cert);
  if (!opts.unsafe && cert && !(sigma.norm1() < cert->time_radius()))
    throw Error(ErrorKind::GuardViolated, "|sigma|_1 exceeds the guard radius");
  const auto kept = detail::choose_truncation(tau, lb.bound_k, opts).trunc.kept;

  std::vector<std::size_t> order;
  for (const auto& e : kept.entries()) order.push_back(e.index);
  for (const auto& e : sigma.entries()) order.push_back(e.index);
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());

  const auto n = x.size();
  FlowOptions fo;
  fo.tol = opts.tol;
  fo.with_variational = true;
  fo.record_trajectory = false;

  std::vector<Eigen::PartialPivLU<Matrix>> factors;
  Matrix total = Matrix::Identity(n, n);
  Vector pulled = Vector::Zero(n);
  Vector p = x;
  for (std::size_t idx : order) {
    const double t = kept.value_at(idx);
    if (t != 0.0) {
      const Control u = Control::constant(L1Coefficients::unit(idx), std::min(0.0, t), std::max(0.0, t));
      const auto step = detail::integrate_controlled(family.members, u, p, 0.0, t, lb.region, fo);
      p = step.endpoint;
      factors.emplace_back(step.endpoint_variational);
      total = step.endpoint_variational * total;
    }
    const double s = sigma.value_at(idx);
    if (s != 0.0) {
      Vector v = family.members[idx].eval_unchecked(p);
      for (auto it = factors.rbegin(); it != factors.rend(); ++it) v = it->solve(v);
      pulled += s * v;
    }
  }
  return {total * pulled, pulled, total};
}

struct L1Curve {
  std::vector<double> s;
  std::vector<Vector> points;
  /// Subdivision t_k = sum_{j <= k} |tau_j|.
  std::vector<double> knot_times;
  double max_knot_gap = 0.0;
};

/// Samples the piecewise integral curve joining the start point to the
/// endpoint of a composition, one segment per letter.
inline L1Curve extract_l1_curve(const FieldFamily& family, const LbRecord& lb, const CompositionResult& result,
                                int samples_per_piece, double tol = 1e-9) {
  if (samples_per_piece < 1) samples_per_piece = 1;
  L1Curve curve;
  curve.knot_times.push_back(0.0);
  curve.s.push_back(0.0);
  curve.points.push_back(result.start);
  FlowOptions fo;
  fo.tol = tol;
  fo.record_trajectory = false;
  double t_acc = 0.0;
  for (std::size_t k = 0; k < result.word.size(); ++k) {
    const auto& letter = result.word[k];
    const double len = std::abs(letter.duration);
    const double sign = letter.duration > 0 ? 1.0 : -1.0;
    Vector p = k < result.knots.size() ? result.knots[k] : curve.points.back();
    const Control u = Control::constant(L1Coefficients::unit(letter.index), -len, len);
    for (int j = 1; j <= samples_per_piece; ++j) {
      const double a = sign * len * (j - 1) / samples_per_piece;
      const double b = sign * len * j / samples_per_piece;
      p = detail::integrate_controlled(family.members, u, p, a, b, lb.region, fo).endpoint;
      curve.s.push_back(t_acc + len * j / samples_per_piece);
      curve.points.push_back(p);
    }
    t_acc += len;
    curve.knot_times.push_back(t_acc);
    if (k + 1 < result.knots.size()) {
      curve.max_knot_gap = std::max(curve.max_knot_gap, norm(p - result.knots[k + 1], lb.region.norm_kind));
    }
  }
  return curve;
}

}  // namespace orbitkit

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "orbitkit/algebra.hpp"
#include "orbitkit/compose.hpp"
#include "orbitkit/distribution.hpp"
#include "orbitkit/errors.hpp"
#include "orbitkit/fields.hpp"
#include "orbitkit/flow.hpp"
#include "orbitkit/parallel.hpp"
#include "orbitkit/random.hpp"

namespace orbitkit {

/// Characteristic distribution at x: values of every member, plus any
/// supplied enlarged fields.
inline DistributionBasis distribution_at(const FieldFamily& family, const Vector& x,
                                         std::span<const VectorField> enlarged = {}) {
  std::vector<VectorField> sources = family.members;
  sources.insert(sources.end(), enlarged.begin(), enlarged.end());
  return make_basis(x, std::move(sources));
}

/// Lower trivialization Psi_y(w) = sum_a w_a Y_a(y) over the basis sources.
inline Vector trivialization_eval(const DistributionBasis& basis, const L1Coefficients& w, const Vector& y) {
  Vector out = Vector::Zero(y.size());
  for (const auto& e : w.entries()) {
    if (e.index >= basis.sources.size())
      throw Error(ErrorKind::InvalidArgument, "coefficient index outside the basis sources");
    out += e.value * basis.sources[e.index].eval(y);
  }
  return out;
}

struct SliceResult {
  std::vector<std::size_t> axes;
  double rho = 0.0;
  std::vector<Vector> params;
  std::vector<Vector> points;
  /// Grid nodes with |w|_1 at or beyond the guard radius are not evaluated.
  std::size_t skipped = 0;
  int jacobian_rank_at_zero = 0;
  double guard_radius = 0.0;
};

/// Grid of Theta(w) = phi^xi_tau(x) with tau supported on `axes` and
/// |w_axis| <= rho.
inline SliceResult slice(const FieldFamily& family, const LbRecord& lb, const Vector& x, double rho,
                         int grid_per_axis, const std::vector<std::size_t>& axes, const ComposeOptions& opts = {}) {
  if (axes.empty() || axes.size() > 3) throw Error(ErrorKind::InvalidArgument, "slice needs 1 to 3 axes");
  for (auto a : axes) {
    if (a >= family.size()) throw Error(ErrorKind::InvalidArgument, "slice axis outside the family");
  }
  SliceResult res;
  res.axes = axes;
  res.rho = rho;
  const double r = guard_radius(lb.region, x);
  if (!(r > 0.0)) throw Error(ErrorKind::DomainTooSmall, "no positive existence radius around x");
  res.guard_radius = lb.bound_k > 0 ? r / lb.bound_k : HUGE_VAL;
  if (!opts.unsafe && !(rho < res.guard_radius))
    throw Error(ErrorKind::GuardViolated, "rho = " + format_double(rho) + " is not below r/k = " +
                                              format_double(res.guard_radius));

  // L(0) is linear in sigma; a short direction keeps sigma inside the guard
  const double h = std::isfinite(res.guard_radius) ? 0.5 * res.guard_radius : 1.0;
  Matrix jac(x.size(), static_cast<Eigen::Index>(axes.size()));
  for (std::size_t i = 0; i < axes.size(); ++i)
    jac.col(static_cast<Eigen::Index>(i)) = d_psi(family, lb, x, {}, L1Coefficients::unit(axes[i], h), opts).value / h;
  res.jacobian_rank_at_zero = numerical_rank(jac);

  const int g = std::max(grid_per_axis, 1);
  std::vector<int> idx(axes.size(), 0);
  while (true) {
    Vector w(static_cast<Eigen::Index>(axes.size()));
    for (std::size_t i = 0; i < axes.size(); ++i)
      w(static_cast<Eigen::Index>(i)) = g == 1 ? 0.0 : rho * (-1.0 + 2.0 * idx[i] / (g - 1));
    if (opts.unsafe || w.cwiseAbs().sum() < res.guard_radius) {
      res.params.push_back(w);
    } else {
      ++res.skipped;
    }
    std::size_t a = 0;
    while (a < axes.size() && ++idx[a] == g) idx[a++] = 0;
    if (a == axes.size()) break;
  }
  res.points.resize(res.params.size());
  parallel_for(res.params.size(), [&](std::size_t i) {
    std::vector<L1Coefficients::Entry> e;
    for (std::size_t k = 0; k < axes.size(); ++k) e.push_back({axes[k], res.params[i](static_cast<Eigen::Index>(k))});
    res.points[i] = compose_flows(family, lb, L1Coefficients(std::move(e)), x, opts).endpoint;
  });
  return res;
}

struct OrbitPoint {
  Vector point;
  Word word;
  /// The generated word left the region; it was cut at the last valid letter.
  bool truncated = false;
};

struct OrbitSample {
  Vector seed;
  std::vector<OrbitPoint> cloud;
  std::size_t budget_used = 0;
  double d_max = 0.0;
};

struct OrbitOptions {
  double tol = 1e-9;
  /// Overrides the default duration scale of half the guard radius r/k.
  std::optional<double> d_max;
  /// Word lengths are uniform in [min_word_len, max_word_len].
  int min_word_len = 1;
};

/// Random flow words from x; the cloud is assembled in generation order, so
/// the result depends only on rng_seed.
inline OrbitSample orbit_sample(const FieldFamily& family, const LbRecord& lb, const Vector& x, std::size_t budget,
                                int max_word_len, std::uint64_t rng_seed, const OrbitOptions& opts = {}) {
  if (budget < 1) throw Error(ErrorKind::InvalidArgument, "budget must be >= 1");
  if (family.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty family");
  OrbitSample out;
  out.seed = x;
  const double r = guard_radius(lb.region, x);
  if (!(r > 0.0)) throw Error(ErrorKind::DomainTooSmall, "no positive existence radius around the seed");
  out.d_max = opts.d_max.value_or(0.5 * (lb.bound_k > 0 ? r / lb.bound_k : r));

  const int min_len = std::max(opts.min_word_len, 1);
  if (max_word_len > 0 && min_len > max_word_len)
    throw Error(ErrorKind::InvalidArgument, "min_word_len exceeds max_word_len");

  std::vector<Word> words{Word{}};
  if (max_word_len > 0) {
    Rng rng(rng_seed);
    for (std::size_t i = 1; i < budget; ++i) {
      const std::size_t len =
          static_cast<std::size_t>(min_len) + rng.index(static_cast<std::size_t>(max_word_len - min_len + 1));
      Word w;
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t idx = rng.index(family.size());
        w.push_back({idx, rng.uniform(-out.d_max, out.d_max)});
      }
      words.push_back(std::move(w));
    }
  }
  out.cloud.resize(words.size());
  parallel_for(words.size(), [&](std::size_t i) {
    OrbitPoint pt{x, {}, false};
    for (const auto& letter : words[i]) {
      try {
        pt.point = apply_word(family, Word{letter}, pt.point, lb.region, opts.tol);
        pt.word.push_back(letter);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::LeftDomain) throw;
        pt.truncated = true;
        break;
      }
    }
    out.cloud[i] = std::move(pt);
  });
  out.budget_used = out.cloud.size();
  return out;
}

enum class VerdictKind { exactly_controllable, approximately_controllable, rank_deficient };

inline std::string_view to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::exactly_controllable: return "exactly_controllable";
    case VerdictKind::approximately_controllable: return "approximately_controllable";
    case VerdictKind::rank_deficient: return "rank_deficient";
  }
  return "rank_deficient";
}

struct Verdict {
  VerdictKind kind = VerdictKind::rank_deficient;
  std::vector<int> rank_profile;
  /// Generation at which the rank saturated (exact case).
  int k = 0;
  int dimension = 0;
  int limiting_rank = 0;
  /// Final chain ranks for truncations N, N+5, N+10 of the family (l1 charts).
  std::vector<std::size_t> truncation_levels;
  std::vector<int> truncation_ranks;
};

/// Rank-condition verdict from the bracket chain. On l1 truncations a
/// deficient chain is called approximately controllable when its final rank
/// grows strictly across family truncations N, N+5, N+10.
inline Verdict accessibility_verdict(const FieldFamily& family, const Vector& x, int k_max) {
  Verdict v;
  v.dimension = family.space.dimension;
  const auto chain = bracket_chain(family, x, k_max);
  v.rank_profile = chain.rank_profile;
  v.limiting_rank = chain.rank_profile.empty() ? 0 : chain.rank_profile.back();
  if (chain.saturated_at > 0) {
    v.kind = VerdictKind::exactly_controllable;
    v.k = chain.saturated_at;
    return v;
  }
  v.kind = VerdictKind::rank_deficient;
  if (family.space.truncation_of_l1 && family.size() > 10) {
    const std::size_t top = family.size();
    v.truncation_levels = {top - 10, top - 5, top};
    for (auto level : v.truncation_levels) {
      const auto sub = bracket_chain(family.prefix(level), x, k_max);
      v.truncation_ranks.push_back(sub.rank_profile.back());
    }
    if (v.truncation_ranks[0] < v.truncation_ranks[1] && v.truncation_ranks[1] < v.truncation_ranks[2])
      v.kind = VerdictKind::approximately_controllable;
  }
  return v;
}

struct InvarianceReport {
  Vector source;
  Vector target;
  int source_rank = 0;
  int target_rank = 0;
  /// Largest relative distance of a pushed basis vector from the target span.
  double residual = 0.0;
  std::vector<double> per_vector;
};

/// Pushes the distribution at x forward by D phi^{X_member}_t and measures
/// how far the pushed vectors sit from the distribution at the image point.
inline InvarianceReport invariance_residual(const FieldFamily& family, const Vector& x, std::size_t member, double t,
                                            std::span<const VectorField> enlarged = {}, double tol = 1e-10) {
  if (member >= family.size()) throw Error(ErrorKind::InvalidArgument, "member index outside the family");
  InvarianceReport rep;
  rep.source = x;
  FlowOptions fo;
  fo.tol = tol;
  fo.with_variational = true;
  fo.record_trajectory = false;
  const auto fl = flow_single(family.members[member], x, t, fo);
  rep.target = fl.endpoint;
  const auto src = distribution_at(family, x, enlarged);
  const auto dst = distribution_at(family, rep.target, enlarged);
  rep.source_rank = src.rank;
  rep.target_rank = dst.rank;
  for (Eigen::Index j = 0; j < src.vectors.cols(); ++j) {
    const Vector pushed = fl.endpoint_variational * src.vectors.col(j);
    const double r = dst.relative_residual(pushed);
    rep.per_vector.push_back(r);
    rep.residual = std::max(rep.residual, r);
  }
  return rep;
}

}  // namespace orbitkit

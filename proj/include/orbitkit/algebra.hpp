#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "orbitkit/compose.hpp"
#include "orbitkit/distribution.hpp"
#include "orbitkit/errors.hpp"
#include "orbitkit/fields.hpp"
#include "orbitkit/flow.hpp"
#include "orbitkit/parallel.hpp"
#include "orbitkit/space.hpp"

namespace orbitkit {

/// [X, Y](x) = DY(x) X(x) - DX(x) Y(x). Analytic Jacobians are used when
/// present, otherwise central differences of the Jacobian-vector products.
inline Vector lie_bracket(const VectorField& X, const VectorField& Y, const Vector& x) {
  X.require_in_domain(x);
  Y.require_in_domain(x);
  if (const auto* px = X.polynomial()) {
    if (const auto* py = Y.polynomial()) return bracket(*px, *py).eval(x);
  }
  const Vector xv = X.eval_unchecked(x);
  const Vector yv = Y.eval_unchecked(x);
  const Vector xs[1] = {xv};
  const Vector ys[1] = {yv};
  return Y.derivative(x, xs) - X.derivative(x, ys);
}

/// Diagnostic route: (1/t) ((phi^X_{-t})_* Y - Y)(x), central in t, which
/// tends to DY X - DX Y as t -> 0.
inline Vector lie_bracket_by_flows(const VectorField& X, const VectorField& Y, const Vector& x, double t = 1e-3,
                                   double tol = 1e-12) {
  FlowOptions fo;
  fo.tol = tol;
  fo.with_variational = true;
  fo.record_trajectory = false;
  auto pushed = [&](double s) {
    // (phi_s)_* Y at x = D phi_s(phi_{-s} x) Y(phi_{-s} x)
    const Vector z = flow_single(X, x, -s, fo).endpoint;
    const auto fw = flow_single(X, z, s, fo);
    return Vector(fw.endpoint_variational * Y.eval_unchecked(z));
  };
  return (pushed(-t) - pushed(t)) / (2.0 * t);
}

/// Field-valued bracket: exact for polynomial fields, numerical otherwise.
inline VectorField lie_bracket_field(const VectorField& X, const VectorField& Y) {
  std::string label = "[" + X.label() + "," + Y.label() + "]";
  if (X.polynomial() && Y.polynomial())
    return VectorField::from_polynomial(std::move(label), X.domain(), bracket(*X.polynomial(), *Y.polynomial()));
  return VectorField(std::move(label), X.domain(), [X, Y](const Vector& p) { return lie_bracket(X, Y, p); });
}

/// Flow composition, pushforward and Jacobian along a word.
struct WordFlow {
  Vector endpoint;
  Matrix variational;
};

inline WordFlow word_flow(const FieldFamily& family, const Word& word, const Vector& x, const Ball& region,
                          double tol, bool with_variational) {
  const auto n = x.size();
  WordFlow out{x, Matrix::Identity(n, n)};
  FlowOptions fo;
  fo.tol = tol;
  fo.with_variational = with_variational;
  fo.record_trajectory = false;
  for (const auto& letter : word) {
    if (letter.index >= family.size()) throw Error(ErrorKind::InvalidArgument, "word letter outside the family");
    if (letter.duration == 0.0) continue;
    const double t = letter.duration;
    const Control u = Control::constant(L1Coefficients::unit(letter.index), std::min(0.0, t), std::max(0.0, t));
    try {
      const auto step = detail::integrate_controlled(family.members, u, out.endpoint, 0.0, t, region, fo);
      out.endpoint = step.endpoint;
      if (with_variational) out.variational = step.endpoint_variational * out.variational;
    } catch (const Error& e) {
      throw Error(ErrorKind::WordNotIntegrable, e.what());
    }
  }
  return out;
}

struct EnlargeOptions {
  /// Tolerance of the inner word integrations behind every evaluation.
  double inner_tol = 1e-12;
  /// Jet order used for membership screening at the anchor; defaults to the
  /// lb order clamped to 3.
  std::optional<int> screen_order;
  bool screen = true;
};

/// Y = (Phi_word)_*(nu X), a member of the enlarged family.
struct EnlargedField {
  std::size_t base_index = 0;
  Word word;
  double nu = 1.0;
  VectorField field;
  /// Jet norm at the anchor against lb.bound_k; excluded fields are still
  /// returned for study.
  double screened_jet_norm = 0.0;
  int screened_order = 0;
  bool excluded = false;
};

/// Pushforward of an arbitrary field Y by the word's flow composition Phi:
/// p -> D Phi(Phi^{-1} p) nu Y(Phi^{-1} p).
inline VectorField conjugate_field(const FieldFamily& family, const Ball& region, const Word& word,
                                   const VectorField& Y, double nu, double inner_tol, std::string label) {
  if (!(nu > 0.0)) throw Error(ErrorKind::InvalidArgument, "nu must be positive");
  auto fam = std::make_shared<const FieldFamily>(family);
  const Word inverse = inverse_word(word);
  auto eval = [fam, region, word, inverse, Y, nu, inner_tol](const Vector& p) -> Vector {
    const Vector z = word_flow(*fam, inverse, p, region, inner_tol, false).endpoint;
    const auto fw = word_flow(*fam, word, z, region, inner_tol, true);
    return fw.variational * (nu * Y.eval_unchecked(z));
  };
  return VectorField(std::move(label), region, std::move(eval));
}

namespace detail {

inline std::string word_label(const FieldFamily& family, const Word& word) {
  std::string s;
  for (const auto& l : word) {
    if (!s.empty()) s += ",";
    s += family.members.at(l.index).label() + ":" + format_double(l.duration);
  }
  return s;
}

inline void screen(EnlargedField& f, const LbRecord& lb, const EnlargeOptions& opts) {
  if (!opts.screen) return;
  f.screened_order = std::clamp(opts.screen_order.value_or(lb.order_s), 0, 3);
  f.screened_jet_norm = eval_jet_norm(f.field, lb.region.center, f.screened_order);
  f.excluded = f.screened_jet_norm > lb.bound_k;
}

}  // namespace detail

inline EnlargedField enlarge_field(const FieldFamily& family, const LbRecord& lb, const Word& word,
                                   std::size_t base_index, double nu, const EnlargeOptions& opts = {}) {
  if (base_index >= family.size()) throw Error(ErrorKind::InvalidArgument, "base index outside the family");
  EnlargedField out;
  out.base_index = base_index;
  out.word = word;
  out.nu = nu;
  const auto& base = family.members[base_index];
  std::string label = "(" + detail::word_label(family, word) + ")*(" + format_double(nu) + "." + base.label() + ")";
  if (word.empty() && nu == 1.0) {
    out.field = base.relabeled(std::move(label)).with_domain(lb.region);
  } else {
    out.field = conjugate_field(family, lb.region, word, base, nu, opts.inner_tol, std::move(label));
  }
  detail::screen(out, lb, opts);
  return out;
}

/// Enlarging an enlarged field: (Psi)_*(nu' (Phi)_*(nu X)) = (Psi o Phi)_*(nu nu' X).
inline EnlargedField enlarge_field(const FieldFamily& family, const LbRecord& lb, const Word& word,
                                   const EnlargedField& base, double nu, const EnlargeOptions& opts = {}) {
  Word composed = base.word;
  composed.insert(composed.end(), word.begin(), word.end());
  return enlarge_field(family, lb, composed, base.base_index, base.nu * nu, opts);
}

inline BracketChain bracket_chain(const FieldFamily& family, const Vector& x, int k_max) {
  if (k_max < 1) throw Error(ErrorKind::InvalidArgument, "k_max must be >= 1");
  const int n = family.space.dimension;
  BracketChain chain;
  chain.anchor = x;
  std::vector<VectorField> all = family.members;
  std::vector<VectorField> newest = family.members;
  for (int k = 1; k <= k_max; ++k) {
    if (k > 1) {
      std::vector<VectorField> next;
      for (const auto& X : family.members) {
        for (const auto& Y : newest) {
          if (X.label() == Y.label()) continue;
          auto B = lie_bracket_field(X, Y);
          if (B.polynomial() && B.polynomial()->is_zero()) continue;
          next.push_back(std::move(B));
        }
      }
      all.insert(all.end(), next.begin(), next.end());
      newest = std::move(next);
    }
    chain.generations.push_back(make_basis(x, all));
    chain.rank_profile.push_back(chain.generations.back().rank);
    if (chain.rank_profile.back() >= n) {
      chain.saturated_at = k;
      break;
    }
    if (newest.empty()) {
      // No new brackets: the chain is stationary from here on.
      while (static_cast<int>(chain.rank_profile.size()) < k_max) {
        chain.generations.push_back(chain.generations.back());
        chain.rank_profile.push_back(chain.rank_profile.back());
      }
      break;
    }
  }
  return chain;
}

/// Pointwise least-squares structure constants for the dictionary of family
/// members: [Y_l, Y_m](y) = sum_n C^n_lm(y) Y_n(y). This is a sampled
/// certification over a grid, not a uniform bound on an open set.
struct StructureReport {
  struct Pair {
    std::size_t lambda;
    std::size_t mu;
  };
  std::vector<Vector> grid;
  std::vector<Pair> pairs;
  /// coefficients[point][pair] has one entry per dictionary member.
  std::vector<std::vector<Vector>> coefficients;
  std::vector<std::vector<double>> residuals;
  std::vector<bool> rank_deficient;
  double bound_C = 0.0;
  double max_residual = 0.0;
  double tol = 0.0;
  bool certified = false;
};

inline std::vector<Vector> region_grid(const Ball& region, int grid_size) {
  const auto n = region.center.size();
  const int axes = static_cast<int>(std::min<Eigen::Index>(n, 3));
  std::vector<Vector> pts;
  if (grid_size <= 1) return {region.center};
  std::vector<int> idx(static_cast<std::size_t>(axes), 0);
  while (true) {
    Vector p = region.center;
    for (int a = 0; a < axes; ++a)
      p(a) += region.radius * (-1.0 + 2.0 * idx[static_cast<std::size_t>(a)] / (grid_size - 1));
    if (region.contains(p, 1e-12)) pts.push_back(p);
    int a = 0;
    while (a < axes && ++idx[static_cast<std::size_t>(a)] == grid_size) idx[static_cast<std::size_t>(a++)] = 0;
    if (a == axes) break;
  }
  return pts;
}

inline StructureReport certify_h_prime(const FieldFamily& family, const Ball& region, int grid_size, double tol) {
  StructureReport rep;
  rep.tol = tol;
  rep.grid = region_grid(region, grid_size);
  const std::size_t m = family.size();
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t k = l + 1; k < m; ++k) rep.pairs.push_back({l, k});
  }
  std::vector<VectorField> brackets;
  for (const auto& p : rep.pairs) brackets.push_back(lie_bracket_field(family.members[p.lambda], family.members[p.mu]));

  const std::size_t npts = rep.grid.size();
  rep.coefficients.assign(npts, {});
  rep.residuals.assign(npts, {});
  rep.rank_deficient.assign(npts, false);
  std::vector<double> point_c(npts, 0.0), point_res(npts, 0.0);
  std::vector<char> point_ok(npts, 1), deficient(npts, 0);
  parallel_for(npts, [&](std::size_t i) {
    const auto basis = make_basis(rep.grid[i], family.members);
    deficient[i] = basis.rank < static_cast<int>(m);
    for (const auto& B : brackets) {
      const Vector b = B.eval(rep.grid[i]);
      const auto sol = basis.solve(b);
      Vector c = Vector::Zero(static_cast<Eigen::Index>(m));
      for (const auto& e : sol.coefficients.entries()) c(static_cast<Eigen::Index>(e.index)) = e.value;
      point_c[i] = std::max(point_c[i], c.cwiseAbs().sum());
      point_res[i] = std::max(point_res[i], sol.residual);
      if (sol.residual > tol * (1.0 + b.norm())) point_ok[i] = 0;
      rep.coefficients[i].push_back(std::move(c));
      rep.residuals[i].push_back(sol.residual);
    }
  });
  bool ok = true;
  for (std::size_t i = 0; i < npts; ++i) {
    rep.bound_C = std::max(rep.bound_C, point_c[i]);
    rep.max_residual = std::max(rep.max_residual, point_res[i]);
    ok = ok && point_ok[i];
    rep.rank_deficient[i] = deficient[i] != 0;
  }
  rep.certified = ok && std::isfinite(rep.bound_C);
  return rep;
}

}  // namespace orbitkit

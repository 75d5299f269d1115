#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "orbitkit/errors.hpp"
#include "orbitkit/fields.hpp"
#include "orbitkit/polynomial.hpp"
#include "orbitkit/space.hpp"

namespace orbitkit::catalog {

struct BuiltinInfo {
  std::string name;
  std::string description;
};

inline std::vector<BuiltinInfo> builtins() {
  return {
      {"heisenberg", "R^3, X1 = (1,0,0), X2 = (0,1,x0); optional X3 = (0,0,1)"},
      {"grushin", "R^2, X1 = (1,0), X2 = (0,x0)"},
      {"commuting-constants", "R^dim, constant fields e_0..e_{span-1}"},
      {"affine-l1", "truncated l1, X_a(x) = linear*x + T(a_a), a_a = scale^a e_a, T diagonal"},
      {"operator-family", "R^dim, X_a(x) = Phi_x(a_a) with polynomial operator entries"},
  };
}

inline Ball origin_ball(const ChartSpace& space, double radius) {
  return Ball(Vector::Zero(space.dimension), radius, space.norm_kind);
}

inline FieldFamily from_polynomials(const ChartSpace& space, double radius,
                                    std::vector<std::pair<std::string, PolynomialField>> fields) {
  const Ball domain = origin_ball(space, radius);
  std::vector<VectorField> members;
  for (auto& [label, poly] : fields) members.push_back(VectorField::from_polynomial(label, domain, std::move(poly)));
  return FieldFamily(space, std::move(members), domain);
}

inline PolynomialField poly_field(int dim, const std::vector<std::string>& comps) {
  std::vector<Polynomial> out;
  for (const auto& c : comps) out.push_back(Polynomial::parse(c, dim));
  return PolynomialField(std::move(out));
}

inline FieldFamily heisenberg(double radius = 4.0, bool with_x3 = false) {
  const ChartSpace space(3, NormKind::euclidean);
  std::vector<std::pair<std::string, PolynomialField>> f{{"X1", poly_field(3, {"1", "0", "0"})},
                                                         {"X2", poly_field(3, {"0", "1", "x0"})}};
  if (with_x3) f.emplace_back("X3", poly_field(3, {"0", "0", "1"}));
  return from_polynomials(space, radius, std::move(f));
}

inline FieldFamily grushin(double radius = 4.0) {
  const ChartSpace space(2, NormKind::euclidean);
  return from_polynomials(space, radius, {{"X1", poly_field(2, {"1", "0"})}, {"X2", poly_field(2, {"0", "x0"})}});
}

inline FieldFamily commuting_constants(int dim, int span, double radius = 4.0) {
  if (span < 0 || span > dim) throw Error(ErrorKind::InvalidArgument, "span must lie in [0, dim]");
  const ChartSpace space(dim, NormKind::euclidean);
  std::vector<std::pair<std::string, PolynomialField>> f;
  for (int i = 0; i < span; ++i) {
    std::vector<Polynomial> comps;
    for (int j = 0; j < dim; ++j) comps.push_back(Polynomial::constant(dim, i == j ? 1.0 : 0.0));
    f.emplace_back("E" + std::to_string(i), PolynomialField(std::move(comps)));
  }
  return from_polynomials(space, radius, std::move(f));
}

struct AffineL1Spec {
  int dim = 8;
  int count = 8;
  /// Coefficient of the x term; 0 gives the commuting constant-direction variant.
  double linear = 1.0;
  double scale = 0.5;
  /// Diagonal of T; empty means identity.
  std::vector<double> t_diag;
  double radius = 10.0;
};

/// X_a(x) = linear * x + T(a_a) on the first `dim` coordinates of l1(N).
inline FieldFamily affine_l1(const AffineL1Spec& spec) {
  if (spec.count < 1 || spec.count > spec.dim)
    throw Error(ErrorKind::InvalidArgument, "affine-l1 count must lie in [1, dim]");
  if (!spec.t_diag.empty() && static_cast<int>(spec.t_diag.size()) != spec.dim)
    throw Error(ErrorKind::DimensionMismatch, "T diagonal length differs from dim");
  const ChartSpace space(spec.dim, NormKind::l1, true);
  std::vector<std::pair<std::string, PolynomialField>> f;
  for (int a = 0; a < spec.count; ++a) {
    std::vector<Polynomial> comps;
    const double t = spec.t_diag.empty() ? 1.0 : spec.t_diag[static_cast<std::size_t>(a)];
    for (int j = 0; j < spec.dim; ++j) {
      Polynomial p = Polynomial::variable(spec.dim, j, spec.linear);
      if (j == a) p = p + Polynomial::constant(spec.dim, t * std::pow(spec.scale, a));
      comps.push_back(p);
    }
    f.emplace_back("A" + std::to_string(a), PolynomialField(std::move(comps)));
  }
  return from_polynomials(space, spec.radius, std::move(f));
}

struct OperatorFamilySpec {
  int dim = 2;
  int cols = 1;
  /// Row-major dim x cols entries of the operator Phi_x.
  std::vector<Polynomial> phi;
  std::vector<Vector> a;
  double radius = 4.0;
};

/// X_a(x) = Phi_x(a_a) for a polynomial operator field Phi: E -> L(F, E).
inline FieldFamily operator_family(const OperatorFamilySpec& spec) {
  if (static_cast<int>(spec.phi.size()) != spec.dim * spec.cols)
    throw Error(ErrorKind::DimensionMismatch, "operator entries must be dim x cols");
  const ChartSpace space(spec.dim, NormKind::euclidean);
  std::vector<std::pair<std::string, PolynomialField>> f;
  for (std::size_t k = 0; k < spec.a.size(); ++k) {
    if (spec.a[k].size() != spec.cols) throw Error(ErrorKind::DimensionMismatch, "a vector length differs from cols");
    std::vector<Polynomial> comps;
    for (int i = 0; i < spec.dim; ++i) {
      Polynomial p(spec.dim);
      for (int j = 0; j < spec.cols; ++j)
        p = p + spec.phi[static_cast<std::size_t>(i * spec.cols + j)] * spec.a[k](j);
      comps.push_back(p);
    }
    f.emplace_back("O" + std::to_string(k), PolynomialField(std::move(comps)));
  }
  return from_polynomials(space, spec.radius, std::move(f));
}

}  // namespace orbitkit::catalog

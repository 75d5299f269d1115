#include <gtest/gtest.h>

#include <cmath>

#include "orbitkit/catalog.hpp"
#include "orbitkit/fields.hpp"
#include "orbitkit/random.hpp"

using namespace orbitkit;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

VectorField poly(const std::string& label, const Ball& dom, const std::vector<std::string>& comps) {
  return VectorField::from_polynomial(label, dom, catalog::poly_field(static_cast<int>(comps.size()), comps));
}

// (y^2, 0) without any analytic derivatives: only its values are known
VectorField black_box_y2(const Ball& dom) {
  return VectorField("y2", dom, [](const Vector& p) { return vec({p(1) * p(1), 0.0}); });
}

// sup over the unit circle of |f(theta)|, dense
template <class F>
double circle_max(F f) {
  double best = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const double th = 2 * M_PI * k / 20000;
    best = std::max(best, f(std::cos(th), std::sin(th)));
  }
  return best;
}

}  // namespace

TEST(JetNorm, ConstantFieldIsItsNorm) {
  const Ball dom(Vector::Zero(2), 5, NormKind::euclidean);
  const auto X = poly("c", dom, {"3", "4"});
  EXPECT_NEAR(eval_jet_norm(X, vec({1, 1}), 2), 5.0, 1e-12);
}

TEST(JetNorm, LinearFieldAtPoint) {
  const Ball dom(Vector::Zero(2), 10, NormKind::euclidean);
  const auto X = poly("id", dom, {"x0", "x1"});
  EXPECT_NEAR(eval_jet_norm(X, vec({3, 4}), 1), 6.0, 1e-12);
}

TEST(JetNorm, QuadraticFieldHandOracle) {
  const Ball dom(Vector::Zero(2), 5, NormKind::euclidean);
  // value |(4,0)| = 4; D = [[0, 2y],[0,0]] -> 4; D^2[u,v] = (2 u_y v_y, 0) -> 2
  const double value = 4.0;
  const double d1 = circle_max([](double, double s) { return std::abs(4 * s); });
  const double d2 = circle_max([](double, double s) { return std::abs(2 * s * s); });
  EXPECT_NEAR(d1, 4.0, 1e-6);
  EXPECT_NEAR(d2, 2.0, 1e-6);
  const auto analytic = poly("y2", dom, {"x1^2", "0"});
  EXPECT_NEAR(eval_jet_norm(analytic, vec({0, 2}), 2), value + d1 + d2, 1e-3);
  EXPECT_NEAR(eval_jet_norm(black_box_y2(dom), vec({0, 2}), 2), value + d1 + d2, 1e-3);
}

TEST(JetNorm, ThirdOrderNumerical) {
  const Ball dom(Vector::Zero(2), 5, NormKind::euclidean);
  // (x^3/6, 0): D^3 = 1 in the x slot, so the third-order term is 1
  const VectorField X("cube", dom, [](const Vector& p) { return vec({p(0) * p(0) * p(0) / 6.0, 0.0}); });
  const double expected = 0.0 + 0.0 + 0.0 + 1.0;
  EXPECT_NEAR(eval_jet_norm(X, vec({0, 0}), 3), expected, 1e-3);
}

TEST(JetNorm, Errors) {
  const Ball dom(Vector::Zero(2), 1, NormKind::euclidean);
  const auto bb = black_box_y2(dom);
  EXPECT_THROW(
      {
        try {
          eval_jet_norm(bb, vec({0, 0}), 4);
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::OrderTooHigh);
          throw;
        }
      },
      Error);
  try {
    eval_jet_norm(bb, vec({2, 0}), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfDomain);
  }
  // analytic jets lift the order limit
  EXPECT_NO_THROW(eval_jet_norm(poly("p", dom, {"x0^5", "0"}), vec({0.5, 0}), 5));
}

TEST(Jacobian, AnalyticMatchesFiniteDifferences) {
  const auto fams = {catalog::heisenberg(4, true), catalog::grushin(), catalog::operator_family({
                                                                          2,
                                                                          2,
                                                                          {Polynomial::parse("1 + x1^2", 2),
                                                                           Polynomial::parse("x0*x1", 2),
                                                                           Polynomial::parse("-x1", 2),
                                                                           Polynomial::parse("x0^3", 2)},
                                                                          {vec({1, 0}), vec({0.5, -1})},
                                                                          3.0,
                                                                      })};
  Rng rng(21);
  for (const auto& fam : fams) {
    const auto& dom = fam.common_domain;
    for (int i = 0; i < 100; ++i) {
      const Vector x = dom.center + 0.9 * dom.radius * rng.in_unit_ball(static_cast<int>(dom.center.size()), dom.norm_kind);
      for (const auto& X : fam.members) {
        const Matrix a = X.jacobian(x);
        const Matrix f = X.fd_jacobian(x);
        EXPECT_LE((a - f).norm(), 1e-5 * std::max(1.0, a.norm())) << X.label();
      }
    }
  }
}

TEST(EstimateLb, ConstantsGiveSafetyFactor) {
  const auto fam = catalog::commuting_constants(2, 2);
  const auto rec = estimate_lb_bound(fam, fam.common_domain, 2, 50);
  EXPECT_DOUBLE_EQ(rec.bound_k, 1.25);
  EXPECT_EQ(rec.method, LbMethod::sampled);
  EXPECT_EQ(rec.order_s, 2);
}

TEST(EstimateLb, AffineFamilyTriangleBound) {
  catalog::AffineL1Spec spec;
  spec.dim = 6;
  spec.count = 6;
  spec.linear = 1.0;
  spec.scale = 0.5;
  spec.radius = 2.0;
  const auto fam = catalog::affine_l1(spec);
  const Ball region(Vector::Zero(6), 1.0, NormKind::l1);
  const auto rec = estimate_lb_bound(fam, region, 2, 300);
  // |x| + |T a| + |Id| <= 1 + 1 + 1
  EXPECT_LE(rec.bound_k, 1.25 * (1.0 + 1.0 + 1.0) + 1e-12);
  EXPECT_GE(rec.bound_k, 1.25 * 2.0);
}

TEST(EstimateLb, QuadraticNearBoundaryDenseGrid) {
  const Ball dom(vec({0, 2}), 1.0, NormKind::euclidean);
  FieldFamily fam(ChartSpace(2, NormKind::euclidean), {poly("y2", dom, {"x1^2", "0"})}, dom);
  const Ball region(vec({0, 2}), 0.1, NormKind::euclidean);
  // jet norm at (x, y): y^2 + 2|y| + 2, maximal at y = 2.1
  double grid_max = 0.0;
  for (int i = -50; i <= 50; ++i) {
    for (int j = -50; j <= 50; ++j) {
      const double x = 0.1 * i / 50, y = 2 + 0.1 * j / 50;
      if (x * x + (y - 2) * (y - 2) > 0.01 + 1e-12) continue;
      grid_max = std::max(grid_max, y * y + 2 * std::abs(y) + 2);
    }
  }
  EXPECT_NEAR(grid_max, 10.61, 1e-9);
  const auto rec = estimate_lb_bound(fam, region, 2, 400);
  EXPECT_GE(rec.bound_k, 10.0);
  EXPECT_LE(rec.bound_k, 1.25 * grid_max + 1e-9);
}

TEST(EstimateLb, DeclaredPassesThrough) {
  auto fam = catalog::heisenberg();
  fam.declared_lb = LbRecord{2, 3.5, Ball(Vector::Zero(3), 1, NormKind::euclidean), LbMethod::sampled};
  const auto rec = estimate_lb_bound(fam, fam.common_domain, 2, 10);
  EXPECT_EQ(rec.method, LbMethod::declared);
  EXPECT_DOUBLE_EQ(rec.bound_k, 3.5);
}

TEST(EstimateLb, MonotoneInRegion) {
  const auto fam = catalog::heisenberg(4);
  LbSampling cfg;
  cfg.frame = fam.common_domain;
  cfg.seed = 5;
  double prev = 0.0;
  for (double r : {0.5, 1.0, 2.0, 3.0, 4.0}) {
    const auto rec = estimate_lb_bound(fam, Ball(Vector::Zero(3), r, NormKind::euclidean), 2, 300, cfg);
    EXPECT_GE(rec.bound_k, prev);
    prev = rec.bound_k;
  }
}

TEST(EstimateLb, RegionOutsideDomain) {
  const auto fam = catalog::grushin(1.0);
  try {
    estimate_lb_bound(fam, Ball(Vector::Zero(2), 2.0, NormKind::euclidean), 1, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfDomain);
  }
}

TEST(FieldFamily, ValidationAndLookup) {
  const auto fam = catalog::heisenberg(4, true);
  EXPECT_EQ(fam.size(), 3u);
  EXPECT_EQ(fam.index_of("X2"), 1u);
  EXPECT_FALSE(fam.index_of("nope"));
  EXPECT_EQ(fam.prefix(2).size(), 2u);
  const Ball small(Vector::Zero(3), 1, NormKind::euclidean);
  EXPECT_THROW(FieldFamily(ChartSpace(3, NormKind::euclidean), {fam[0].with_domain(small)},
                           Ball(Vector::Zero(3), 2, NormKind::euclidean)),
               Error);
}

#include <gtest/gtest.h>

#include <cmath>

#include "orbitkit/catalog.hpp"
#include "orbitkit/compose.hpp"
#include "orbitkit/random.hpp"

using namespace orbitkit;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

LbRecord declared(const FieldFamily& fam, double k) { return {2, k, fam.common_domain, LbMethod::declared}; }

ComposeOptions unsafe_opts(double tol = 1e-9) {
  ComposeOptions o;
  o.tol = tol;
  o.unsafe = true;
  return o;
}

L1Coefficients random_tau(Rng& rng, std::size_t m, double mass) {
  std::vector<L1Coefficients::Entry> e;
  double total = 0.0;
  std::vector<double> raw(m);
  for (auto& r : raw) {
    r = rng.uniform(-1, 1);
    total += std::abs(r);
  }
  for (std::size_t i = 0; i < m; ++i) e.push_back({i, raw[i] * mass / total});
  return L1Coefficients(e);
}

}  // namespace

TEST(GammaControl, ForwardPieces) {
  const auto g = gamma_control(L1Coefficients({{0, 0.5}, {2, -1.0}}));
  EXPECT_DOUBLE_EQ(g.length, 1.5);
  ASSERT_EQ(g.control.pieces().size(), 2u);
  EXPECT_EQ(g.control.at(0.25), L1Coefficients::unit(0, 1));
  EXPECT_EQ(g.control.at(1.0), L1Coefficients::unit(2, -1));
  EXPECT_DOUBLE_EQ(g.control.norm_inf(), 1.0);
}

TEST(GammaControl, ReverseIsTimeReflection) {
  const L1Coefficients tau({{0, 0.5}, {2, -1.0}});
  const auto f = gamma_control(tau);
  const auto r = gamma_control(tau, Direction::reverse);
  for (double s : {0.1, 0.4, 0.6, 1.2, 1.45}) EXPECT_EQ(r.control.at(s), f.control.at(f.length - s)) << s;
}

TEST(GammaControl, EmptyTau) {
  const auto g = gamma_control(L1Coefficients{});
  EXPECT_EQ(g.length, 0.0);
  EXPECT_TRUE(g.control.pieces().empty());
}

TEST(Compose, EmptyTauIsIdentity) {
  const auto fam = catalog::heisenberg();
  const auto lb = estimate_lb_bound(fam, fam.common_domain, 2, 50);
  const Vector x = vec({0.1, -0.2, 0.3});
  const auto r = compose_flows(fam, lb, L1Coefficients{}, x);
  EXPECT_EQ(r.endpoint, x);
  EXPECT_EQ(r.truncation_n, 0u);
  EXPECT_EQ(r.tail_error_bound, 0.0);
}

TEST(Compose, CommutingGeometricWithTail) {
  const auto fam = catalog::commuting_constants(6, 6, 10);
  const auto lb = declared(fam, 1.25);
  std::vector<L1Coefficients::Entry> e;
  for (std::size_t i = 0; i < 6; ++i) e.push_back({i, std::pow(2.0, -static_cast<double>(i))});
  ComposeOptions o;
  o.truncation = 4;
  const auto r = compose_flows(fam, lb, L1Coefficients(e), Vector::Zero(6), o);
  EXPECT_EQ(r.truncation_n, 4u);
  EXPECT_DOUBLE_EQ(r.tail_mass, 1.0 / 16 + 1.0 / 32);
  EXPECT_LE((r.endpoint - vec({1, 0.5, 0.25, 0.125, 0, 0})).norm(), 1e-12);
  // exact endpoint with the tail included differs by exactly the tail mass in l1
  EXPECT_LE(norm(r.endpoint - vec({1, 0.5, 0.25, 0.125, 1.0 / 16, 1.0 / 32}), NormKind::l1), r.tail_error_bound);
}

TEST(Compose, HeisenbergUnitSquareCorner) {
  const auto fam = catalog::heisenberg();
  const auto lb = estimate_lb_bound(fam, fam.common_domain, 2, 50);
  const auto r = compose_flows(fam, lb, L1Coefficients({{0, 1.0}, {1, 1.0}}), Vector::Zero(3), unsafe_opts());
  EXPECT_LE((r.endpoint - vec({1, 1, 1})).norm(), 1e-8);
  EXPECT_TRUE(r.unsafe_override);
  ASSERT_EQ(r.knots.size(), 3u);
  EXPECT_LE((r.knots[1] - vec({1, 0, 0})).norm(), 1e-8);
}

TEST(Compose, GuardRefusesLargeTau) {
  const auto fam = catalog::heisenberg();
  const auto lb = estimate_lb_bound(fam, fam.common_domain, 2, 50);
  try {
    compose_flows(fam, lb, L1Coefficients({{0, 1.0}, {1, 1.0}}), Vector::Zero(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GuardViolated);
  }
}

TEST(Compose, InverseRoundTrip) {
  const auto fam = catalog::heisenberg(4, true);
  const auto lb = declared(fam, 1.0);
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    const auto tau = random_tau(rng, 3, rng.uniform(0.1, 1.0));
    const Vector x = 0.5 * rng.in_unit_ball(3, NormKind::euclidean);
    const Vector y = compose_flows(fam, lb, tau, x, unsafe_opts()).endpoint;
    const Vector back = compose_inverse(fam, lb, tau, y, unsafe_opts()).endpoint;
    EXPECT_LE((back - x).norm(), 1e-8);
  }
}

TEST(Compose, HeisenbergInverseReturnsToOrigin) {
  const auto fam = catalog::heisenberg();
  const auto lb = declared(fam, 1.0);
  const auto r = compose_inverse(fam, lb, L1Coefficients({{0, 1.0}, {1, 1.0}}), vec({1, 1, 1}), unsafe_opts());
  EXPECT_LE(r.endpoint.norm(), 1e-8);
  EXPECT_TRUE(r.inverse);
}

TEST(Compose, ApplyWordMatchesControlPath) {
  const auto fam = catalog::heisenberg(4, true);
  const auto lb = declared(fam, 1.0);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto tau = random_tau(rng, 3, rng.uniform(0.1, 1.5));
    const Vector x = 0.5 * rng.in_unit_ball(3, NormKind::euclidean);
    const auto r = compose_flows(fam, lb, tau, x, unsafe_opts(1e-10));
    const Vector w = apply_word(fam, r.word, x, lb.region, 1e-10);
    EXPECT_LE((r.endpoint - w).norm(), 1e-7);
  }
}

TEST(Compose, OrderDependence) {
  const auto fam = catalog::heisenberg();
  const auto lb = declared(fam, 1.0);
  const Vector a = apply_word(fam, {{0, 1.0}, {1, 1.0}}, Vector::Zero(3), lb.region);
  const Vector b = apply_word(fam, {{1, 1.0}, {0, 1.0}}, Vector::Zero(3), lb.region);
  EXPECT_NEAR(a(2) - b(2), 1.0, 1e-8);
  EXPECT_LE((a.head(2) - b.head(2)).norm(), 1e-10);
}

TEST(Compose, TailBoundHonesty) {
  const auto fam = catalog::affine_l1({12, 12, 0.0, 1.0, {}, 10.0});
  const auto lb = declared(fam, 1.25);
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<L1Coefficients::Entry> e;
    for (std::size_t i = 0; i < 12; ++i) e.push_back({i, rng.uniform(-1, 1) * std::pow(2.0, -static_cast<double>(i))});
    const L1Coefficients tau(e);
    const Vector x = 0.3 * rng.in_unit_ball(12, NormKind::l1);
    const Vector exact = compose_flows(fam, lb, tau, x).endpoint;
    for (std::size_t n = 0; n <= 12; n += 3) {
      ComposeOptions o;
      o.truncation = n;
      const auto r = compose_flows(fam, lb, tau, x, o);
      EXPECT_LE(norm(r.endpoint - exact, NormKind::l1), r.tail_error_bound + 1e-9) << n;
    }
  }
}

TEST(Compose, CauchyInTruncation) {
  const auto fam = catalog::affine_l1({16, 16, 0.0, 1.0, {}, 10.0});
  const auto lb = declared(fam, 1.25);
  std::vector<L1Coefficients::Entry> e;
  for (std::size_t i = 0; i < 16; ++i) e.push_back({i, std::pow(2.0, -static_cast<double>(i) - 1)});
  const L1Coefficients tau(e);
  for (std::size_t n = 1; n < 16; ++n) {
    ComposeOptions a, b;
    a.truncation = n;
    b.truncation = n + 1;
    const auto ra = compose_flows(fam, lb, tau, Vector::Zero(16), a);
    const auto rb = compose_flows(fam, lb, tau, Vector::Zero(16), b);
    EXPECT_LE(norm(ra.endpoint - rb.endpoint, NormKind::l1), ra.tail_error_bound + 1e-12);
  }
}

TEST(Compose, AutomaticTruncationMeetsTol) {
  const auto fam = catalog::affine_l1({24, 24, 0.0, 1.0, {}, 10.0});
  const auto lb = declared(fam, 1.25);
  std::vector<L1Coefficients::Entry> e;
  for (std::size_t i = 0; i < 24; ++i) e.push_back({i, std::pow(2.0, -static_cast<double>(i))});
  ComposeOptions o;
  o.tol = 1e-4;
  const auto r = compose_flows(fam, lb, L1Coefficients(e), Vector::Zero(24), o);
  EXPECT_LE(r.tail_error_bound, 1e-4);
  // 1.25 e^2.5 2^(1-n) <= 1e-4 first holds at n = 19
  EXPECT_EQ(r.truncation_n, 19u);
  EXPECT_LT(r.truncation_n, 24u);
}

TEST(Compose, TailNotSummable) {
  const auto fam = catalog::commuting_constants(2, 2, 10);
  const auto lb = declared(fam, 1.25);
  try {
    compose_flows(fam, lb, L1Coefficients({{0, 0.1}}, 0.5), Vector::Zero(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TailNotSummable);
  }
}

TEST(DPsi, AtZeroIsTheField) {
  const auto fam = catalog::heisenberg(4, true);
  const auto lb = declared(fam, 1.0);
  const Vector x = vec({0.4, -0.3, 0.2});
  for (std::size_t a = 0; a < 3; ++a) {
    const auto d = d_psi(fam, lb, x, L1Coefficients{}, L1Coefficients::unit(a, 0.5));
    EXPECT_LE((d.value - 0.5 * fam[a].eval(x)).norm(), 1e-12) << a;
  }
}

TEST(DPsi, FlatCaseIsSigma) {
  const auto fam = catalog::commuting_constants(3, 3, 10);
  const auto lb = declared(fam, 1.25);
  const L1Coefficients sigma({{0, 0.3}, {2, -0.2}});
  const auto d = d_psi(fam, lb, Vector::Zero(3), L1Coefficients({{0, 1.0}, {1, 2.0}}), sigma);
  EXPECT_LE((d.value - vec({0.3, 0, -0.2})).norm(), 1e-12);
  EXPECT_LE((d.delta_psi - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(DPsi, MatchesFiniteDifferences) {
  const auto fam = catalog::heisenberg(4, true);
  const auto lb = declared(fam, 1.0);
  Rng rng(12);
  const double h = 1e-5;
  for (int i = 0; i < 10; ++i) {
    const auto tau = random_tau(rng, 3, rng.uniform(0.2, 1.2));
    const auto sigma = random_tau(rng, 3, 1.0);
    const Vector x = 0.5 * rng.in_unit_ball(3, NormKind::euclidean);
    ComposeOptions o = unsafe_opts(1e-12);
    const auto d = d_psi(fam, lb, x, tau, sigma, o);
    const Vector fd =
        (psi_chart(fam, lb, x, tau + sigma.scaled(h), o) - psi_chart(fam, lb, x, tau + sigma.scaled(-h), o)) / (2 * h);
    EXPECT_LE((d.value - fd).norm(), 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST(DPsi, SigmaGuard) {
  const auto fam = catalog::heisenberg();
  const auto lb = estimate_lb_bound(fam, fam.common_domain, 2, 50);
  try {
    d_psi(fam, lb, Vector::Zero(3), L1Coefficients{}, L1Coefficients::unit(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GuardViolated);
  }
}

TEST(L1Curve, KnotsAndEndpoint) {
  const auto fam = catalog::heisenberg();
  const auto lb = declared(fam, 1.0);
  const auto r = compose_flows(fam, lb, L1Coefficients({{0, 1.0}, {1, 1.0}}), Vector::Zero(3), unsafe_opts());
  const auto c = extract_l1_curve(fam, lb, r, 8);
  ASSERT_EQ(c.knot_times.size(), 3u);
  EXPECT_DOUBLE_EQ(c.knot_times[1], 1.0);
  EXPECT_LE((c.points[8] - vec({1, 0, 0})).norm(), 1e-8);
  EXPECT_LE((c.points.back() - r.endpoint).norm(), 1e-8);
  EXPECT_LE(c.max_knot_gap, 1e-8);
  EXPECT_EQ(c.points.size(), 17u);
  for (std::size_t i = 1; i < c.s.size(); ++i) EXPECT_GT(c.s[i], c.s[i - 1]);
}

TEST(L1Curve, PathEquivalence) {
  const auto fam = catalog::grushin();
  const auto lb = declared(fam, 1.0);
  Rng rng(44);
  for (int i = 0; i < 20; ++i) {
    const auto tau = random_tau(rng, 2, rng.uniform(0.1, 1.5));
    const Vector x = 0.5 * rng.in_unit_ball(2, NormKind::euclidean);
    const auto r = compose_flows(fam, lb, tau, x, unsafe_opts());
    const auto c = extract_l1_curve(fam, lb, r, 5);
    EXPECT_LE((c.points.back() - r.endpoint).norm(), 1e-7);
    EXPECT_NEAR(c.s.back(), tau.norm1(), 1e-12);
  }
}

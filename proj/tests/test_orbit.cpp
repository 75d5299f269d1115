#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "orbitkit/catalog.hpp"
#include "orbitkit/orbit.hpp"
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

LbRecord sampled(const FieldFamily& fam) { return estimate_lb_bound(fam, fam.common_domain, 2, 200); }

class ThreadCap {
 public:
  explicit ThreadCap(const char* v) {
    if (const char* old = std::getenv("ORBITKIT_THREADS")) saved_ = old;
    ::setenv("ORBITKIT_THREADS", v, 1);
  }
  ~ThreadCap() {
    if (saved_.empty()) {
      ::unsetenv("ORBITKIT_THREADS");
    } else {
      ::setenv("ORBITKIT_THREADS", saved_.c_str(), 1);
    }
  }

 private:
  std::string saved_;
};

}  // namespace

TEST(Distribution, GrushinRanks) {
  const auto g = catalog::grushin();
  EXPECT_EQ(distribution_at(g, vec({0, 1})).rank, 1);
  EXPECT_EQ(distribution_at(g, vec({1, 0})).rank, 2);
}

TEST(Distribution, EnlargingNeverLowersRank) {
  const auto h = catalog::heisenberg();
  const auto lb = declared(h, 10.0);
  const auto e = enlarge_field(h, lb, {{0, 0.5}}, 1, 1.0);
  const std::vector<VectorField> extra{e.field};
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const Vector x = rng.in_unit_ball(3, NormKind::euclidean);
    const int base = distribution_at(h, x).rank;
    const int more = distribution_at(h, x, extra).rank;
    EXPECT_GE(more, base);
    EXPECT_LE(more, 3);
  }
  // at the origin X2 and its translate span a new direction
  EXPECT_EQ(distribution_at(h, Vector::Zero(3), extra).rank, 3);
}

TEST(Distribution, TrivializationIsLinearCombination) {
  const auto h = catalog::heisenberg();
  const auto b = distribution_at(h, Vector::Zero(3));
  const Vector y = vec({2, 0, 0});
  EXPECT_LE((trivialization_eval(b, L1Coefficients({{0, 1}, {1, 3}}), y) - vec({1, 3, 6})).norm(), 1e-14);
  EXPECT_EQ(trivialization_eval(b, L1Coefficients{}, y), Vector::Zero(3));
  EXPECT_THROW(trivialization_eval(b, L1Coefficients::unit(5), y), Error);
}

TEST(Slice, HeisenbergSurface) {
  const auto h = catalog::heisenberg();
  const auto lb = sampled(h);
  const auto s = slice(h, lb, Vector::Zero(3), 0.3, 7, {0, 1});
  EXPECT_EQ(s.jacobian_rank_at_zero, 2);
  EXPECT_EQ(s.points.size() + s.skipped, 49u);
  EXPECT_EQ(s.points.size(), s.params.size());
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const double a = s.params[i](0), b = s.params[i](1);
    EXPECT_LE((s.points[i] - vec({a, b, a * b})).norm(), 1e-8);
    EXPECT_LT(std::abs(a) + std::abs(b), s.guard_radius);
  }
}

TEST(Slice, GuardOnRho) {
  const auto h = catalog::heisenberg();
  const auto lb = sampled(h);
  try {
    slice(h, lb, Vector::Zero(3), 1.0, 3, {0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GuardViolated);
  }
  ComposeOptions o;
  o.unsafe = true;
  const auto s = slice(h, lb, Vector::Zero(3), 1.0, 3, {0, 1}, o);
  EXPECT_EQ(s.points.size(), 9u);
  EXPECT_EQ(s.skipped, 0u);
}

TEST(Slice, CommutingFlatPlane) {
  const auto c = catalog::commuting_constants(3, 2);
  const auto s = slice(c, sampled(c), Vector::Zero(3), 0.5, 5, {0, 1});
  EXPECT_EQ(s.jacobian_rank_at_zero, 2);
  for (const auto& p : s.points) EXPECT_EQ(p(2), 0.0);
}

TEST(OrbitSample, BudgetOneIsTheSeed) {
  const auto h = catalog::heisenberg();
  const Vector x = vec({0.1, 0.2, 0.3});
  const auto o = orbit_sample(h, sampled(h), x, 1, 5, 1);
  ASSERT_EQ(o.cloud.size(), 1u);
  EXPECT_EQ(o.cloud[0].point, x);
  EXPECT_TRUE(o.cloud[0].word.empty());
  const auto z = orbit_sample(h, sampled(h), x, 10, 0, 1);
  EXPECT_EQ(z.cloud.size(), 1u);
}

TEST(OrbitSample, GrushinBothHalfPlanes) {
  const auto g = catalog::grushin();
  const auto o = orbit_sample(g, sampled(g), Vector::Zero(2), 2000, 4, 11);
  EXPECT_EQ(o.cloud.size(), 2000u);
  int neg = 0, pos = 0, off_axis = 0;
  for (const auto& p : o.cloud) {
    neg += p.point(0) < 0;
    pos += p.point(0) > 0;
    off_axis += p.point(1) != 0.0;
  }
  EXPECT_GT(neg, 0);
  EXPECT_GT(pos, 0);
  EXPECT_GT(off_axis, 0);
}

TEST(OrbitSample, GrushinSpreadsOffTheAxis) {
  // default durations stay below r/k / 2 ~ 0.16, too short to reach |y| = 0.1
  // in four letters, so use unit durations
  const auto g = catalog::grushin();
  OrbitOptions opts;
  opts.d_max = 1.0;
  const auto o = orbit_sample(g, sampled(g), Vector::Zero(2), 2000, 4, 11, opts);
  int neg = 0, pos = 0, off_axis = 0;
  for (const auto& p : o.cloud) {
    neg += p.point(0) < 0;
    pos += p.point(0) > 0;
    off_axis += std::abs(p.point(1)) > 0.1;
  }
  EXPECT_GT(neg, 0);
  EXPECT_GT(pos, 0);
  EXPECT_GT(off_axis, 0.2 * 2000);
}

TEST(OrbitSample, WordLengthRange) {
  const auto h = catalog::heisenberg();
  OrbitOptions opts;
  opts.min_word_len = 3;
  const auto o = orbit_sample(h, declared(h, 10.0), Vector::Zero(3), 200, 5, 4, opts);
  for (std::size_t i = 1; i < o.cloud.size(); ++i) {
    ASSERT_FALSE(o.cloud[i].truncated);
    EXPECT_GE(o.cloud[i].word.size(), 3u);
    EXPECT_LE(o.cloud[i].word.size(), 5u);
  }
  opts.min_word_len = 6;
  EXPECT_THROW(orbit_sample(h, declared(h, 10.0), Vector::Zero(3), 10, 5, 4, opts), Error);
}

TEST(OrbitSample, CommutingStaysInTheLeaf) {
  const auto c = catalog::commuting_constants(3, 2);
  const auto o = orbit_sample(c, sampled(c), Vector::Zero(3), 300, 6, 3);
  for (const auto& p : o.cloud) EXPECT_EQ(p.point(2), 0.0);
}

TEST(OrbitSample, WordsReplay) {
  const auto h = catalog::heisenberg();
  const auto lb = sampled(h);
  const auto o = orbit_sample(h, lb, Vector::Zero(3), 200, 6, 5);
  for (std::size_t i = 0; i < o.cloud.size(); i += 20) {
    const Vector p = apply_word(h, o.cloud[i].word, Vector::Zero(3), lb.region);
    EXPECT_LE((p - o.cloud[i].point).norm(), 1e-9);
  }
}

TEST(OrbitSample, TruncatesWordsThatLeave) {
  const auto c = catalog::commuting_constants(2, 2, 1.0);
  OrbitOptions opts;
  opts.d_max = 0.9;
  const auto o = orbit_sample(c, declared(c, 1.25), Vector::Zero(2), 300, 8, 4, opts);
  int truncated = 0;
  for (const auto& p : o.cloud) {
    truncated += p.truncated;
    EXPECT_LE(p.point.norm(), 1.0 + 1e-12);
  }
  EXPECT_GT(truncated, 0);
}

TEST(OrbitSample, DeterministicAcrossThreadCounts) {
  const auto h = catalog::heisenberg();
  const auto lb = sampled(h);
  std::vector<Vector> one, many;
  {
    ThreadCap cap("1");
    for (const auto& p : orbit_sample(h, lb, Vector::Zero(3), 400, 6, 9).cloud) one.push_back(p.point);
  }
  {
    ThreadCap cap("8");
    for (const auto& p : orbit_sample(h, lb, Vector::Zero(3), 400, 6, 9).cloud) many.push_back(p.point);
  }
  ASSERT_EQ(one.size(), many.size());
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(one[i], many[i]);
}

TEST(Verdict, CatalogSystems) {
  const auto h = accessibility_verdict(catalog::heisenberg(), Vector::Zero(3), 3);
  EXPECT_EQ(h.kind, VerdictKind::exactly_controllable);
  EXPECT_EQ(h.k, 2);
  const auto g = accessibility_verdict(catalog::grushin(), Vector::Zero(2), 3);
  EXPECT_EQ(g.kind, VerdictKind::exactly_controllable);
  EXPECT_EQ(g.rank_profile, (std::vector<int>{1, 2}));
  const auto c = accessibility_verdict(catalog::commuting_constants(3, 2), Vector::Zero(3), 3);
  EXPECT_EQ(c.kind, VerdictKind::rank_deficient);
  EXPECT_EQ(c.limiting_rank, 2);
  EXPECT_EQ(to_string(c.kind), "rank_deficient");
}

TEST(Verdict, ApproximatelyControllableOnTruncations) {
  catalog::AffineL1Spec spec;
  spec.dim = 40;
  spec.count = 30;
  spec.linear = 0.0;
  const auto v = accessibility_verdict(catalog::affine_l1(spec), Vector::Zero(40), 2);
  EXPECT_EQ(v.kind, VerdictKind::approximately_controllable);
  EXPECT_EQ(v.truncation_levels, (std::vector<std::size_t>{20, 25, 30}));
  // 0.5^27 falls under the relative rank tolerance
  EXPECT_EQ(v.truncation_ranks, (std::vector<int>{20, 25, 27}));
  spec.scale = 0.8;
  const auto w = accessibility_verdict(catalog::affine_l1(spec), Vector::Zero(40), 2);
  EXPECT_EQ(w.kind, VerdictKind::approximately_controllable);
  EXPECT_EQ(w.truncation_ranks, (std::vector<int>{20, 25, 30}));
  EXPECT_EQ(w.limiting_rank, 30);
}

TEST(Verdict, FullTruncationIsExact) {
  catalog::AffineL1Spec spec;
  spec.dim = 12;
  spec.count = 12;
  spec.linear = 0.0;
  spec.scale = 0.9;
  EXPECT_EQ(accessibility_verdict(catalog::affine_l1(spec), Vector::Zero(12), 2).kind,
            VerdictKind::exactly_controllable);
}

TEST(Invariance, IntegrableDistributions) {
  const auto h = catalog::heisenberg();
  const auto lb = declared(h, 10.0);
  const std::vector<VectorField> extra{enlarge_field(h, lb, {{0, 0.5}}, 1, 1.0).field};
  const auto r = invariance_residual(h, vec({0.1, 0.2, 0}), 0, 0.3, extra);
  EXPECT_EQ(r.source_rank, 3);
  EXPECT_LE(r.residual, 1e-5);
  const auto c = catalog::commuting_constants(3, 2);
  for (std::size_t m = 0; m < 2; ++m) EXPECT_LE(invariance_residual(c, vec({0.3, -0.1, 0.2}), m, 0.7).residual, 1e-5);
}

TEST(Invariance, GrushinFailsNearTheSingularLine) {
  const auto g = catalog::grushin();
  const auto r = invariance_residual(g, vec({-0.2, 0.5}), 0, 0.2);
  EXPECT_EQ(r.source_rank, 2);
  EXPECT_EQ(r.target_rank, 1);
  EXPECT_GT(r.residual, 0.1);
}

TEST(Orbit, SliceInsideCloudClosure) {
  const auto h = catalog::heisenberg();
  const auto lb = sampled(h);
  const auto s = slice(h, lb, Vector::Zero(3), 0.3, 7, {0, 1});
  const auto o = orbit_sample(h, lb, Vector::Zero(3), 3000, 4, 2);
  for (const auto& p : s.points) {
    double best = HUGE_VAL;
    for (const auto& q : o.cloud) best = std::min(best, (p - q.point).norm());
    EXPECT_LE(best, 0.05);
  }
}

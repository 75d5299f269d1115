#include <gtest/gtest.h>

#include "orbitkit/polynomial.hpp"
#include "orbitkit/random.hpp"

using namespace orbitkit;

TEST(Polynomial, ParseAndCanonicalText) {
  EXPECT_EQ(Polynomial::parse("3 - x2 + 1.5*x1*x0^2", 3).to_string(), "1.5*x0^2*x1 - x2 + 3");
}

TEST(Polynomial, CanonicalFormMergesAndDrops) {
  const auto p = Polynomial::parse("x*y + 2*y*x - 3*x0*x1 + 4", 2);
  EXPECT_EQ(p.to_string(), "4");
  EXPECT_EQ(Polynomial::parse("x - x", 2).to_string(), "0");
  EXPECT_TRUE(Polynomial::parse("x - x", 2).is_zero());
}

TEST(Polynomial, TextRoundTrip) {
  for (const char* s : {"-x0", "1e-05*x0^3 - 2.5*x1 + 0.125", "x0*x1*x2", "-7", "0"}) {
    const auto p = Polynomial::parse(s, 3);
    EXPECT_EQ(Polynomial::parse(p.to_string(), 3), p) << s;
  }
}

TEST(Polynomial, ParseErrorsCarryColumn) {
  try {
    Polynomial::parse("x0 + $", 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("column"), std::string::npos);
  }
  EXPECT_THROW(Polynomial::parse("x3", 2), Error);
  EXPECT_THROW(Polynomial::parse("", 2), Error);
  EXPECT_THROW(Polynomial::parse("x^", 2), Error);
}

TEST(Polynomial, EvalAndPartials) {
  const auto p = Polynomial::parse("x^2*y - 3*y + 1", 2);
  Vector v(2);
  v << 2, 5;
  EXPECT_DOUBLE_EQ(p(v), 4 * 5 - 15 + 1);
  EXPECT_DOUBLE_EQ(p.partial(0)(v), 2 * 2 * 5);
  EXPECT_DOUBLE_EQ(p.partial(1)(v), 4 - 3);
  EXPECT_EQ(p.degree(), 3);
}

TEST(Polynomial, ArithmeticMatchesPointwise) {
  Rng rng(4);
  const auto a = Polynomial::parse("x^2 - 2*y + 0.5", 2);
  const auto b = Polynomial::parse("x*y + 3", 2);
  for (int i = 0; i < 20; ++i) {
    Vector v(2);
    v << rng.uniform(-2, 2), rng.uniform(-2, 2);
    EXPECT_NEAR((a + b)(v), a(v) + b(v), 1e-12);
    EXPECT_NEAR((a - b)(v), a(v) - b(v), 1e-12);
    EXPECT_NEAR((a * b)(v), a(v) * b(v), 1e-12);
    EXPECT_NEAR((a * 2.5)(v), 2.5 * a(v), 1e-12);
  }
}

TEST(PolynomialField, BracketHeisenberg) {
  const PolynomialField X1({Polynomial::parse("1", 3), Polynomial::parse("0", 3), Polynomial::parse("0", 3)});
  const PolynomialField X2({Polynomial::parse("0", 3), Polynomial::parse("1", 3), Polynomial::parse("x0", 3)});
  const auto b = bracket(X1, X2);
  EXPECT_EQ(b.components()[0].to_string(), "0");
  EXPECT_EQ(b.components()[1].to_string(), "0");
  EXPECT_EQ(b.components()[2].to_string(), "1");
  EXPECT_TRUE(bracket(X1, X1).is_zero());
}

TEST(PolynomialField, JacobianAndMultilinear) {
  const PolynomialField X({Polynomial::parse("y^2", 2), Polynomial::parse("0", 2)});
  Vector p(2);
  p << 0, 2;
  Matrix J = X.jacobian(p);
  EXPECT_DOUBLE_EQ(J(0, 1), 4.0);
  EXPECT_DOUBLE_EQ(J(0, 0), 0.0);
  Vector e1 = Vector::Unit(2, 1);
  const std::vector<Vector> dirs{e1, e1};
  EXPECT_DOUBLE_EQ(X.multilinear(p, dirs)(0), 2.0);
}

TEST(PolynomialField, DimensionMismatch) {
  EXPECT_THROW(PolynomialField({Polynomial::parse("x", 3), Polynomial::parse("y", 3)}), Error);
}

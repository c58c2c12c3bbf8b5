#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nullift/fields.hpp"

using namespace nullift;

namespace {

const std::vector<std::string> kQ1{"q1"};
const std::vector<std::string> kQ1U{"q1", "u"};
const std::vector<std::string> kQ12{"q1", "q2"};

// Central differences, nested for mixed partials.
double fd(const ScalarField& f, std::vector<double> y, std::vector<int> idx, double h) {
  if (idx.empty()) return f(y);
  const int k = idx.back();
  idx.pop_back();
  auto yp = y, ym = y;
  yp[static_cast<std::size_t>(k)] += h;
  ym[static_cast<std::size_t>(k)] -= h;
  return (fd(f, yp, idx, h) - fd(f, ym, idx, h)) / (2.0 * h);
}

}  // namespace

TEST(Parser, EvaluatesSimpleExpressions) {
  EXPECT_DOUBLE_EQ(parse_scalar_field("q1^2/2", kQ1)({3.0}), 4.5);
  EXPECT_DOUBLE_EQ(parse_scalar_field("sin(u)*q1", kQ1U)({5.0, 0.0}), 0.0);
  EXPECT_NEAR(parse_scalar_field("-1/sqrt(q1^2+q2^2)", kQ12)({3.0, 4.0}), -0.2, 1e-15);
  EXPECT_DOUBLE_EQ(ScalarField::constant(2, 7.0)({-3.0, 11.0}), 7.0);
}

TEST(Parser, Precedence) {
  const auto f = parse_scalar_field("-q1^2", kQ1);
  EXPECT_DOUBLE_EQ(f({3.0}), -9.0);
  EXPECT_DOUBLE_EQ(parse_scalar_field("2^3^2", kQ1)({0.0}), 512.0);
  EXPECT_DOUBLE_EQ(parse_scalar_field("2^-1", kQ1)({0.0}), 0.5);
  EXPECT_DOUBLE_EQ(parse_scalar_field("1 - 2 - 3", kQ1)({0.0}), -4.0);
  EXPECT_DOUBLE_EQ(parse_scalar_field("8/2/2", kQ1)({0.0}), 2.0);
  EXPECT_DOUBLE_EQ(parse_scalar_field("1.5e1 + .5", kQ1)({0.0}), 15.5);
}

TEST(Parser, SyntaxErrorReportsToken) {
  try {
    parse_scalar_field("q1 + * 2", kQ1);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.token(), "*");
    EXPECT_EQ(e.position(), 5u);
  }
  try {
    parse_scalar_field("q1^/2", kQ1);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.token(), "/");
    EXPECT_NE(std::string(e.what()).find("'^/'"), std::string::npos);
  }
}

TEST(Parser, UnknownIdentifierAndArity) {
  EXPECT_THROW(parse_scalar_field("q3 + 1", kQ12), ParseError);
  EXPECT_THROW(parse_scalar_field("sin(q1, q2)", kQ12), ParseError);
  EXPECT_THROW(parse_scalar_field("q1(2)", kQ12), ParseError);
  EXPECT_THROW(parse_scalar_field("(q1", kQ12), ParseError);
  EXPECT_THROW(parse_scalar_field("", kQ12), ParseError);
  const auto f = parse_scalar_field("q1", kQ12);
  EXPECT_THROW(f({1.0}), PreconditionError);
}

TEST(Fields, DomainErrors) {
  const auto f = parse_scalar_field("log(q1)", kQ1);
  EXPECT_THROW(f({-1.0}), DomainError);
  EXPECT_THROW(parse_scalar_field("1/q1", kQ1)({0.0}), DomainError);
  EXPECT_THROW(parse_scalar_field("sqrt(q1)", kQ1)({-1.0}), DomainError);
  EXPECT_THROW(parse_scalar_field("q1^0.5", kQ1)({-1.0}), DomainError);
  EXPECT_DOUBLE_EQ(parse_scalar_field("q1^3", kQ1)({-2.0}), -8.0);
}

TEST(Fields, KinksRejectDerivatives) {
  const auto a = parse_scalar_field("abs(q1)", kQ1);
  EXPECT_DOUBLE_EQ(a({0.0}), 0.0);
  EXPECT_THROW(a.derivative({0.0}, {0}), DomainError);
  EXPECT_DOUBLE_EQ(a.derivative({-2.0}, {0}), -1.0);
  const auto s = parse_scalar_field("sign(q1)*q1", kQ1);
  EXPECT_THROW(s.derivative({0.0}, {0}), DomainError);
  EXPECT_DOUBLE_EQ(s.derivative({3.0}, {0}), 1.0);
}

TEST(Fields, AnalyticDerivatives) {
  const auto f = parse_scalar_field("q1^2/2", kQ1);
  EXPECT_DOUBLE_EQ(f.derivative({3.0}, {0}), 3.0);
  const auto c = parse_scalar_field("u^3", {"u"});
  for (double u : {-1.7, 0.0, 0.3, 4.0}) EXPECT_NEAR(c.derivative({u}, {0, 0, 0}), 6.0, 1e-12);
  const auto sc = parse_scalar_field("sin(q1)*cos(q2)", kQ12);
  EXPECT_NEAR(sc.derivative({0.0, 0.0}, {0, 1}), 0.0, 1e-15);
  EXPECT_NEAR(sc.derivative({0.0, 0.0}, {0, 1}), fd(sc, {0.0, 0.0}, {0, 1}, 1e-4), 1e-6);
  const auto t = parse_scalar_field("tan(q1)", kQ1);
  const double x = 0.4, sec2 = 1.0 / (std::cos(x) * std::cos(x));
  EXPECT_NEAR(t.derivative({x}, {0, 0, 0}), 2.0 * sec2 * (sec2 + 2.0 * std::tan(x) * std::tan(x)), 1e-12);
}

TEST(Fields, MixedPartialSymmetryAndFiniteDifferences) {
  const auto f = parse_scalar_field("exp(q1*q2) * sin(q1 + 2*q2) / (1 + q1^2) + q2^(2.5)", kQ12);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.2, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> y{U(rng), U(rng)};
    EXPECT_NEAR(f.derivative(y, std::vector<int>{0, 1}), f.derivative(y, std::vector<int>{1, 0}), 1e-10);
    EXPECT_NEAR(f.derivative(y, std::vector<int>{0, 1, 1}), f.derivative(y, std::vector<int>{1, 0, 1}), 1e-10);
    for (const std::vector<int>& idx : {std::vector<int>{0}, std::vector<int>{1}, std::vector<int>{0, 1},
                                        std::vector<int>{1, 1}}) {
      const double exact = f.derivative(y, idx);
      const double approx = fd(f, y, idx, 1e-5);
      EXPECT_NEAR(exact, approx, 1e-5 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST(Fields, JetAgreesWithSeededDerivative) {
  const auto f = parse_scalar_field("q1^3*q2 + cos(q2)*q1", kQ12);
  const std::vector<double> y{0.7, -0.3};
  const auto j = f.jet<3>(y);
  EXPECT_NEAR(j.derivative({0, 0, 1}), f.derivative(y, std::vector<int>{0, 1, 0}), 1e-12);
  EXPECT_NEAR(j.derivative({0, 0, 1}), 6.0 * 0.7, 1e-12);
  EXPECT_NEAR(j.derivative({1, 1, 0}), -std::cos(-0.3), 1e-12);
}

TEST(Fields, SymbolicPartialMatchesJet) {
  const auto f = parse_scalar_field("exp(q1)*q2^2 + log(q2)/q1", kQ12);
  const auto d1 = f.partial(0);
  const auto d12 = d1.partial(1);
  const std::vector<double> y{1.3, 0.8};
  EXPECT_NEAR(d1(y), f.derivative(y, std::vector<int>{0}), 1e-12);
  EXPECT_NEAR(d12(y), f.derivative(y, std::vector<int>{0, 1}), 1e-12);
}

TEST(Fields, RoundTrip) {
  const std::vector<std::string> vars{"q1", "q2", "u"};
  const char* sources[] = {"-q1^2/2 + 3*u*q2 - (q2 - 1)^3", "sin(q1)*exp(-u)/(2 + cos(q2))",
                           "sqrt(1 + q1^2)*abs(u - 7) - 2^-q2", "-(-q1)"};
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (const char* src : sources) {
    const auto f = parse_scalar_field(src, vars);
    const auto g = parse_scalar_field(f.to_string(vars), vars);
    for (int k = 0; k < 100; ++k) {
      const std::vector<double> y{U(rng), U(rng), U(rng)};
      EXPECT_NEAR(f(y), g(y), 1e-12) << src << " -> " << f.to_string(vars);
    }
  }
}

TEST(Fields, ArithmeticAndComposition) {
  const auto q = ScalarField::coordinate(2, 0);
  const auto u = ScalarField::coordinate(2, 1);
  const auto f = pow(q, 2.0) * exp(u) - 3.0;
  EXPECT_NEAR(f({2.0, 0.0}), 1.0, 1e-15);
  const auto g = parse_scalar_field("x*y", {"x", "y"});
  const std::vector<ScalarField> args{q + u, q - u};
  const auto h = compose(g, args);
  EXPECT_NEAR(h({3.0, 1.0}), 8.0, 1e-15);
  EXPECT_THROW(q + ScalarField::coordinate(3, 0), PreconditionError);
  EXPECT_THROW(require_positive(q)({-1.0, 0.0}), DomainError);
  const std::vector<int> map{2};
  EXPECT_DOUBLE_EQ(parse_scalar_field("x^2", {"x"}).remap(3, map)({1.0, 2.0, 5.0}), 25.0);
}

TEST(Fields, MatrixFieldSharesStorage) {
  MatrixField m(3, 2);
  m.set(0, 2, parse_scalar_field("q1*q2", kQ12));
  EXPECT_EQ(&m(0, 2), &m(2, 0));
  EXPECT_DOUBLE_EQ(m(2, 0)({2.0, 3.0}), 6.0);
  EXPECT_DOUBLE_EQ(MatrixField::identity(3, 2)(1, 1)({0.0, 0.0}), 1.0);
}

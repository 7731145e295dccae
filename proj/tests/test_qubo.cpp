#include <gtest/gtest.h>

#include "kqa/qubo.hpp"
#include "kqa/random.hpp"

using namespace kqa;

namespace {
QuboModel two_bit() {
  QuboModel m(2);
  m.add_pair(0, 1, 2.0);  // x0 x1 with weight 2, stored as Q01 = Q10 = 1
  m.add_linear(0, -1);
  m.add_linear(1, -1);
  return m;
}

QuboModel random_model(std::size_t d, Rng& rng) {
  QuboModel m(d);
  for (std::size_t i = 0; i < d; ++i) {
    m.add_linear(i, uniform_real(rng, -1, 1));
    for (std::size_t j = i; j < d; ++j) m.add_pair(i, j, uniform_real(rng, -1, 1));
  }
  m.set_constant(uniform_real(rng, -1, 1));
  return m;
}

// Reference: the full double sum over all index pairs.
double brute(const QuboModel& m, const Bits& x) {
  double e = m.constant();
  for (std::size_t i = 0; i < x.size(); ++i) {
    e += m.linear()(i) * x[i];
    for (std::size_t j = 0; j < x.size(); ++j) e += m.quadratic()(i, j) * x[i] * x[j];
  }
  return e;
}
}  // namespace

TEST(Evaluate, TwoBitEnumeration) {
  const auto m = two_bit();
  EXPECT_EQ(evaluate(m, Bits{0, 0}), 0.0);
  EXPECT_EQ(evaluate(m, Bits{1, 0}), -1.0);
  EXPECT_EQ(evaluate(m, Bits{0, 1}), -1.0);
  EXPECT_EQ(evaluate(m, Bits{1, 1}), 0.0);
}

TEST(Evaluate, ZeroModelAndIdentity) {
  EXPECT_EQ(evaluate(QuboModel(3), Bits{1, 0, 1}), 0.0);
  const QuboModel id(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3));
  EXPECT_EQ(evaluate(id, Bits{1, 1, 1}), 3.0);
}

TEST(Evaluate, MatchesDoubleSum) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_model(9, rng);
    for (int k = 0; k < 20; ++k) {
      Bits x(9);
      for (auto& b : x) b = coin(rng);
      EXPECT_NEAR(evaluate(m, x), brute(m, x), 1e-12);
    }
  }
}

TEST(Evaluate, LengthMismatchThrows) { EXPECT_THROW(evaluate(QuboModel(3), Bits{1, 0}), std::invalid_argument); }

TEST(Model, ConstructorValidates) {
  Eigen::MatrixXd q(2, 2);
  q << 1, 2, 3, 4;
  EXPECT_THROW(QuboModel(q, Eigen::VectorXd::Zero(2)), std::invalid_argument);
  EXPECT_THROW(QuboModel(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(3)), std::invalid_argument);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  bad(0, 0) = std::nan("");
  EXPECT_THROW(QuboModel(bad, Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST(AddScaled, IdentityAndCancellation) {
  Rng rng(2);
  const auto a = random_model(5, rng), b = random_model(5, rng);
  const auto same = add_scaled(a, b, 0.0);
  EXPECT_EQ(same.quadratic(), a.quadratic());
  EXPECT_EQ(same.linear(), a.linear());
  const auto zero = add_scaled(a, add_scaled(QuboModel(5), a, -1.0), 1.0);
  EXPECT_TRUE(zero.quadratic().isZero());
  EXPECT_TRUE(zero.linear().isZero());
  EXPECT_EQ(zero.constant(), 0.0);
}

TEST(AddScaled, DistributesOverEvaluation) {
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto a = random_model(8, rng), b = random_model(8, rng);
    const double s = uniform_real(rng, -3, 3);
    const auto c = add_scaled(a, b, s);
    for (int k = 0; k < 20; ++k) {
      Bits x(8);
      for (auto& v : x) v = coin(rng);
      EXPECT_NEAR(evaluate(c, x), evaluate(a, x) + s * evaluate(b, x), 1e-10);
    }
  }
}

TEST(Terms, UpperTriangularRoundTrip) {
  Rng rng(4);
  const auto m = random_model(6, rng);
  const auto terms = upper_triangular_terms(m);
  for (const auto& t : terms) EXPECT_LE(t.i, t.j);
  const std::vector<double> lin(m.linear().data(), m.linear().data() + 6);
  const auto back = from_upper_triangular(6, terms, lin, m.constant());
  EXPECT_LE((back.quadratic() - m.quadratic()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(back.linear(), m.linear());
}

TEST(Terms, OffDiagonalIsDoubledAndZerosOmitted) {
  const auto terms = upper_triangular_terms(two_bit());
  ASSERT_EQ(terms.size(), 1u);
  EXPECT_EQ(terms[0], (QuboTerm{0, 1, 2.0}));
}

TEST(Canonicalize, MovesDiagonalToLinear) {
  Rng rng(5);
  const auto m = random_model(5, rng);
  const auto c = canonicalize(m);
  EXPECT_TRUE(c.quadratic().diagonal().isZero());
  Bits x{1, 0, 1, 1, 0};
  EXPECT_NEAR(evaluate(c, x), evaluate(m, x), 1e-12);
}

TEST(MaxAbs, CoversQuadraticAndLinear) {
  QuboModel m(2);
  m.add_linear(1, -7);
  m.add_pair(0, 1, 4);
  EXPECT_EQ(max_abs_coefficient(m), 7.0);
}

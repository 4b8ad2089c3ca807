#include <gtest/gtest.h>

#include <cmath>

#include "birkhoff/tower.hpp"

using namespace birkhoff;

TEST(Induce, FullDoublingReturnsAtOnce) {
  const ReturnStructure rs = induce(builtin::full_linear(2, {2, 2}), {0.0, 1.0}, 12);
  EXPECT_EQ(rs.returns[1].size(), 2u);
  for (size_t n = 2; n <= 12; ++n) EXPECT_TRUE(rs.returns[n].empty());
  EXPECT_NEAR(rs.returned_mass(1), 1.0, 1e-15);
  EXPECT_TRUE(verify_first_return(rs));
  const H1Report h1 = check_h1(rs);
  EXPECT_TRUE(h1.holds);
  EXPECT_NEAR(h1.lambda, 2.0, 1e-12);
}

TEST(Induce, HalfBaseHasGeometricReturnTimes) {
  // J = [0,1/2] under doubling: a point returns at time n with mass 2^-(n+1).
  const ReturnStructure rs = induce(builtin::full_linear(2, {2, 2}), {0.0, 0.5}, 20);
  for (size_t n = 1; n <= 20; ++n) {
    EXPECT_NEAR(rs.returned_mass(n), std::pow(2.0, -static_cast<double>(n) - 1), 1e-15) << n;
    EXPECT_NEAR(rs.mass_defect(n), 0.0, 1e-14);
  }
  EXPECT_TRUE(verify_first_return(rs));
  const TailReport t = tail_classify(rs);
  EXPECT_EQ(t.classification, TailClass::exponential);
  EXPECT_NEAR(t.exp_rate, std::log(2.0), 1e-9);
  const H4Report h4 = check_h4(rs);
  ASSERT_TRUE(h4.found);
  EXPECT_EQ(h4.l0, 1u);
  EXPECT_NEAR(h4.gamma0, 0.5, 1e-12);
}

TEST(Induce, TernaryGapMassEscapes) {
  const ReturnStructure rs = induce(builtin::ternary_cantor(), {0.0, 1.0}, 6);
  EXPECT_NEAR(rs.escaped[1], 1.0 / 3, 1e-15);
  EXPECT_NEAR(rs.returned_mass(1), 2.0 / 3, 1e-15);
  for (size_t n = 1; n <= 6; ++n) EXPECT_NEAR(rs.mass_defect(n), 0.0, 1e-14);
}

TEST(Induce, PieceDataAreConsistent) {
  const IntervalMap m = builtin::full_linear(2, {2, 4});
  const ReturnStructure rs = induce(m, {0.0, 0.5}, 10);
  for (size_t n = 1; n <= 10; ++n) {
    for (const auto& p : rs.returns[n]) {
      ASSERT_EQ(p.word.size(), n);
      EXPECT_EQ(p.time, n);
      EXPECT_NEAR(p.image.lo, 0.0, 1e-12);
      EXPECT_NEAR(p.image.hi, 0.5, 1e-12);
      EXPECT_GE(p.domain.lo, 0.0);
      EXPECT_LE(p.domain.hi, 0.5);
      const Interval back = pullback(m, p.word, p.image);
      EXPECT_NEAR(back.lo, p.domain.lo, 1e-14);
      EXPECT_NEAR(back.hi, p.domain.hi, 1e-14);
    }
  }
}

TEST(Hypotheses, DoublingConstants) {
  const ReturnStructure rs = induce(builtin::full_linear(2, {2, 2}), {0.0, 1.0}, 10);
  const H2Report h2 = check_h2(rs, 8);
  for (size_t k = 1; k <= 8; ++k) EXPECT_NEAR(h2.eps[k], std::pow(2.0, -static_cast<double>(k)), 1e-15) << k;
  EXPECT_TRUE(h2.decreasing);
  EXPECT_NEAR(h2.decay_rate, std::log(2.0), 1e-9);
  const H3Report h3 = check_h3(rs, 8);
  EXPECT_NEAR(h3.C, 1.0, 1e-12);
  const H4Report h4 = check_h4(rs);
  EXPECT_EQ(h4.l0, 1u);
  EXPECT_NEAR(h4.gamma0, 1.0, 1e-15);
  EXPECT_NEAR(rs.mass_defect(10), 0.0, 1e-15);
}

TEST(Hypotheses, ComposedElementsCountCompositions) {
  // Half base: one return per time, so exact elements of time n number 2^(n-1) compositions.
  const ReturnStructure rs = induce(builtin::full_linear(2, {2, 2}), {0.0, 0.5}, 8);
  for (size_t n = 1; n <= 8; ++n) {
    EXPECT_EQ(composed_elements(rs, n, true).size(), size_t{1} << (n - 1)) << n;
    EXPECT_EQ(composed_elements(rs, n, false).size(), size_t{1} << n) << n;
  }
}

TEST(Tail, MannevillePomeauIsPolynomial) {
  const IntervalMap m = builtin::manneville_pomeau(0.5);
  const ReturnStructure rs = induce(m, m.branch(1).domain(), 40);
  EXPECT_TRUE(verify_first_return(rs));
  EXPECT_LT(std::abs(rs.mass_defect(40)), 1e-12);
  const TailReport t = tail_classify(rs);
  EXPECT_EQ(t.classification, TailClass::polynomial);
  EXPECT_NEAR(t.poly_exponent, -2.0, 0.1);
  EXPECT_LT(t.poly_residual, t.exp_residual);
  const H1Report h1 = check_h1(rs);
  EXPECT_TRUE(h1.holds);
  EXPECT_GT(h1.lambda, 1.0);
  const H3Report h3 = check_h3(rs, 8);
  EXPECT_GT(h3.C, 1.0);
  EXPECT_LT(h3.C, 3.0);
  EXPECT_TRUE(check_h4(rs).found);
}

TEST(Tail, ShortTowerIsTooSmall) {
  const ReturnStructure rs = induce(builtin::full_linear(2, {2, 2}), {0.0, 0.5}, 9);
  try {
    tail_classify(rs);
    FAIL() << "expected too_small";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::too_small);
  }
}

TEST(Tail, ImmediateReturnsAreDegenerate) {
  const ReturnStructure rs = induce(builtin::full_linear(2, {2, 2}), {0.0, 1.0}, 12);
  const TailReport t = tail_classify(rs);
  EXPECT_TRUE(t.degenerate);
  EXPECT_EQ(t.classification, TailClass::exponential);
}

#include <gtest/gtest.h>

#include <cmath>

#include "birkhoff/interval_map.hpp"
#include "birkhoff/potential.hpp"

using namespace birkhoff;

TEST(Branch, AffineInverseRoundTrip) {
  const Branch b = Branch::affine({0.5, 1.0}, -2.0, 2.0);
  EXPECT_EQ(b.orientation(), -1);
  EXPECT_DOUBLE_EQ(b.image().lo, 0.0);
  EXPECT_DOUBLE_EQ(b.image().hi, 1.0);
  for (double y : {0.0, 0.125, 0.5, 0.9, 1.0}) EXPECT_NEAR(b(b.inverse(y)), y, 1e-15);
  const Interval pre = b.preimage({0.0, 0.5});
  EXPECT_DOUBLE_EQ(pre.lo, 0.75);
  EXPECT_DOUBLE_EQ(pre.hi, 1.0);
}

TEST(Branch, RejectsImageOutsideUnitInterval) {
  EXPECT_THROW(Branch::affine({0.0, 1.0}, 2.0, 0.0), Error);
}

TEST(Branch, RejectsVanishingDerivative) {
  // x -> 4x(1-x) on [0,1] turns around at 1/2.
  EXPECT_THROW(Branch({0.0, 1.0}, [](double x) { return 4 * x * (1 - x); }, [](double x) { return 4 - 8 * x; }, true), Error);
}

TEST(Branch, NonAffineInverseBisection) {
  const Branch b({0.0, 1.0}, [](double x) { return x * x; }, [](double x) { return 2 * x; }, true);
  EXPECT_NEAR(b.inverse(0.25), 0.5, 1e-14);
  EXPECT_THROW(b.inverse(1.5), Error);
}

TEST(IntervalMap, LowestIndexWinsAtSharedEndpoint) {
  const IntervalMap m = builtin::full_linear(2, {2, 2});
  ASSERT_TRUE(m.branch_index(0.5).has_value());
  EXPECT_EQ(*m.branch_index(0.5), 0u);
  EXPECT_EQ(*m.branch_index(0.75), 1u);
}

TEST(IntervalMap, TernaryGapEscapes) {
  const IntervalMap m = builtin::ternary_cantor();
  const Orbit o = evaluate(m, 0.5, 5);
  ASSERT_TRUE(o.escaped());
  EXPECT_EQ(*o.escaped_at, 1u);  // 1/2 has no image
  const Orbit ok = evaluate(m, 0.25, 6);  // 2-cycle 1/4 -> 3/4 -> 1/4
  EXPECT_FALSE(ok.escaped());
}

TEST(IntervalMap, FullLinearPropertiesAndMarkov) {
  const IntervalMap m = builtin::full_linear(3, {3, 3, 3});
  EXPECT_TRUE(m.is_affine());
  EXPECT_TRUE(m.full_branch());
  EXPECT_TRUE(m.has_rational_data());
  EXPECT_DOUBLE_EQ(m.min_expansion(), 3.0);
  EXPECT_TRUE(check_markov(m));
  const IntervalMap gap = builtin::full_linear(2, {2, 4});
  EXPECT_NEAR(gap.branch(0).domain().length() + gap.branch(1).domain().length(), 0.75, 1e-15);
}

TEST(IntervalMap, TentExactOrbit) {
  const IntervalMap t = builtin::tent();
  const auto orbit = evaluate_exact(t, Rational(1, 3), 3);
  ASSERT_EQ(orbit.size(), 4u);
  EXPECT_EQ(orbit[1], Rational(2, 3));
  EXPECT_EQ(orbit[2], Rational(2, 3));
}

TEST(IntervalMap, MannevillePomeauBreakSolvesEquation) {
  for (double s : {0.3, 0.5, 0.9}) {
    const double x = builtin::manneville_pomeau_break(s);
    EXPECT_NEAR(x * (1 + std::pow(x, s)), 1.0, 1e-14);
    const IntervalMap m = builtin::manneville_pomeau(s);
    EXPECT_TRUE(m.full_branch());
    EXPECT_NEAR(m.branch(0).derivative(0.0), 1.0, 1e-12);
  }
}

TEST(IntervalMap, LogisticIsNotAffine) {
  const IntervalMap m = builtin::logistic(4.0);
  EXPECT_FALSE(m.is_affine());
  EXPECT_NEAR(*m.apply(0.25), 0.75, 1e-15);
}

TEST(IntervalMap, UnknownBuiltinRejected) {
  EXPECT_THROW(builtin::make("baker"), Error);
}

TEST(Potential, IndicatorClosedPointwiseInteriorRange) {
  const Potential p = Potential::indicator({0.5, 1.0});
  EXPECT_EQ(p(0.5), 1.0);
  EXPECT_EQ(p(0.49), 0.0);
  const Bound left = p.range_on({0.25, 0.5});
  EXPECT_EQ(left.lo, 0.0);
  EXPECT_EQ(left.hi, 0.0);
  const Bound across = p.range_on({0.4, 0.6});
  EXPECT_EQ(across.lo, 0.0);
  EXPECT_EQ(across.hi, 1.0);
  EXPECT_EQ(*p.constant_on({0.5, 0.75}), 1.0);
}

TEST(Potential, QuadraticRangeIsExact) {
  const Potential p = Potential::polynomial({0.0, 1.0, -1.0});  // x - x^2
  const Bound r = p.range_on({0.0, 1.0});
  EXPECT_NEAR(r.lo, 0.0, 1e-15);
  EXPECT_NEAR(r.hi, 0.25, 1e-15);
  EXPECT_TRUE(r.certified);
}

TEST(Potential, AffineTransformAndLogDerivative) {
  const Potential p = Potential::indicator({0.5, 1.0}).affine(2.0, -1.0);
  EXPECT_EQ(p(0.75), 1.0);
  EXPECT_EQ(p(0.25), -1.0);
  const Potential ld = Potential::log_derivative(builtin::full_linear(2, {2, 4}));
  EXPECT_NEAR(ld(0.1), std::log(2.0), 1e-15);
  EXPECT_NEAR(ld(0.6), std::log(4.0), 1e-15);
}

#include <gtest/gtest.h>

#include <cmath>

#include "birkhoff/spectrum.hpp"

using namespace birkhoff;

namespace {

double besicovitch(double a) { return (-a * std::log(a) - (1 - a) * std::log(1 - a)) / std::log(2.0); }

ThermoSystem doubling_with_indicator() {
  return ThermoSystem(builtin::full_linear(2, {2, 2}), {Potential::indicator({0.5, 1.0})});
}

}  // namespace

TEST(Spectrum, BesicovitchEggleston) {
  const ThermoSystem sys = doubling_with_indicator();
  std::vector<double> alphas;
  for (int i = 1; i <= 9; ++i) alphas.push_back(i / 10.0);
  alphas.push_back(1.2);
  const SpectrumCurve c = birkhoff_spectrum(sys, alphas);
  for (size_t i = 0; i < 9; ++i) {
    ASSERT_EQ(c.points[i].level.status, LevelStatus::attained) << alphas[i];
    EXPECT_NEAR(c.points[i].level.value, besicovitch(alphas[i]), 1e-10) << alphas[i];
  }
  EXPECT_EQ(c.points[9].level.status, LevelStatus::empty);
  EXPECT_EQ(c.points[9].level.value, 0.0);
}

TEST(Spectrum, ConcaveAndBelowBowenDimension) {
  const ThermoSystem sys(builtin::full_linear(2, {2, 4}), {Potential::indicator({0.5, 1.0})});
  std::vector<double> alphas;
  for (int i = 1; i < 20; ++i) alphas.push_back(i / 20.0);
  const SpectrumCurve c = birkhoff_spectrum(sys, alphas);
  std::vector<double> d;
  for (const auto& p : c.points) {
    ASSERT_EQ(p.level.status, LevelStatus::attained);
    EXPECT_LE(p.level.value, c.bowen + 1e-10);
    EXPECT_NEAR(p.level.witness->entropy / p.level.witness->lyapunov, p.level.value, 1e-8);
    d.push_back(p.level.value);
  }
  for (size_t i = 1; i + 1 < d.size(); ++i) EXPECT_LE(d[i - 1] + d[i + 1] - 2 * d[i], 1e-9);
}

TEST(Spectrum, MaximumAtBowenStateMean) {
  const ThermoSystem sys(builtin::full_linear(2, {2, 4}), {Potential::indicator({0.5, 1.0})});
  const double delta = sys.bowen_dimension();
  const double mean = sys.equilibrium_stats({0.0}, delta).phi_mean[0];
  const LevelSolution s = solve_level(sys, {0}, {mean}, {0.0}, delta);
  ASSERT_EQ(s.status, LevelStatus::attained);
  EXPECT_NEAR(s.value, delta, 1e-10);
}

TEST(Spectrum, AlphaRangeOfIndicator) {
  const AlphaRange r = alpha_range(doubling_with_indicator());
  EXPECT_EQ(r.lo, 0.0);
  EXPECT_EQ(r.hi, 1.0);
}

TEST(LocalDimension, RatioOfEntropyAndExponent) {
  EquilibriumStats st;
  st.entropy = std::log(2.0);
  st.lyapunov = std::log(3.0);
  EXPECT_NEAR(local_dimension(st).value, std::log(2.0) / std::log(3.0), 1e-15);
  st.lyapunov = 0.0;
  EXPECT_THROW(local_dimension(st), Error);
}

TEST(Basin, SinglePotentialMatchesSpectrum) {
  const ThermoSystem sys = doubling_with_indicator();
  for (double a : {0.2, 1.0 / 3, 0.5, 0.6, 0.8}) {
    const BasinResult b = basin_dimension(sys, {a});
    ASSERT_EQ(b.status, LevelStatus::attained);
    EXPECT_NEAR(b.value, besicovitch(a), 1e-8);
    EXPECT_EQ(b.trend, "nonincreasing");
    EXPECT_GE(b.relaxed[0], b.value - 1e-10);
  }
}

TEST(Basin, TwoPotentialsReproduceBernoulli) {
  // Means 1/3 of the first symbol and 1/9 of the pair "11" pin Bernoulli(1/3).
  const ThermoSystem sys(builtin::full_linear(2, {2, 2}),
                         {Potential::indicator({0.5, 1.0}), Potential::step({0.75}, {0.0, 1.0})});
  const BasinResult b = basin_dimension(sys, {1.0 / 3, 1.0 / 9});
  ASSERT_EQ(b.status, LevelStatus::attained);
  EXPECT_NEAR(b.value, besicovitch(1.0 / 3), 1e-8);
}

TEST(Basin, OutOfRangeTargetIsEmpty) {
  const BasinResult b = basin_dimension(doubling_with_indicator(), {1.5});
  EXPECT_EQ(b.status, LevelStatus::empty);
  EXPECT_EQ(b.value, 0.0);
}

TEST(Irregular, LowerBoundsApproachOne) {
  const ThermoSystem sys = doubling_with_indicator();
  const auto rows = irregular_dimension_estimate(sys, {0.1, 0.03, 0.01});
  ASSERT_EQ(rows.size(), 3u);
  const double need[] = {0.9, 0.97, 0.99};
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_GE(rows[i].bound, need[i]);
    EXPECT_GT(std::abs(rows[i].mu1.phi_mean[0] - rows[i].mu2.phi_mean[0]), 1e-6);
    EXPECT_NEAR(rows[i].bound, std::min(rows[i].d1, rows[i].d2), 1e-15);
  }
  EXPECT_LE(rows[0].bound, rows[1].bound);
  EXPECT_LE(rows[1].bound, rows[2].bound);
}

TEST(Irregular, EqualMeansAreVacuous) {
  const ThermoSystem sys = doubling_with_indicator();
  const auto st = sys.equilibrium_stats({0.0}, 1.0);
  try {
    irregular_lower_bound(st, st);
    FAIL() << "expected vacuous";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::vacuous);
  }
}

TEST(Irregular, NoAcipIsInfeasible) {
  const ThermoSystem sys(builtin::ternary_cantor(), {Potential::indicator({0.5, 1.0})});
  try {
    irregular_dimension_estimate(sys, {0.1});
    FAIL() << "expected infeasible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::infeasible);
  }
}

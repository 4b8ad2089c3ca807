#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "birkhoff/thermo.hpp"

using namespace birkhoff;

namespace {

double entropy(double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); }

// Smooth full-branch expanding map: a convex exponential branch and an affine one.
IntervalMap smooth_map() {
  const double c = 1.0, z = std::exp(c / 2) - 1;
  std::vector<Branch> b;
  b.emplace_back(Interval{0.0, 0.5}, [=](double x) { return (std::exp(c * x) - 1) / z; },
                 [=](double x) { return c * std::exp(c * x) / z; }, true);
  b.push_back(Branch::affine({0.5, 1.0}, 2.0, -1.0));
  return IntervalMap(std::move(b), "smooth");
}

}  // namespace

TEST(Pressure, ZeroPotentialOnDoublingIsLogTwo) {
  const ThermoSystem sys(builtin::full_linear(2, {2, 2}), {});
  EXPECT_EQ(sys.backend(), Backend::transfer_matrix);
  EXPECT_NEAR(sys.pressure_value({}, 0.0), std::log(2.0), 1e-12);
}

TEST(Pressure, CylinderBracketContainsLogTwo) {
  ThermoOptions opt;
  opt.backend = Backend::cylinder_sum;
  opt.depth = 14;
  const ThermoSystem sys(builtin::full_linear(2, {2, 2}), {}, opt);
  const PressureEstimate e = sys.pressure({}, 0.0);
  EXPECT_EQ(e.method, Backend::cylinder_sum);
  EXPECT_LE(e.lo, std::log(2.0) + 1e-15);
  EXPECT_GE(e.hi, std::log(2.0) - 1e-15);
  EXPECT_TRUE(e.certified);
}

TEST(Pressure, FreeFunctionMatchesSystem) {
  const IntervalMap m = builtin::full_linear(3, {3, 3, 3});
  const auto mk = MarkovStructure::from_map(m);
  EXPECT_NEAR(pressure(m, mk, Potential::constant(0.0)).value, std::log(3.0), 1e-12);
}

TEST(Pressure, ConvexAndDecreasingInT) {
  const ThermoSystem sys(builtin::full_linear(2, {2, 4}), {Potential::indicator({0.5, 1.0})});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double q = u(rng), t1 = u(rng), t2 = u(rng);
    const double a = sys.pressure_value({q}, t1), b = sys.pressure_value({q}, t2);
    const double mid = sys.pressure_value({q}, 0.5 * (t1 + t2));
    EXPECT_LE(mid, 0.5 * (a + b) + 1e-12);
    if (t1 < t2) {
      EXPECT_GT(a, b);
    }
  }
}

TEST(Bowen, TernaryCantor) {
  const ThermoSystem sys(builtin::ternary_cantor(), {});
  EXPECT_NEAR(sys.bowen_dimension(), std::log(2.0) / std::log(3.0), 1e-9);
}

TEST(Bowen, SlopesTwoAndFourMatchScalarOracle) {
  // 2^-s + 4^-s = 1  =>  2^-s = (sqrt 5 - 1) / 2.
  const double oracle = -std::log2((std::sqrt(5.0) - 1) / 2);
  const IntervalMap m = builtin::full_linear(2, {2, 4});
  EXPECT_NEAR(bowen_dimension(m, MarkovStructure::from_map(m)), oracle, 1e-12);
}

TEST(Equilibrium, BernoulliOneThird) {
  const ThermoSystem sys(builtin::full_linear(2, {2, 2}), {Potential::indicator({0.5, 1.0})});
  const EquilibriumStats st = sys.equilibrium_stats({-std::log(2.0)}, 1.0);
  EXPECT_NEAR(st.phi_mean[0], 1.0 / 3, 1e-12);
  EXPECT_NEAR(st.entropy, entropy(1.0 / 3), 1e-12);
  EXPECT_NEAR(st.lyapunov, std::log(2.0), 1e-12);
  EXPECT_TRUE(ruelle_check(st));
}

TEST(Equilibrium, FiniteDifferencesAgreeWithGibbsWeights) {
  const ThermoSystem sys(builtin::full_linear(3, {3, 4, 5}), {Potential::step({0.25, 0.5}, {0.0, 1.0, 2.0})});
  for (double q : {-1.0, 0.0, 0.7}) {
    for (double t : {0.3, 0.8}) {
      const auto exact = sys.equilibrium_stats({q}, t);
      const auto fd = sys.equilibrium_stats_fd({q}, t);
      EXPECT_NEAR(exact.phi_mean[0], fd.phi_mean[0], 1e-7);
      EXPECT_NEAR(exact.lyapunov, fd.lyapunov, 1e-7);
      EXPECT_NEAR(exact.entropy, fd.entropy, 1e-7);
    }
  }
}

TEST(Equilibrium, VariationalIdentity) {
  const ThermoSystem sys(builtin::full_linear(2, {2, 4}), {Potential::indicator({0.5, 1.0})});
  const auto st = sys.equilibrium_stats({0.4}, 0.6);
  EXPECT_NEAR(st.pressure, st.entropy + 0.4 * st.phi_mean[0] - 0.6 * st.lyapunov, 1e-12);
}

TEST(Smooth, CylinderBackendAndAcip) {
  const ThermoSystem sys(smooth_map(), {});
  EXPECT_EQ(sys.backend(), Backend::cylinder_sum);
  const PressureEstimate e = sys.pressure({}, 1.0);
  EXPECT_LE(e.lo, 1e-12);
  EXPECT_GE(e.hi, -1e-12);
  EXPECT_NEAR(e.value, 0.0, 5e-3);
  EXPECT_NEAR(sys.bowen_dimension(), 1.0, 5e-3);
}

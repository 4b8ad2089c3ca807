#pragma once

// Birkhoff spectrum, ergodic-basin dimension, local dimension and irregular-set bounds.
//
// A level alpha of sum_j q_j phi_j is solved by the pressure-root system
//     P(q.phi - t log|f'|) = q.alpha,   mean_j(q, t) = alpha_j,
// whose solution is an equilibrium state with h = t * lambda, so its local dimension is t.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "numeric.hpp"
#include "potential.hpp"
#include "symbolic.hpp"
#include "thermo.hpp"

namespace birkhoff {

struct LocalDimension {
  double value = 0.0;
  bool clamped = false;
};

inline LocalDimension local_dimension(const EquilibriumStats& st) {
  if (!(st.lyapunov > 0.0)) throw Error(ErrorCode::not_hyperbolic, "local dimension needs a positive Lyapunov exponent");
  const double d = st.entropy / st.lyapunov;
  const double c = std::clamp(d, 0.0, 1.0 + 1e-9);
  return {c, c != d};
}

struct AlphaRange {
  double lo = 0.0;
  double hi = 0.0;
  size_t depth = 0;
  bool certified = true;
};

/// Outer bounds on the attainable averages of potential `j`: extreme values of S_n(phi)/n
/// over depth-n cylinders. Depth 0 picks 14 for affine maps and 10 otherwise.
inline AlphaRange alpha_range(const ThermoSystem& sys, size_t j = 0, size_t depth = 0) {
  require(j < sys.dimension(), "potential index out of range");
  const auto& map = sys.map();
  const size_t n = depth ? depth : (map.is_affine() ? 14 : 10);
  const std::vector<Potential> pots{sys.potentials()[j]};
  AlphaRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), n, true};
  const double dn = static_cast<double>(n);
  if (supports_class_aggregation(map, sys.markov(), pots)) {
    for (const auto& cl : aggregate_classes(map, sys.markov(), n, pots)) {
      r.lo = std::min(r.lo, cl.sums[0] / dn);
      r.hi = std::max(r.hi, cl.sums[0] / dn);
    }
    return r;
  }
  enumerate_cylinders(map, sys.markov(), n, pots, [&](const Cylinder&, const CylinderStats& s) {
    r.lo = std::min(r.lo, s.sums[0].lo / dn);
    r.hi = std::max(r.hi, s.sums[0].hi / dn);
    r.certified = r.certified && s.certified;
  });
  return r;
}

enum class LevelStatus { attained, empty, failed };

inline const char* to_string(LevelStatus s) {
  switch (s) {
    case LevelStatus::attained: return "attained";
    case LevelStatus::empty: return "empty";
    case LevelStatus::failed: return "failed-rootfind";
  }
  return "unknown";
}

struct LevelSolution {
  LevelStatus status = LevelStatus::failed;
  double value = 0.0;  ///< t = local dimension of the witness (0 when not attained)
  std::vector<double> q;
  double t = 0.0;
  std::optional<EquilibriumStats> witness;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

struct LevelOptions {
  NewtonOptions newton{200, 1e-12, 1e-6};
  double accept_tol = 1e-9;        ///< residual accepted when Newton stalls just above tol
  double consistency_tol = 1e-8;   ///< |h/lambda - t| allowed on attained levels
};

/// Solves the level system with the potentials listed in `fixed` pinned to `targets`;
/// the remaining q_j are held at 0.
inline LevelSolution solve_level(const ThermoSystem& sys, const std::vector<size_t>& fixed,
                                 const std::vector<double>& targets, std::vector<double> q_seed, double t_seed,
                                 const LevelOptions& opt = {}) {
  const size_t p = sys.dimension();
  const size_t f = fixed.size();
  require(targets.size() == f, "one target per pinned potential");
  require(q_seed.size() == f, "one q seed per pinned potential");
  auto unpack = [&](const Eigen::VectorXd& x) {
    std::vector<double> q(p, 0.0);
    for (size_t i = 0; i < f; ++i) q[fixed[i]] = x[static_cast<Eigen::Index>(i)];
    return q;
  };
  auto residual = [&](const Eigen::VectorXd& x) {
    const auto q = unpack(x);
    const double t = x[static_cast<Eigen::Index>(f)];
    Eigen::VectorXd r(static_cast<Eigen::Index>(f + 1));
    double target_term = 0.0;
    for (size_t i = 0; i < f; ++i) target_term += q[fixed[i]] * targets[i];
    if (f == 0) {
      r[0] = sys.pressure_value(q, t);
      return r;
    }
    const EquilibriumStats st = sys.equilibrium_stats(q, t);
    r[0] = st.pressure - target_term;
    for (size_t i = 0; i < f; ++i) r[static_cast<Eigen::Index>(i + 1)] = st.phi_mean[fixed[i]] - targets[i];
    return r;
  };
  Eigen::VectorXd x0(static_cast<Eigen::Index>(f + 1));
  for (size_t i = 0; i < f; ++i) x0[static_cast<Eigen::Index>(i)] = q_seed[i];
  x0[static_cast<Eigen::Index>(f)] = t_seed;

  LevelSolution sol;
  NewtonResult nr;
  try {
    nr = solve_newton(residual, x0, opt.newton);
  } catch (const Error&) {
    return sol;
  }
  sol.iterations = nr.iterations;
  sol.residual = nr.residual.size() ? nr.residual.norm() : sol.residual;
  sol.q = unpack(nr.x);
  sol.t = nr.x[static_cast<Eigen::Index>(f)];
  if (!(nr.converged || sol.residual <= opt.accept_tol)) return sol;
  try {
    sol.witness = sys.equilibrium_stats(sol.q, sol.t);
  } catch (const Error&) {
    return sol;
  }
  const double d = sol.witness->entropy / sol.witness->lyapunov;
  if (std::abs(d - sol.t) > opt.consistency_tol || sol.t < -1e-9 || sol.t > 1.0 + 1e-9) return sol;
  sol.status = LevelStatus::attained;
  sol.value = std::clamp(sol.t, 0.0, 1.0);
  return sol;
}

struct SpectrumPoint {
  double alpha = 0.0;
  LevelSolution level;
};

struct SpectrumCurve {
  std::vector<SpectrumPoint> points;
  AlphaRange range;
  double bowen = 0.0;
};

/// D(alpha) on a grid for potential 0 of a one-potential system. Continuation starts at
/// the grid point nearest the mean of the (0, Bowen root) state and proceeds outward.
inline SpectrumCurve birkhoff_spectrum(const ThermoSystem& sys, const std::vector<double>& alphas,
                                       size_t range_depth = 0, const LevelOptions& opt = {}) {
  require(sys.dimension() == 1, "spectrum needs exactly one registered potential");
  require(!alphas.empty(), "alpha grid must be nonempty");
  SpectrumCurve curve;
  curve.range = alpha_range(sys, 0, range_depth);
  curve.bowen = sys.bowen_dimension();
  const double mean0 = sys.equilibrium_stats({0.0}, curve.bowen).phi_mean[0];
  curve.points.resize(alphas.size());
  size_t start = 0;
  for (size_t i = 0; i < alphas.size(); ++i) {
    curve.points[i].alpha = alphas[i];
    if (std::abs(alphas[i] - mean0) < std::abs(alphas[start] - mean0)) start = i;
  }
  const double slack = 1e-12 * std::max(1.0, std::abs(curve.range.hi - curve.range.lo));
  auto solve_at = [&](size_t i, double qs, double ts) {
    SpectrumPoint& pt = curve.points[i];
    if (pt.alpha < curve.range.lo - slack || pt.alpha > curve.range.hi + slack) {
      pt.level.status = LevelStatus::empty;
      pt.level.value = 0.0;
      pt.level.residual = 0.0;
      return false;
    }
    pt.level = solve_level(sys, {0}, {pt.alpha}, {qs}, ts, opt);
    return pt.level.status == LevelStatus::attained;
  };
  double q0 = 0.0, t0 = curve.bowen;
  if (solve_at(start, q0, t0)) {
    q0 = curve.points[start].level.q[0];
    t0 = curve.points[start].level.t;
  }
  // Walk outward from the start, seeding each point from the last success.
  for (long dir : {-1L, 1L}) {
    double qs = q0, ts = t0;
    for (long i = static_cast<long>(start) + dir; i >= 0 && i < static_cast<long>(alphas.size()); i += dir) {
      const auto k = static_cast<size_t>(i);
      if (solve_at(k, qs, ts)) {
        qs = curve.points[k].level.q[0];
        ts = curve.points[k].level.t;
      }
    }
  }
  return curve;
}

struct BasinResult {
  LevelStatus status = LevelStatus::failed;
  double value = 0.0;  ///< direct solve with the means pinned exactly
  std::optional<EquilibriumStats> witness;
  std::array<double, 3> eps{1e-2, 1e-3, 1e-4};
  std::array<double, 3> relaxed{};  ///< sup of D over the eps-box of means
  double extrapolated = 0.0;        ///< quadratic through the three relaxed values, at eps = 0
  std::string trend;                ///< "nonincreasing" or "irregular"
  double residual = 0.0;
};

/// sup of D over equilibrium states whose means lie in the box |mean_j - alpha_j| <= eps.
/// Enumerates every face of the box: pinned coordinates sit on a box side, free ones have q_j = 0.
inline std::optional<double> relaxed_basin_value(const ThermoSystem& sys, const std::vector<double>& targets, double eps,
                                                 const LevelOptions& opt = {}) {
  const size_t p = sys.dimension();
  size_t faces = 1;
  for (size_t j = 0; j < p; ++j) faces *= 3;
  const double bowen = sys.bowen_dimension();
  std::optional<double> best;
  for (size_t code = 0; code < faces; ++code) {
    std::vector<size_t> fixed;
    std::vector<double> a;
    size_t c = code;
    for (size_t j = 0; j < p; ++j, c /= 3) {
      const int side = static_cast<int>(c % 3) - 1;
      if (side == 0) continue;
      fixed.push_back(j);
      a.push_back(targets[j] + side * eps);
    }
    const LevelSolution s = solve_level(sys, fixed, a, std::vector<double>(fixed.size(), 0.0), bowen, opt);
    if (s.status != LevelStatus::attained) continue;
    bool feasible = true;
    for (size_t j = 0; j < p; ++j) feasible = feasible && std::abs(s.witness->phi_mean[j] - targets[j]) <= eps + 1e-10;
    if (feasible && (!best || s.value > *best)) best = s.value;
  }
  return best;
}

/// Dimension of the basin of the equilibrium state with the given means (p <= 3).
inline BasinResult basin_dimension(const ThermoSystem& sys, const std::vector<double>& targets,
                                   const LevelOptions& opt = {}) {
  const size_t p = sys.dimension();
  require(p >= 1 && p <= 3, "basin queries support 1 to 3 potentials");
  require(targets.size() == p, "one target mean per potential");
  BasinResult out;
  for (size_t j = 0; j < p; ++j) {
    const AlphaRange r = alpha_range(sys, j);
    if (targets[j] < r.lo - 1e-12 || targets[j] > r.hi + 1e-12) {
      out.status = LevelStatus::empty;
      return out;
    }
  }
  std::vector<size_t> all(p);
  for (size_t j = 0; j < p; ++j) all[j] = j;
  const LevelSolution s = solve_level(sys, all, targets, std::vector<double>(p, 0.0), sys.bowen_dimension(), opt);
  out.status = s.status;
  out.value = s.value;
  out.witness = s.witness;
  out.residual = s.residual;
  if (s.status != LevelStatus::attained) return out;
  for (size_t i = 0; i < 3; ++i) {
    const auto v = relaxed_basin_value(sys, targets, out.eps[i], opt);
    out.relaxed[i] = v ? *v : std::numeric_limits<double>::quiet_NaN();
  }
  // Lagrange interpolation of (eps_i, relaxed_i) evaluated at eps = 0.
  double ex = 0.0;
  for (size_t i = 0; i < 3; ++i) {
    double w = 1.0;
    for (size_t k = 0; k < 3; ++k) {
      if (k != i) w *= (0.0 - out.eps[k]) / (out.eps[i] - out.eps[k]);
    }
    ex += w * out.relaxed[i];
  }
  out.extrapolated = ex;
  const bool mono = out.relaxed[0] >= out.relaxed[1] - 1e-12 && out.relaxed[1] >= out.relaxed[2] - 1e-12;
  out.trend = mono ? "nonincreasing" : "irregular";
  return out;
}

/// min(D(mu1), D(mu2)) for two measures with distinct means of potential j.
inline double irregular_lower_bound(const EquilibriumStats& s1, const EquilibriumStats& s2, size_t j = 0) {
  require(j < s1.phi_mean.size() && j < s2.phi_mean.size(), "potential index out of range");
  if (std::abs(s1.phi_mean[j] - s2.phi_mean[j]) <= 1e-12) {
    throw Error(ErrorCode::vacuous, "beta = 0, bound vacuous: the two means coincide");
  }
  return std::min(local_dimension(s1).value, local_dimension(s2).value);
}

struct IrregularEntry {
  double eps = 0.0;
  double bound = 0.0;
  EquilibriumStats mu1;  ///< absolutely continuous (t = 1) state
  EquilibriumStats mu2;  ///< witness with D = 1 - eps/2 below the acip mean
  double d1 = 0.0;
  double d2 = 0.0;
};

/// For each eps, a pair (acip, nearby equilibrium state) with distinct means and both
/// local dimensions >= 1 - eps.
inline std::vector<IrregularEntry> irregular_dimension_estimate(const ThermoSystem& sys,
                                                                const std::vector<double>& eps_seq,
                                                                double acip_tol = 1e-9) {
  require(sys.dimension() == 1, "irregular estimate needs exactly one registered potential");
  const AlphaRange r = alpha_range(sys, 0);
  if (r.hi - r.lo <= 1e-12) throw Error(ErrorCode::vacuous, "beta = 0 for all pairs: the potential has constant averages");
  if (std::abs(sys.pressure_value({0.0}, 1.0)) > acip_tol) {
    throw Error(ErrorCode::infeasible, "no acip in the family: P(-log|f'|) != 0");
  }
  const EquilibriumStats mu1 = sys.equilibrium_stats({0.0}, 1.0);
  const double d1 = local_dimension(mu1).value;
  std::vector<IrregularEntry> out;
  for (double eps : eps_seq) {
    require(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
    const double t = 1.0 - eps / 2.0;
    // g(q) = P(q, t) - q P_q(q, t) is positive at q = 0 and decreases as q moves away from 0.
    auto g = [&](double q) {
      const EquilibriumStats s = sys.equilibrium_stats({q}, t);
      return s.pressure - q * s.phi_mean[0];
    };
    double lo = -1.0;
    while (g(lo) > 0.0) {
      lo *= 2.0;
      if (lo < -1e4) throw Error(ErrorCode::rootfind_failed, "no witness level below the acip mean");
    }
    const double q = bisect(g, lo, 0.0, 1e-14);
    IrregularEntry e;
    e.eps = eps;
    e.mu1 = mu1;
    e.mu2 = sys.equilibrium_stats({q}, t);
    e.d1 = d1;
    e.d2 = local_dimension(e.mu2).value;
    e.bound = irregular_lower_bound(e.mu1, e.mu2);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace birkhoff

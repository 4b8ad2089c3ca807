#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace birkhoff {

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  bool contains(const Interval& o, double tol = 0.0) const {
    return o.lo >= lo - tol && o.hi <= hi + tol;
  }
  /// Length of the intersection (0 when disjoint).
  double overlap(const Interval& o) const {
    return std::max(0.0, std::min(hi, o.hi) - std::max(lo, o.lo));
  }
  Interval intersect(const Interval& o) const {
    return {std::max(lo, o.lo), std::min(hi, o.hi)};
  }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Lower/upper bound pair; `certified` is false when the bound came from point samples.
struct Bound {
  double lo = 0.0;
  double hi = 0.0;
  bool certified = true;

  double width() const { return hi - lo; }
  Bound& operator+=(const Bound& o) {
    lo += o.lo;
    hi += o.hi;
    certified = certified && o.certified;
    return *this;
  }
  friend Bound operator+(Bound a, const Bound& b) { return a += b; }
};

/// Compensated (Kahan-Babuska) summation.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Streaming log(sum(exp(x_i))) with compensated accumulation.
class LogSumExp {
 public:
  void add(double x, double multiplicity = 1.0) {
    if (x == -std::numeric_limits<double>::infinity() || multiplicity <= 0.0) return;
    if (empty_) {
      max_ = x;
      empty_ = false;
    } else if (x > max_) {
      const double scale = std::exp(max_ - x);
      const double old = acc_.value() * scale;
      acc_ = KahanSum();
      acc_.add(old);
      max_ = x;
    }
    acc_.add(multiplicity * std::exp(x - max_));
  }

  void merge(const LogSumExp& o) {
    if (o.empty_) return;
    add(o.max_, o.acc_.value());
  }

  double value() const {
    if (empty_) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(acc_.value());
  }
  bool empty() const { return empty_; }

 private:
  double max_ = 0.0;
  KahanSum acc_;
  bool empty_ = true;
};

/// Bisection for a sign change of `f` on [lo, hi]; returns the midpoint of the final bracket.
template <class F>
double bisect(F&& f, double lo, double hi, double tol = 1e-13, int max_iter = 400) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw Error(ErrorCode::rootfind_failed, "bisection bracket has no sign change");
  }
  for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
    const double m = 0.5 * (lo + hi);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = m;
      flo = fm;
    } else {
      hi = m;
    }
  }
  return 0.5 * (lo + hi);
}

struct NewtonOptions {
  int max_iter = 200;
  double tol = 1e-13;
  double fd_step = 1e-6;
};

struct NewtonResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton with a central finite-difference Jacobian. `F` may throw; a
/// throwing trial step is treated like a rejected step.
inline NewtonResult solve_newton(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& F,
                                 Eigen::VectorXd x, const NewtonOptions& opt = {}) {
  NewtonResult out;
  Eigen::VectorXd r = F(x);
  const auto n = x.size();
  for (int it = 0; it < opt.max_iter; ++it) {
    out.iterations = it;
    if (!r.allFinite()) break;
    if (r.norm() <= opt.tol) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd jac(r.size(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = opt.fd_step * std::max(1.0, std::abs(x[j]));
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      jac.col(j) = (F(xp) - F(xm)) / (2.0 * h);
    }
    const Eigen::VectorXd step = jac.fullPivLu().solve(-r);
    if (!step.allFinite()) break;
    double lambda = 1.0;
    bool accepted = false;
    for (int k = 0; k < 40; ++k) {
      Eigen::VectorXd trial = x + lambda * step;
      Eigen::VectorXd rt;
      try {
        rt = F(trial);
      } catch (const Error&) {
        lambda *= 0.5;
        continue;
      }
      if (rt.allFinite() && rt.norm() < r.norm()) {
        x = std::move(trial);
        r = std::move(rt);
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) break;
  }
  if (!out.converged && r.allFinite() && r.norm() <= opt.tol) out.converged = true;
  out.x = std::move(x);
  out.residual = std::move(r);
  return out;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< sum of squared residuals
};

inline LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, "fit_line needs at least two points");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  require(sxx > 0.0, "fit_line needs distinct abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    fit.residual += e * e;
  }
  return fit;
}

}  // namespace birkhoff

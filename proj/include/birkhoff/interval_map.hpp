#pragma once

// Piecewise-monotone maps of [0, 1] and a zoo of builtin examples.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "error.hpp"
#include "numeric.hpp"

namespace birkhoff {

using Rational = boost::multiprecision::cpp_rational;

/// x -> slope * x + intercept, with optional exact rational coefficients.
struct AffineForm {
  double slope = 1.0;
  double intercept = 0.0;
  std::optional<Rational> slope_q;
  std::optional<Rational> intercept_q;
  std::optional<std::pair<Rational, Rational>> domain_q;
};

/// One monotone branch of an interval map.
class Branch {
 public:
  using Fn = std::function<double(double)>;

  /// `deriv_monotone` declares |f'| monotone on the domain, which makes
  /// endpoint evaluation an exact range for log|f'|.
  Branch(Interval domain, Fn forward, Fn deriv, bool deriv_monotone)
      : domain_(domain), forward_(std::move(forward)), deriv_(std::move(deriv)),
        deriv_monotone_(deriv_monotone) {
    require(domain_.lo >= -1e-15 && domain_.hi <= 1.0 + 1e-15 && domain_.lo < domain_.hi,
            "branch domain must be a nontrivial subinterval of [0,1]");
    const double a = forward_(domain_.lo);
    const double b = forward_(domain_.hi);
    require(a != b, "branch must be strictly monotone");
    orientation_ = b > a ? 1 : -1;
    image_ = {std::min(a, b), std::max(a, b)};
    require(image_.lo >= -1e-12 && image_.hi <= 1.0 + 1e-12, "branch image must lie in [0,1]");
    image_.lo = std::max(0.0, image_.lo);
    image_.hi = std::min(1.0, image_.hi);
    // Interior derivative sign must match the orientation (strict monotonicity).
    for (int i = 1; i < 16; ++i) {
      const double x = domain_.lo + domain_.length() * i / 16.0;
      const double d = deriv_(x);
      require(d * orientation_ > 0.0, "branch derivative must not vanish or change sign inside the domain");
    }
  }

  static Branch affine(Interval domain, double slope, double intercept) {
    require(slope != 0.0, "affine branch needs nonzero slope");
    Branch b(domain, [slope, intercept](double x) { return slope * x + intercept; },
             [slope](double) { return slope; }, true);
    b.affine_ = AffineForm{slope, intercept, std::nullopt, std::nullopt, std::nullopt};
    return b;
  }

  static Branch affine_exact(const Rational& lo, const Rational& hi, const Rational& slope,
                             const Rational& intercept) {
    Branch b = affine({static_cast<double>(lo), static_cast<double>(hi)},
                      static_cast<double>(slope), static_cast<double>(intercept));
    b.affine_->slope_q = slope;
    b.affine_->intercept_q = intercept;
    b.affine_->domain_q = std::make_pair(lo, hi);
    return b;
  }

  const Interval& domain() const { return domain_; }
  const Interval& image() const { return image_; }
  int orientation() const { return orientation_; }
  bool deriv_monotone() const { return deriv_monotone_; }
  const std::optional<AffineForm>& affine_form() const { return affine_; }
  bool is_affine() const { return affine_.has_value(); }

  double operator()(double x) const {
    const double y = forward_(x);
    return std::clamp(y, image_.lo, image_.hi);
  }
  double derivative(double x) const { return deriv_(x); }

  /// Inverse branch; affine branches invert in closed form, others by bisection to 1e-15.
  double inverse(double y) const {
    if (!image_.contains(y, 1e-12)) {
      throw Error(ErrorCode::not_in_image, "value " + std::to_string(y) + " outside branch image");
    }
    y = std::clamp(y, image_.lo, image_.hi);
    if (affine_) {
      const double x = (y - affine_->intercept) / affine_->slope;
      return std::clamp(x, domain_.lo, domain_.hi);
    }
    if (y == image_.lo) return orientation_ > 0 ? domain_.lo : domain_.hi;
    if (y == image_.hi) return orientation_ > 0 ? domain_.hi : domain_.lo;
    double lo = domain_.lo, hi = domain_.hi;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
      const double m = 0.5 * (lo + hi);
      const double fm = forward_(m);
      if ((fm < y) == (orientation_ > 0)) {
        lo = m;
      } else {
        hi = m;
      }
    }
    return 0.5 * (lo + hi);
  }

  /// Preimage of a subinterval of the image.
  Interval preimage(const Interval& y) const {
    const double a = inverse(y.lo);
    const double b = inverse(y.hi);
    return {std::min(a, b), std::max(a, b)};
  }

  /// Forward image of a subinterval of the domain.
  Interval forward(const Interval& x) const {
    const double a = (*this)(x.lo);
    const double b = (*this)(x.hi);
    return {std::min(a, b), std::max(a, b)};
  }

  /// Range of log|f'| on a subinterval of the domain.
  Bound log_abs_deriv(const Interval& x) const {
    if (affine_) {
      const double v = std::log(std::abs(affine_->slope));
      return {v, v, true};
    }
    const double a = std::log(std::abs(deriv_(x.lo)));
    const double b = std::log(std::abs(deriv_(x.hi)));
    if (deriv_monotone_) return {std::min(a, b), std::max(a, b), true};
    const double c = std::log(std::abs(deriv_(x.mid())));
    return {std::min({a, b, c}), std::max({a, b, c}), false};
  }

 private:
  Interval domain_;
  Interval image_;
  Fn forward_;
  Fn deriv_;
  bool deriv_monotone_ = false;
  int orientation_ = 1;
  std::optional<AffineForm> affine_;
};

/// Piecewise-monotone map of [0,1]. Immutable after construction.
class IntervalMap {
 public:
  static constexpr double kMembershipTol = 1e-14;

  IntervalMap(std::vector<Branch> branches, std::string name)
      : branches_(std::move(branches)), name_(std::move(name)) {
    require(!branches_.empty(), "map needs at least one branch");
    for (size_t i = 0; i < branches_.size(); ++i) {
      for (size_t j = i + 1; j < branches_.size(); ++j) {
        require(branches_[i].domain().overlap(branches_[j].domain()) <= 1e-14,
                "branch domains must have disjoint interiors");
      }
    }
  }

  const std::string& name() const { return name_; }
  size_t size() const { return branches_.size(); }
  const Branch& branch(size_t i) const { return branches_.at(i); }
  const std::vector<Branch>& branches() const { return branches_; }

  /// Branch containing x; the lowest index wins on shared boundaries.
  std::optional<size_t> branch_index(double x) const {
    for (size_t i = 0; i < branches_.size(); ++i) {
      if (branches_[i].domain().contains(x, kMembershipTol)) return i;
    }
    return std::nullopt;
  }

  std::optional<double> apply(double x) const {
    const auto b = branch_index(x);
    if (!b) return std::nullopt;
    const auto& br = branches_[*b];
    return br(std::clamp(x, br.domain().lo, br.domain().hi));
  }

  bool is_affine() const {
    for (const auto& b : branches_) {
      if (!b.is_affine()) return false;
    }
    return true;
  }

  bool has_rational_data() const {
    for (const auto& b : branches_) {
      if (!b.is_affine() || !b.affine_form()->slope_q || !b.affine_form()->domain_q) return false;
    }
    return true;
  }

  /// Every branch maps its domain onto all of [0,1].
  bool full_branch() const {
    for (const auto& b : branches_) {
      if (b.image().lo > 1e-12 || b.image().hi < 1.0 - 1e-12) return false;
    }
    return true;
  }

  /// Certified lower bound on |f'| over all branches (exact for affine maps).
  double min_expansion() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : branches_) {
      const Bound r = b.log_abs_deriv(b.domain());
      m = std::min(m, std::exp(r.lo));
    }
    return m;
  }

  double max_log_derivative() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& b : branches_) m = std::max(m, b.log_abs_deriv(b.domain()).hi);
    return m;
  }

  double min_log_derivative() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : branches_) m = std::min(m, b.log_abs_deriv(b.domain()).lo);
    return m;
  }

 private:
  std::vector<Branch> branches_;
  std::string name_;
};

/// Every branch image meets each domain either fully or in at most a point.
inline bool check_markov(const IntervalMap& map, double tol = 1e-12) {
  for (const auto& bi : map.branches()) {
    for (const auto& bj : map.branches()) {
      const double ov = bi.image().overlap(bj.domain());
      if (ov > tol && !bi.image().contains(bj.domain(), tol)) return false;
    }
  }
  return true;
}

struct Orbit {
  std::vector<double> points;
  std::optional<size_t> escaped_at;  ///< index of the first point that has no image
  bool escaped() const { return escaped_at.has_value(); }
};

/// Orbit x, f(x), ..., f^n(x). An orbit that leaves every branch domain stops early
/// with `escaped_at` set to the step whose image could not be formed.
inline Orbit evaluate(const IntervalMap& map, double x, size_t n) {
  require(x >= 0.0 && x <= 1.0, "evaluate: point must lie in [0,1]");
  Orbit orbit;
  orbit.points.reserve(n + 1);
  orbit.points.push_back(x);
  for (size_t i = 0; i < n; ++i) {
    const auto y = map.apply(orbit.points.back());
    if (!y) {
      orbit.escaped_at = i + 1;
      return orbit;
    }
    orbit.points.push_back(*y);
  }
  return orbit;
}

inline double branch_inverse(const IntervalMap& map, size_t branch, double y) {
  require(branch < map.size(), "branch index out of range");
  return map.branch(branch).inverse(y);
}

/// Exact orbit in rational arithmetic; requires rational affine data on every branch.
inline std::vector<Rational> evaluate_exact(const IntervalMap& map, const Rational& x, size_t n) {
  require(map.has_rational_data(), "exact evaluation needs rational affine branches");
  require(x >= 0 && x <= 1, "evaluate: point must lie in [0,1]");
  std::vector<Rational> pts{x};
  pts.reserve(n + 1);
  for (size_t i = 0; i < n; ++i) {
    const Rational& p = pts.back();
    bool found = false;
    for (const auto& b : map.branches()) {
      const auto& af = *b.affine_form();
      if (p >= af.domain_q->first && p <= af.domain_q->second) {
        pts.push_back(*af.slope_q * p + *af.intercept_q);
        found = true;
        break;
      }
    }
    if (!found) throw Error(ErrorCode::escaped, "orbit escaped at step " + std::to_string(i + 1));
  }
  return pts;
}

namespace builtin {

namespace detail {
inline bool is_integral(double s) { return std::abs(s - std::round(s)) == 0.0 && std::abs(s) < 1e9; }
}  // namespace detail

/// k increasing affine full branches with the given slopes, packed from 0.
inline IntervalMap full_linear(size_t k, const std::vector<double>& slopes) {
  require(k >= 1 && slopes.size() == k, "full-linear: slope list must have k entries");
  double total = 0.0;
  bool exact = true;
  for (double s : slopes) {
    require(s > 1.0, "full-linear: slopes must exceed 1");
    total += 1.0 / s;
    exact = exact && detail::is_integral(s);
  }
  require(total <= 1.0 + 1e-12, "full-linear: sum of 1/slope must not exceed 1");
  std::vector<Branch> branches;
  if (exact) {
    Rational c = 0;
    for (double sd : slopes) {
      const Rational s = static_cast<long long>(std::llround(sd));
      const Rational next = c + Rational(1) / s;
      branches.push_back(Branch::affine_exact(c, next, s, -s * c));
      c = next;
    }
  } else {
    double c = 0.0;
    for (double s : slopes) {
      const double next = std::min(1.0, c + 1.0 / s);
      branches.push_back(Branch::affine({c, next}, s, -s * c));
      c = next;
    }
  }
  return IntervalMap(std::move(branches), "full-linear");
}

inline IntervalMap ternary_cantor() {
  std::vector<Branch> b;
  b.push_back(Branch::affine_exact(0, Rational(1, 3), 3, 0));
  b.push_back(Branch::affine_exact(Rational(2, 3), 1, 3, -2));
  return IntervalMap(std::move(b), "ternary-cantor");
}

inline IntervalMap tent() {
  std::vector<Branch> b;
  b.push_back(Branch::affine_exact(0, Rational(1, 2), 2, 0));
  b.push_back(Branch::affine_exact(Rational(1, 2), 1, -2, 2));
  return IntervalMap(std::move(b), "tent");
}

/// x -> a x (1 - x); only a = 4 (full unimodal) is supported.
inline IntervalMap logistic(double a = 4.0) {
  require(a == 4.0, "logistic: only a = 4 is supported");
  auto f = [](double x) { return 4.0 * x * (1.0 - x); };
  auto df = [](double x) { return 4.0 - 8.0 * x; };
  std::vector<Branch> b;
  b.emplace_back(Interval{0.0, 0.5}, f, df, true);
  b.emplace_back(Interval{0.5, 1.0}, f, df, true);
  return IntervalMap(std::move(b), "logistic");
}

/// Fixed point x* of x(1 + x^s) = 1.
inline double manneville_pomeau_break(double s) {
  return bisect([s](double x) { return x * (1.0 + std::pow(x, s)) - 1.0; }, 0.0, 1.0, 1e-16);
}

/// x(1 + x^s) on [0, x*], affine onto [0,1] on [x*, 1].
inline IntervalMap manneville_pomeau(double s) {
  require(s > 0.0, "manneville-pomeau: exponent must be positive");
  const double xs = manneville_pomeau_break(s);
  std::vector<Branch> b;
  b.emplace_back(
      Interval{0.0, xs}, [s](double x) { return x * (1.0 + std::pow(x, s)); },
      [s](double x) { return 1.0 + (1.0 + s) * std::pow(x, s); }, true);
  const double slope = 1.0 / (1.0 - xs);
  b.push_back(Branch::affine({xs, 1.0}, slope, -slope * xs));
  return IntervalMap(std::move(b), "manneville-pomeau");
}

struct Params {
  std::vector<double> slopes;
  double a = 4.0;
  double s = 0.5;
};

inline IntervalMap make(const std::string& name, const Params& p = {}) {
  if (name == "full-linear") return full_linear(p.slopes.size(), p.slopes);
  if (name == "ternary-cantor") return ternary_cantor();
  if (name == "tent") return tent();
  if (name == "logistic") return logistic(p.a);
  if (name == "manneville-pomeau") return manneville_pomeau(p.s);
  throw Error(ErrorCode::invalid_argument, "unknown builtin map '" + name + "'");
}

}  // namespace builtin

}  // namespace birkhoff

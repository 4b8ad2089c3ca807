#pragma once

// Observables on [0,1] with interval range bounds.
//
// Step functions (indicators included) are evaluated pointwise as closed sets, but
// their range on an interval is taken over the interval's interior: the boundary is a
// finite set and never changes a Birkhoff sum on a nondegenerate cylinder.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "interval_map.hpp"
#include "numeric.hpp"

namespace birkhoff {

class Potential {
 public:
  using Fn = std::function<double(double)>;

  enum class Kind { constant, step, polynomial, function, log_derivative };

  static Potential constant(double c) {
    Potential p(Kind::constant, "constant");
    p.scale_ = 0.0;
    p.shift_ = c;
    return p;
  }

  /// 1 on the closed interval [a, b], 0 elsewhere.
  static Potential indicator(Interval on) {
    require(on.lo <= on.hi, "indicator: empty interval");
    return step({on.lo, on.hi}, {0.0, 1.0, 0.0});
  }

  /// Piecewise constant: values[i] on (breaks[i-1], breaks[i]); values.size() == breaks.size() + 1.
  /// At a breakpoint the larger adjacent value is taken (closed indicator sets).
  static Potential step(std::vector<double> breaks, std::vector<double> values) {
    require(values.size() == breaks.size() + 1, "step: need one more value than breakpoints");
    require(std::is_sorted(breaks.begin(), breaks.end()), "step: breakpoints must be sorted");
    Potential p(Kind::step, "step");
    p.breaks_ = std::move(breaks);
    p.values_ = std::move(values);
    return p;
  }

  /// c0 + c1 x + c2 x^2 + ...
  static Potential polynomial(std::vector<double> coeffs) {
    require(!coeffs.empty(), "polynomial: need at least one coefficient");
    Potential p(Kind::polynomial, "polynomial");
    p.coeffs_ = std::move(coeffs);
    while (p.coeffs_.size() > 1 && p.coeffs_.back() == 0.0) p.coeffs_.pop_back();
    return p;
  }

  /// Arbitrary continuous function; `modulus` (if given) bounds |f(x)-f(y)| for |x-y| <= r.
  static Potential from_function(Fn f, std::optional<Fn> modulus = std::nullopt) {
    Potential p(Kind::function, "function");
    p.fn_ = std::make_shared<Fn>(std::move(f));
    if (modulus) p.modulus_ = std::make_shared<Fn>(std::move(*modulus));
    return p;
  }

  /// log|f'| of a map, using the tie rule at branch boundaries.
  static Potential log_derivative(const IntervalMap& map) {
    Potential p(Kind::log_derivative, "log-derivative");
    p.map_ = std::make_shared<IntervalMap>(map);
    return p;
  }

  /// a * this + b.
  Potential affine(double a, double b) const {
    Potential p = *this;
    p.scale_ = scale_ * a;
    p.shift_ = shift_ * a + b;
    if (a == 0.0) p.kind_ = Kind::constant;
    return p;
  }

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool is_constant() const { return kind_ == Kind::constant || scale_ == 0.0; }

  double operator()(double x) const { return scale_ * raw(x) + shift_; }

  /// Range of the potential over the interval; `certified` is false for sampled bounds.
  Bound range_on(const Interval& iv) const {
    if (is_constant()) return {shift_, shift_, true};
    const Bound r = raw_range(iv);
    double lo = scale_ * r.lo + shift_, hi = scale_ * r.hi + shift_;
    if (lo > hi) std::swap(lo, hi);
    return {lo, hi, r.certified};
  }

  /// Value if the potential is constant on the interior of the interval.
  std::optional<double> constant_on(const Interval& iv) const {
    const Bound r = range_on(iv);
    if (r.certified && r.lo == r.hi) return r.lo;
    return std::nullopt;
  }

  /// Optional modulus of continuity.
  std::optional<double> modulus(double r) const {
    switch (kind_) {
      case Kind::constant:
        return 0.0;
      case Kind::polynomial:
        return std::abs(scale_) * lipschitz() * r;
      case Kind::function:
        if (modulus_) return std::abs(scale_) * (*modulus_)(r);
        return std::nullopt;
      default:
        return std::nullopt;
    }
  }

 private:
  Potential(Kind k, std::string name) : kind_(k), name_(std::move(name)) {}

  double raw(double x) const {
    switch (kind_) {
      case Kind::constant:
        return 0.0;
      case Kind::step: {
        for (size_t i = 0; i < breaks_.size(); ++i) {
          if (x < breaks_[i]) return values_[i];
          if (x == breaks_[i]) return std::max(values_[i], values_[i + 1]);
        }
        return values_.back();
      }
      case Kind::polynomial:
        return horner(x);
      case Kind::function:
        return (*fn_)(x);
      case Kind::log_derivative: {
        const auto b = map_->branch_index(x);
        if (!b) throw Error(ErrorCode::escaped, "log-derivative evaluated outside all branch domains");
        return std::log(std::abs(map_->branch(*b).derivative(x)));
      }
    }
    return 0.0;
  }

  double horner(double x) const {
    double v = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) v = v * x + *it;
    return v;
  }

  /// Lipschitz constant of the polynomial on [0,1].
  double lipschitz() const {
    double l = 0.0;
    for (size_t k = 1; k < coeffs_.size(); ++k) l += static_cast<double>(k) * std::abs(coeffs_[k]);
    return l;
  }

  Bound raw_range(const Interval& iv) const {
    switch (kind_) {
      case Kind::constant:
        return {0.0, 0.0, true};
      case Kind::step: {
        // Values taken on the open interval (lo, hi); a degenerate interval is a point.
        if (iv.lo >= iv.hi) {
          const double v = raw(iv.lo);
          return {v, v, true};
        }
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (size_t i = 0; i < values_.size(); ++i) {
          const double a = i == 0 ? -std::numeric_limits<double>::infinity() : breaks_[i - 1];
          const double b = i == breaks_.size() ? std::numeric_limits<double>::infinity() : breaks_[i];
          if (std::min(b, iv.hi) > std::max(a, iv.lo)) {
            lo = std::min(lo, values_[i]);
            hi = std::max(hi, values_[i]);
          }
        }
        return {lo, hi, true};
      }
      case Kind::polynomial: {
        const double a = horner(iv.lo), b = horner(iv.hi);
        double lo = std::min(a, b), hi = std::max(a, b);
        if (coeffs_.size() <= 2) return {lo, hi, true};
        if (coeffs_.size() == 3) {
          const double v = -coeffs_[1] / (2.0 * coeffs_[2]);
          if (v > iv.lo && v < iv.hi) {
            const double c = horner(v);
            lo = std::min(lo, c);
            hi = std::max(hi, c);
          }
          return {lo, hi, true};
        }
        const double half = 0.5 * lipschitz() * iv.length();
        const double m = horner(iv.mid());
        return {m - half, m + half, true};
      }
      case Kind::function: {
        const double a = (*fn_)(iv.lo), b = (*fn_)(iv.hi);
        if (modulus_) {
          const double w = (*modulus_)(iv.length());
          return {std::max(a, b) - w, std::min(a, b) + w, true};
        }
        const double c = (*fn_)(iv.mid());
        return {std::min({a, b, c}), std::max({a, b, c}), false};
      }
      case Kind::log_derivative: {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        bool certified = true, hit = false;
        for (const auto& br : map_->branches()) {
          const Interval piece = br.domain().intersect(iv);
          if (piece.lo > piece.hi) continue;
          if (piece.lo == piece.hi && iv.lo < iv.hi) continue;  // touches at a point only
          const Bound r = br.log_abs_deriv(piece);
          lo = std::min(lo, r.lo);
          hi = std::max(hi, r.hi);
          certified = certified && r.certified;
          hit = true;
        }
        if (!hit) throw Error(ErrorCode::escaped, "log-derivative range requested off the branch domains");
        return {lo, hi, certified};
      }
    }
    return {0.0, 0.0, true};
  }

  Kind kind_;
  std::string name_;
  double scale_ = 1.0;
  double shift_ = 0.0;
  std::vector<double> breaks_, values_;
  std::vector<double> coeffs_;
  std::shared_ptr<Fn> fn_, modulus_;
  std::shared_ptr<IntervalMap> map_;
};

}  // namespace birkhoff

#pragma once

// Exact word counts. Binomial sums at k = 60 exceed 2^64 only barely, so the
// counters are 128-bit with saturation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace birkhoff {

class Count {
 public:
  using value_type = unsigned __int128;

  constexpr Count() = default;
  constexpr Count(unsigned long long v) : v_(v) {}  // NOLINT: implicit by intent

  static constexpr Count saturated() {
    Count c;
    c.v_ = std::numeric_limits<value_type>::max();
    c.saturated_ = true;
    return c;
  }

  bool is_saturated() const { return saturated_; }
  value_type raw() const { return v_; }

  double to_double() const {
    if (saturated_) return std::numeric_limits<double>::infinity();
    return static_cast<double>(v_);
  }

  double log() const { return std::log(to_double()); }

  Count& operator+=(const Count& o) {
    if (saturated_ || o.saturated_ || v_ > std::numeric_limits<value_type>::max() - o.v_) {
      *this = saturated();
    } else {
      v_ += o.v_;
    }
    return *this;
  }

  Count& operator*=(const Count& o) {
    if (saturated_ || o.saturated_) {
      *this = saturated();
    } else if (v_ != 0 && o.v_ > std::numeric_limits<value_type>::max() / v_) {
      *this = saturated();
    } else {
      v_ *= o.v_;
    }
    return *this;
  }

  friend Count operator+(Count a, const Count& b) { return a += b; }
  friend Count operator*(Count a, const Count& b) { return a *= b; }
  friend bool operator==(const Count& a, const Count& b) {
    return a.v_ == b.v_ && a.saturated_ == b.saturated_;
  }
  friend bool operator<(const Count& a, const Count& b) { return a.v_ < b.v_; }
  friend bool operator<=(const Count& a, const Count& b) { return a.v_ <= b.v_; }

  std::string to_string() const {
    if (saturated_) return "saturated";
    if (v_ == 0) return "0";
    std::string s;
    value_type v = v_;
    while (v > 0) {
      s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
      v /= 10;
    }
    std::reverse(s.begin(), s.end());
    return s;
  }

 private:
  value_type v_ = 0;
  bool saturated_ = false;
};

inline Count pow(Count base, unsigned exponent) {
  Count r(1);
  for (unsigned i = 0; i < exponent; ++i) r *= base;
  return r;
}

}  // namespace birkhoff

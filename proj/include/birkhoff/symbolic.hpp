#pragma once

// Markov transition structure, cylinder enumeration, and Birkhoff-sum bounds on cylinders.
//
// Cylinders are enumerated by a depth-first search that prepends symbols: the cylinder
// of (a, w) is the a-branch preimage of the cylinder of w. Every interval on the search
// stack is therefore one of the forward images f^i(C) of the leaf cylinder C, which is
// exactly what the Birkhoff sum bounds need.

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "count.hpp"
#include "error.hpp"
#include "interval_map.hpp"
#include "numeric.hpp"
#include "parallel.hpp"
#include "potential.hpp"

namespace birkhoff {

using Word = std::vector<int>;
using Matrix01 = std::vector<std::vector<std::uint8_t>>;

class MarkovStructure {
 public:
  MarkovStructure() = default;

  /// Abstract transition matrix without geometry (used for mixing checks).
  static MarkovStructure from_matrix(Matrix01 t) {
    require(!t.empty(), "transition matrix must be nonempty");
    for (const auto& row : t) require(row.size() == t.size(), "transition matrix must be square");
    MarkovStructure m;
    m.transition_ = std::move(t);
    return m;
  }

  static MarkovStructure from_map(const IntervalMap& map, double tol = 1e-12) {
    if (!check_markov(map, tol)) {
      throw Error(ErrorCode::invalid_argument, "map '" + map.name() + "' has no Markov structure on its branch domains");
    }
    MarkovStructure m;
    const size_t k = map.size();
    m.transition_.assign(k, std::vector<std::uint8_t>(k, 0));
    for (size_t i = 0; i < k; ++i) {
      m.partition_.push_back(map.branch(i).domain());
      bool any = false;
      for (size_t j = 0; j < k; ++j) {
        if (map.branch(i).image().contains(map.branch(j).domain(), tol)) {
          m.transition_[i][j] = 1;
          any = true;
        }
      }
      require(any, "branch " + std::to_string(i) + " has no admissible successor");
    }
    return m;
  }

  size_t size() const { return transition_.size(); }
  const std::vector<Interval>& partition() const { return partition_; }
  const Matrix01& transition() const { return transition_; }
  bool allowed(int a, int b) const { return transition_[a][b] != 0; }

 private:
  std::vector<Interval> partition_;
  Matrix01 transition_;
};

struct MixingResult {
  bool mixing = false;
  int power = 0;  ///< smallest m with T^m > 0 entrywise (0 when not mixing)
};

/// Primitivity test; Wielandt's bound (K-1)^2 + 1 caps the search.
inline MixingResult mixing_check(const MarkovStructure& markov) {
  const size_t k = markov.size();
  const auto& t = markov.transition();
  Matrix01 p = t;
  const size_t cap = (k - 1) * (k - 1) + 1;
  for (size_t m = 1; m <= cap; ++m) {
    bool positive = true;
    for (const auto& row : p) {
      for (auto v : row) positive = positive && v;
    }
    if (positive) return {true, static_cast<int>(m)};
    Matrix01 next(k, std::vector<std::uint8_t>(k, 0));
    for (size_t i = 0; i < k; ++i) {
      for (size_t l = 0; l < k; ++l) {
        if (!p[i][l]) continue;
        for (size_t j = 0; j < k; ++j) next[i][j] |= t[l][j];
      }
    }
    p = std::move(next);
  }
  return {false, 0};
}

/// Number of admissible words of length n ending in each symbol.
inline std::vector<Count> count_words_by_last(const MarkovStructure& markov, size_t n) {
  require(n >= 1, "word length must be at least 1");
  const size_t k = markov.size();
  std::vector<Count> v(k, Count(1));
  for (size_t step = 1; step < n; ++step) {
    std::vector<Count> w(k, Count(0));
    for (size_t i = 0; i < k; ++i) {
      for (size_t j = 0; j < k; ++j) {
        if (markov.allowed(static_cast<int>(i), static_cast<int>(j))) w[j] += v[i];
      }
    }
    v = std::move(w);
  }
  return v;
}

inline Count count_words(const MarkovStructure& markov, size_t n) {
  Count total(0);
  for (const auto& c : count_words_by_last(markov, n)) total += c;
  return total;
}

struct Cylinder {
  Word word;
  Interval interval;
  size_t depth() const { return word.size(); }
};

struct CylinderStats {
  std::vector<Bound> sums;  ///< bounds on S_n(phi_j) per potential
  Bound logderiv;           ///< bounds on log|(f^n)'|
  double length = 0.0;
  bool certified = true;
};

struct EnumOptions {
  Count budget = Count(10'000'000);
  unsigned threads = 1;
};

/// Interval of points following `word` and then landing in `target`.
inline Interval pullback(const IntervalMap& map, const Word& word, const Interval& target) {
  Interval iv = target;
  for (auto it = word.rbegin(); it != word.rend(); ++it) {
    const Branch& b = map.branch(static_cast<size_t>(*it));
    const Interval img = b.image().intersect(iv);
    if (img.lo > img.hi) throw Error(ErrorCode::not_in_image, "word is not admissible for the target");
    iv = b.preimage(img);
  }
  return iv;
}

inline Cylinder cylinder_of(const IntervalMap& map, const Word& word) {
  require(!word.empty(), "cylinder word must be nonempty");
  for (int a : word) require(a >= 0 && static_cast<size_t>(a) < map.size(), "symbol out of range");
  Word head(word.begin(), word.end() - 1);
  return {word, pullback(map, head, map.branch(static_cast<size_t>(word.back())).domain())};
}

/// Bounds of S_n(phi_j) and log|(f^n)'| on a cylinder, from the ranges on each forward image.
inline CylinderStats cylinder_stats(const IntervalMap& map, const Cylinder& cyl,
                                    const std::vector<Potential>& pots) {
  CylinderStats st;
  st.sums.assign(pots.size(), Bound{0.0, 0.0, true});
  st.logderiv = {0.0, 0.0, true};
  st.length = cyl.interval.length();
  const size_t n = cyl.depth();
  for (size_t i = 0; i < n; ++i) {
    const Word tail(cyl.word.begin() + static_cast<std::ptrdiff_t>(i), cyl.word.end());
    const Interval img = cylinder_of(map, tail).interval;
    for (size_t j = 0; j < pots.size(); ++j) st.sums[j] += pots[j].range_on(img);
    st.logderiv += map.branch(static_cast<size_t>(cyl.word[i])).log_abs_deriv(img);
  }
  st.certified = st.logderiv.certified;
  for (const auto& s : st.sums) st.certified = st.certified && s.certified;
  return st;
}

namespace detail {

template <class Visit>
struct CylinderDfs {
  const IntervalMap& map;
  const MarkovStructure& markov;
  const std::vector<Potential>& pots;
  size_t n;
  Visit& visit;
  Cylinder cyl;
  std::vector<CylinderStats> stack;  // stats accumulated per placed-symbol count

  void run_root(int last) {
    cyl.word.assign(n, 0);
    stack.assign(n + 1, CylinderStats{});
    stack[0].sums.assign(pots.size(), Bound{0.0, 0.0, true});
    stack[0].logderiv = {0.0, 0.0, true};
    place(0, last, map.branch(static_cast<size_t>(last)).domain());
  }

  // `d` symbols already placed; place symbol `a` whose cylinder-with-suffix is `iv`.
  void place(size_t d, int a, const Interval& iv) {
    cyl.word[n - 1 - d] = a;
    CylinderStats& cur = stack[d + 1];
    const CylinderStats& prev = stack[d];
    cur.sums = prev.sums;
    for (size_t j = 0; j < pots.size(); ++j) cur.sums[j] += pots[j].range_on(iv);
    cur.logderiv = prev.logderiv + map.branch(static_cast<size_t>(a)).log_abs_deriv(iv);
    if (d + 1 == n) {
      cyl.interval = iv;
      cur.length = iv.length();
      cur.certified = cur.logderiv.certified;
      for (const auto& s : cur.sums) cur.certified = cur.certified && s.certified;
      visit(static_cast<const Cylinder&>(cyl), static_cast<const CylinderStats&>(cur));
      return;
    }
    for (size_t b = 0; b < markov.size(); ++b) {
      if (!markov.allowed(static_cast<int>(b), a)) continue;
      place(d + 1, static_cast<int>(b), map.branch(b).preimage(iv));
    }
  }
};

inline void check_budget(const MarkovStructure& markov, size_t n, const Count& budget) {
  const Count total = count_words(markov, n);
  if (budget < total) {
    throw Error(ErrorCode::budget_exceeded,
                "depth " + std::to_string(n) + " has " + total.to_string() + " cylinders, budget " + budget.to_string());
  }
}

}  // namespace detail

/// Streams every admissible depth-n cylinder with its stats to `visit(cyl, stats)`.
/// Order: by last symbol, then depth-first over earlier symbols in increasing index.
template <class Visit>
void enumerate_cylinders(const IntervalMap& map, const MarkovStructure& markov, size_t n,
                         const std::vector<Potential>& pots, Visit&& visit, const EnumOptions& opt = {}) {
  require(n >= 1, "cylinder depth must be at least 1");
  require(markov.size() == map.size(), "Markov structure does not match the map");
  detail::check_budget(markov, n, opt.budget);
  detail::CylinderDfs<std::remove_reference_t<Visit>> dfs{map, markov, pots, n, visit, {}, {}};
  for (size_t last = 0; last < map.size(); ++last) dfs.run_root(static_cast<int>(last));
}

/// Sharded enumeration: one shard per last symbol, each with its own visitor state.
/// `make(shard)` builds a visitor; visitors are returned in shard order so any
/// subsequent reduction is independent of the thread count.
template <class Make>
auto enumerate_cylinders_sharded(const IntervalMap& map, const MarkovStructure& markov, size_t n,
                                 const std::vector<Potential>& pots, Make&& make, const EnumOptions& opt = {}) {
  require(n >= 1, "cylinder depth must be at least 1");
  require(markov.size() == map.size(), "Markov structure does not match the map");
  detail::check_budget(markov, n, opt.budget);
  using V = decltype(make(size_t{0}));
  std::vector<std::optional<V>> out(map.size());
  parallel_for(map.size(), opt.threads, [&](size_t shard) {
    V v = make(shard);
    detail::CylinderDfs<V> dfs{map, markov, pots, n, v, {}, {}};
    dfs.run_root(static_cast<int>(shard));
    out[shard].emplace(std::move(v));
  });
  std::vector<V> result;
  result.reserve(out.size());
  for (auto& o : out) result.push_back(std::move(*o));
  return result;
}

/// Values of a potential on the interiors of the given cells, if constant on each.
inline std::optional<std::vector<double>> cell_values(const Potential& pot, const std::vector<Interval>& cells) {
  std::vector<double> v;
  v.reserve(cells.size());
  for (const auto& c : cells) {
    const auto x = pot.constant_on(c);
    if (!x) return std::nullopt;
    v.push_back(*x);
  }
  return v;
}

/// All depth-n cylinders with the same last symbol and symbol counts, for affine maps
/// whose potentials are constant on the branch domains. Such cylinders share their
/// length, Birkhoff sums and expansion exactly.
struct CylinderClass {
  int last = 0;
  std::vector<int> counts;  ///< occurrences of each symbol in the word
  Count multiplicity;
  double log_length = 0.0;
  std::vector<double> sums;
  double logderiv = 0.0;
};

inline bool supports_class_aggregation(const IntervalMap& map, const MarkovStructure& markov,
                                       const std::vector<Potential>& pots) {
  if (!map.is_affine() || markov.partition().size() != map.size()) return false;
  for (const auto& p : pots) {
    if (!cell_values(p, markov.partition())) return false;
  }
  return true;
}

inline std::vector<CylinderClass> aggregate_classes(const IntervalMap& map, const MarkovStructure& markov, size_t n,
                                                    const std::vector<Potential>& pots) {
  require(n >= 1, "cylinder depth must be at least 1");
  if (!supports_class_aggregation(map, markov, pots)) {
    throw Error(ErrorCode::invalid_argument,
                "class aggregation needs an affine Markov map and potentials constant on branch domains");
  }
  const size_t k = map.size();
  std::vector<std::vector<double>> vals;
  for (const auto& p : pots) vals.push_back(*cell_values(p, markov.partition()));
  std::vector<double> logslope(k);
  for (size_t i = 0; i < k; ++i) logslope[i] = std::log(std::abs(map.branch(i).affine_form()->slope));

  using Key = std::pair<int, std::vector<int>>;
  std::map<Key, Count> cur;
  for (size_t a = 0; a < k; ++a) {
    std::vector<int> c(k, 0);
    c[a] = 1;
    cur[{static_cast<int>(a), c}] = Count(1);
  }
  for (size_t step = 1; step < n; ++step) {
    std::map<Key, Count> next;
    for (const auto& [key, mult] : cur) {
      for (size_t b = 0; b < k; ++b) {
        if (!markov.allowed(key.first, static_cast<int>(b))) continue;
        std::vector<int> c = key.second;
        ++c[b];
        next[{static_cast<int>(b), std::move(c)}] += mult;
      }
    }
    cur = std::move(next);
  }
  std::vector<CylinderClass> out;
  out.reserve(cur.size());
  for (const auto& [key, mult] : cur) {
    CylinderClass cl;
    cl.last = key.first;
    cl.counts = key.second;
    cl.multiplicity = mult;
    // f^{n-1} maps the cylinder affinely onto the domain of the last symbol.
    cl.log_length = std::log(markov.partition()[static_cast<size_t>(cl.last)].length()) +
                    logslope[static_cast<size_t>(cl.last)];
    for (size_t i = 0; i < k; ++i) {
      cl.logderiv += cl.counts[i] * logslope[i];
      cl.log_length -= cl.counts[i] * logslope[i];
    }
    cl.sums.assign(pots.size(), 0.0);
    for (size_t j = 0; j < pots.size(); ++j) {
      for (size_t i = 0; i < k; ++i) cl.sums[j] += cl.counts[i] * vals[j][i];
    }
    out.push_back(std::move(cl));
  }
  return out;
}

/// S_n(phi)(x) / n along a floating-point orbit.
inline double empirical_average(const IntervalMap& map, double x, size_t n, const Potential& phi) {
  require(n >= 1, "empirical average needs n >= 1");
  const Orbit orbit = evaluate(map, x, n - 1);
  if (orbit.escaped()) throw Error(ErrorCode::escaped, "orbit escaped at step " + std::to_string(*orbit.escaped_at));
  KahanSum s;
  for (double p : orbit.points) s.add(phi(p));
  return s.value() / static_cast<double>(n);
}

/// Same, along an exact rational orbit (rational affine maps only). Floating-point
/// orbits of maps like x -> 2x mod 1 collapse onto 0 after ~53 steps.
inline double empirical_average(const IntervalMap& map, const Rational& x, size_t n, const Potential& phi) {
  require(n >= 1, "empirical average needs n >= 1");
  const auto orbit = evaluate_exact(map, x, n - 1);
  KahanSum s;
  for (const auto& p : orbit) s.add(phi(static_cast<double>(p)));
  return s.value() / static_cast<double>(n);
}

}  // namespace birkhoff

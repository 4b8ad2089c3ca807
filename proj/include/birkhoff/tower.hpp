#pragma once

// First-return induction on a base interval J and finite-depth checks of the tower
// hypotheses (full returns with expansion, shrinking images, bounded distortion, and
// uniform replenishment of the tail).
//
// Components are branch pieces: each return or pending piece carries a single branch
// itinerary, so adjacent pieces reached through different branches are kept apart.

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
#include "symbolic.hpp"

namespace birkhoff {

struct TowerPiece {
  Interval domain;  ///< subset of J
  Word word;        ///< itinerary of length `time`
  size_t time = 0;
  Interval image;   ///< f^time(domain)
  Bound logderiv;   ///< range of log|(f^time)'| on the domain
  long parent = -1; ///< index in pending[time - 1]
};

struct ReturnStructure {
  std::shared_ptr<const IntervalMap> map;
  Interval base;
  size_t depth = 0;
  std::vector<std::vector<TowerPiece>> returns;  ///< returns[n]: components of {R = n}; returns[0] empty
  std::vector<std::vector<TowerPiece>> pending;  ///< pending[n]: components of {R > n}; pending[0] = {J}
  std::vector<double> escaped;                   ///< escaped[n]: mass leaving every branch domain at step n
  size_t unresolved = 0;

  double returned_mass(size_t n) const {
    KahanSum s;
    for (const auto& p : returns.at(n)) s.add(p.domain.length());
    return s.value();
  }
  double tail_mass(size_t n) const {
    KahanSum s;
    for (const auto& p : pending.at(n)) s.add(p.domain.length());
    return s.value();
  }
  /// sum_{k<=n} m(R = k) + m(R > n) + escaped mass up to n, minus m(J).
  double mass_defect(size_t n) const {
    KahanSum s;
    for (size_t k = 1; k <= n; ++k) {
      s.add(returned_mass(k));
      s.add(escaped[k]);
    }
    s.add(tail_mass(n));
    s.add(-base.length());
    return s.value();
  }
};

struct InduceOptions {
  size_t budget = 1'000'000;  ///< total components
};

/// Intervals f^i(domain) for i = 0..time-1, rebuilt backwards from the image.
inline std::vector<Interval> piece_orbit(const IntervalMap& map, const Word& word, const Interval& image) {
  std::vector<Interval> out(word.size());
  Interval iv = image;
  for (size_t i = word.size(); i-- > 0;) {
    const Branch& b = map.branch(static_cast<size_t>(word[i]));
    iv = b.preimage(b.image().intersect(iv));
    out[i] = iv;
  }
  return out;
}

inline Bound orbit_logderiv(const IntervalMap& map, const Word& word, const std::vector<Interval>& orbit,
                            size_t from = 0, size_t to = std::numeric_limits<size_t>::max()) {
  Bound s{0.0, 0.0, true};
  to = std::min(to, word.size());
  for (size_t i = from; i < to; ++i) s += map.branch(static_cast<size_t>(word[i])).log_abs_deriv(orbit[i]);
  return s;
}

/// First-return decomposition of J up to depth N.
inline ReturnStructure induce(const IntervalMap& map, Interval J, size_t N, const InduceOptions& opt = {}) {
  require(J.lo >= 0.0 && J.hi <= 1.0 && J.lo < J.hi, "base must be a nontrivial subinterval of [0,1]");
  require(N >= 1, "depth must be at least 1");
  ReturnStructure rs;
  rs.map = std::make_shared<const IntervalMap>(map);
  rs.base = J;
  rs.depth = N;
  rs.returns.assign(N + 1, {});
  rs.pending.assign(N + 1, {});
  rs.escaped.assign(N + 1, 0.0);
  rs.pending[0].push_back(TowerPiece{J, {}, 0, J, {0.0, 0.0, true}, -1});
  size_t total = 1;
  constexpr double kTiny = 1e-15;

  auto make_piece = [&](const TowerPiece& parent, long parent_idx, int b, const Interval& target) {
    TowerPiece p;
    p.word = parent.word;
    p.word.push_back(b);
    p.time = p.word.size();
    p.image = target;
    p.domain = pullback(map, p.word, target);
    p.parent = parent_idx;
    p.logderiv = orbit_logderiv(map, p.word, piece_orbit(map, p.word, target));
    return p;
  };

  for (size_t n = 1; n <= N; ++n) {
    KahanSum esc;
    for (size_t pi = 0; pi < rs.pending[n - 1].size(); ++pi) {
      const TowerPiece& P = rs.pending[n - 1][pi];
      const Interval Y = P.image;
      // Parts of Y outside every branch domain escape.
      std::vector<Interval> covered;
      for (size_t b = 0; b < map.size(); ++b) {
        const Interval Yb = Y.intersect(map.branch(b).domain());
        if (Yb.hi - Yb.lo <= kTiny) continue;
        covered.push_back(Yb);
        const Interval Z = map.branch(b).forward(Yb);
        const Interval ZJ = Z.intersect(J);
        if (ZJ.hi - ZJ.lo > kTiny) {
          rs.returns[n].push_back(make_piece(P, static_cast<long>(pi), static_cast<int>(b), ZJ));
          ++total;
        }
        for (const Interval out : {Interval{Z.lo, std::min(Z.hi, J.lo)}, Interval{std::max(Z.lo, J.hi), Z.hi}}) {
          if (out.hi - out.lo > kTiny) {
            rs.pending[n].push_back(make_piece(P, static_cast<long>(pi), static_cast<int>(b), out));
            ++total;
          }
        }
        if (total > opt.budget) {
          throw Error(ErrorCode::budget_exceeded, "induction exceeded " + std::to_string(opt.budget) + " components at depth " + std::to_string(n));
        }
      }
      std::sort(covered.begin(), covered.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
      double cursor = Y.lo;
      std::vector<Interval> gaps;
      for (const auto& c : covered) {
        if (c.lo - cursor > kTiny) gaps.push_back({cursor, c.lo});
        cursor = std::max(cursor, c.hi);
      }
      if (Y.hi - cursor > kTiny) gaps.push_back({cursor, Y.hi});
      for (const auto& g : gaps) esc.add(pullback(map, P.word, g).length());
    }
    rs.escaped[n] = esc.value();
  }
  return rs;
}

/// Checks that every return component is a first return: no intermediate image meets the interior of J.
inline bool verify_first_return(const ReturnStructure& rs) {
  const Interval J = rs.base;
  for (size_t n = 1; n <= rs.depth; ++n) {
    for (const auto& p : rs.returns[n]) {
      const auto orbit = piece_orbit(*rs.map, p.word, p.image);
      for (size_t i = 1; i < orbit.size(); ++i) {
        if (orbit[i].overlap(J) > 1e-12) return false;
      }
    }
  }
  return true;
}

struct H1Report {
  bool holds = false;
  double lambda = 0.0;  ///< min over return components of min |(f^n)'|
  bool images_full = true;
  size_t components = 0;
  bool inconclusive = false;
};

inline H1Report check_h1(const ReturnStructure& rs, double tol = 1e-10) {
  H1Report r;
  r.inconclusive = rs.unresolved > 0;
  double min_ld = std::numeric_limits<double>::infinity();
  for (size_t n = 1; n <= rs.depth; ++n) {
    for (const auto& p : rs.returns[n]) {
      ++r.components;
      min_ld = std::min(min_ld, p.logderiv.lo);
      r.images_full = r.images_full && std::abs(p.image.lo - rs.base.lo) <= tol && std::abs(p.image.hi - rs.base.hi) <= tol;
    }
  }
  r.lambda = r.components ? std::exp(min_ld) : 0.0;
  r.holds = !r.inconclusive && r.components > 0 && r.images_full && r.lambda > 1.0;
  return r;
}

/// A composed return: full returns V_1..V_{l-1} followed by a tail piece (a return or a
/// pending piece). `exact` marks elements whose tail is a full return (the family D_n).
struct ComposedElement {
  Word word;
  std::vector<size_t> blocks;  ///< times k_1..k_l
  bool exact = false;
  Interval image;              ///< f^n of the element
};

/// Elements of A_n (and, with exact_only, D_n) for one n.
inline std::vector<ComposedElement> composed_elements(const ReturnStructure& rs, size_t n, bool exact_only,
                                                      size_t budget = 2'000'000) {
  require(n >= 1 && n <= rs.depth, "composed depth must lie in [1, depth]");
  std::vector<ComposedElement> out;
  ComposedElement cur;
  std::function<void(size_t)> rec = [&](size_t remaining) {
    for (size_t j = 1; j <= remaining; ++j) {
      if (j < remaining) {
        for (const auto& v : rs.returns[j]) {
          const size_t w = cur.word.size();
          cur.word.insert(cur.word.end(), v.word.begin(), v.word.end());
          cur.blocks.push_back(j);
          rec(remaining - j);
          cur.blocks.pop_back();
          cur.word.resize(w);
        }
        continue;
      }
      auto emit = [&](const TowerPiece& t, bool exact) {
        ComposedElement e = cur;
        e.word.insert(e.word.end(), t.word.begin(), t.word.end());
        e.blocks.push_back(j);
        e.exact = exact;
        e.image = t.image;
        out.push_back(std::move(e));
        if (out.size() > budget) throw Error(ErrorCode::budget_exceeded, "composed family exceeds budget");
      };
      for (const auto& t : rs.returns[j]) emit(t, true);
      if (!exact_only) {
        for (const auto& t : rs.pending[j]) emit(t, false);
      }
    }
  };
  rec(n);
  return out;
}

struct H2Report {
  std::vector<double> eps;  ///< eps[k] for k = 1..depth (eps[0] unused)
  bool decreasing = false;
  double decay_rate = 0.0;  ///< fitted -slope of log eps_k against k
};

/// eps_k = max |f^i(A)| over A in A_n, n <= depth, with n - i = k.
inline H2Report check_h2(const ReturnStructure& rs, size_t composed_depth) {
  require(composed_depth >= 2 && composed_depth <= rs.depth, "composed depth must lie in [2, depth]");
  H2Report r;
  r.eps.assign(composed_depth + 1, 0.0);
  for (size_t n = 1; n <= composed_depth; ++n) {
    for (const auto& e : composed_elements(rs, n, false)) {
      const auto orbit = piece_orbit(*rs.map, e.word, e.image);
      for (size_t i = 0; i < n; ++i) r.eps[n - i] = std::max(r.eps[n - i], orbit[i].length());
    }
  }
  r.decreasing = true;
  std::vector<double> ks, ls;
  for (size_t k = 1; k <= composed_depth; ++k) {
    if (k > 1) r.decreasing = r.decreasing && r.eps[k] <= r.eps[k - 1] * (1.0 + 1e-12);
    if (r.eps[k] > 0.0) {
      ks.push_back(static_cast<double>(k));
      ls.push_back(std::log(r.eps[k]));
    }
  }
  r.decreasing = r.decreasing && r.eps[composed_depth] < r.eps[1];
  if (ks.size() >= 2) r.decay_rate = -fit_line(ks, ls).slope;
  return r;
}

struct H3Report {
  double C = 1.0;                ///< max distortion ratio over D_n, n <= depth
  std::vector<double> eta;       ///< eta[l]: max log distortion of the first block over elements with l blocks
  bool certified = true;
};

inline H3Report check_h3(const ReturnStructure& rs, size_t composed_depth) {
  require(composed_depth >= 1 && composed_depth <= rs.depth, "composed depth must lie in [1, depth]");
  H3Report r;
  r.eta.assign(composed_depth + 1, 0.0);
  double logC = 0.0;
  for (size_t n = 1; n <= composed_depth; ++n) {
    for (const auto& e : composed_elements(rs, n, true)) {
      const auto orbit = piece_orbit(*rs.map, e.word, e.image);
      const Bound all = orbit_logderiv(*rs.map, e.word, orbit);
      const Bound first = orbit_logderiv(*rs.map, e.word, orbit, 0, e.blocks[0]);
      logC = std::max(logC, all.hi - all.lo);
      const size_t l = e.blocks.size();
      r.eta[l] = std::max(r.eta[l], first.hi - first.lo);
      r.certified = r.certified && all.certified;
    }
  }
  r.C = std::exp(logC);
  return r;
}

struct H4Report {
  bool found = false;
  size_t l0 = 0;
  double gamma0 = 0.0;
  size_t cap = 0;
  std::vector<double> gamma_by_lag;  ///< gamma_by_lag[l] = min ratio at lag l (index 0 unused)
};

/// Scans l0 = 1..cap for a uniform gamma0 > 0 with m(U and R <= n + l0) >= gamma0 m(U)
/// over every pending component U of {R > n} with n + l0 <= depth (n = 0 gives U = J).
inline H4Report check_h4(const ReturnStructure& rs, size_t cap = 0) {
  H4Report r;
  r.cap = cap ? cap : std::min<size_t>(std::max<size_t>(rs.depth / 2, 1), 20);
  const size_t N = rs.depth;
  // within[n][i][l]: mass of U = pending[n][i] returning within l further steps.
  std::vector<std::vector<std::vector<double>>> within(N + 1);
  for (size_t n = N + 1; n-- > 0;) {
    within[n].assign(rs.pending[n].size(), std::vector<double>(r.cap + 1, 0.0));
    if (n == N) continue;
    for (size_t l = 1; l <= r.cap; ++l) {
      for (const auto& v : rs.returns[n + 1]) within[n][static_cast<size_t>(v.parent)][l] += v.domain.length();
      if (l >= 2) {
        for (size_t c = 0; c < rs.pending[n + 1].size(); ++c) {
          const auto& u = rs.pending[n + 1][c];
          within[n][static_cast<size_t>(u.parent)][l] += within[n + 1][c][l - 1];
        }
      }
    }
  }
  r.gamma_by_lag.assign(r.cap + 1, 0.0);
  for (size_t l = 1; l <= r.cap; ++l) {
    double g = std::numeric_limits<double>::infinity();
    bool any = false;
    for (size_t n = 0; n + l <= N; ++n) {
      for (size_t i = 0; i < rs.pending[n].size(); ++i) {
        const double m = rs.pending[n][i].domain.length();
        if (m <= 0.0) continue;
        g = std::min(g, within[n][i][l] / m);
        any = true;
      }
    }
    r.gamma_by_lag[l] = any ? std::min(g, 1.0) : 1.0;
    if (!r.found && r.gamma_by_lag[l] > 0.0) {
      r.found = true;
      r.l0 = l;
      r.gamma0 = r.gamma_by_lag[l];
    }
  }
  return r;
}

enum class TailClass { exponential, polynomial, inconclusive };

inline const char* to_string(TailClass c) {
  switch (c) {
    case TailClass::exponential: return "exponential";
    case TailClass::polynomial: return "polynomial";
    case TailClass::inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct TailReport {
  std::vector<double> tail;  ///< m(R > n), n = 0..depth
  TailClass classification = TailClass::inconclusive;
  double exp_rate = 0.0;       ///< -slope of log m(R>n) against n
  double poly_exponent = 0.0;  ///< slope of log m(R>n) against log n
  double exp_residual = 0.0;
  double poly_residual = 0.0;
  size_t fit_from = 0;
  bool degenerate = false;
  std::string note;
};

/// Fits log m(R > n) against n and against log n over n in [N/4, N]; the better fit wins
/// when its residual is at least twice smaller.
inline TailReport tail_classify(const ReturnStructure& rs, double ratio = 2.0) {
  if (rs.depth < 10) throw Error(ErrorCode::too_small, "tail classification needs at least 10 depths");
  TailReport r;
  r.tail.resize(rs.depth + 1);
  for (size_t n = 0; n <= rs.depth; ++n) r.tail[n] = rs.tail_mass(n);
  r.fit_from = std::max<size_t>(1, rs.depth / 4);
  std::vector<double> ns, lns, logs;
  for (size_t n = r.fit_from; n <= rs.depth; ++n) {
    if (r.tail[n] <= 0.0) continue;
    ns.push_back(static_cast<double>(n));
    lns.push_back(std::log(static_cast<double>(n)));
    logs.push_back(std::log(r.tail[n]));
  }
  if (ns.size() < 3) {
    r.degenerate = true;
    r.classification = TailClass::exponential;
    r.exp_rate = std::numeric_limits<double>::infinity();
    r.note = "tail vanishes beyond the first depths (degenerate)";
    return r;
  }
  const LinearFit e = fit_line(ns, logs);
  const LinearFit p = fit_line(lns, logs);
  r.exp_rate = -e.slope;
  r.poly_exponent = p.slope;
  r.exp_residual = e.residual;
  r.poly_residual = p.residual;
  if (p.residual * ratio <= e.residual) {
    r.classification = TailClass::polynomial;
  } else if (e.residual * ratio <= p.residual) {
    r.classification = TailClass::exponential;
  }
  return r;
}

}  // namespace birkhoff

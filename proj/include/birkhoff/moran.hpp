#pragma once

// Nested interval families built from horseshoe word families, Frostman-type mass
// distribution bounds, box counting, Moran-equation roots, and cover sums over composed
// first returns of a tower.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "count.hpp"
#include "error.hpp"
#include "horseshoe.hpp"
#include "interval_map.hpp"
#include "numeric.hpp"
#include "parallel.hpp"
#include "potential.hpp"
#include "symbolic.hpp"
#include "tower.hpp"

namespace birkhoff {

struct MoranDimension {
  double value = 0.0;  ///< min(root, 1)
  double root = 0.0;
  bool capped = false;
};

/// Root s of sum r_i^s = 1.
inline MoranDimension moran_dimension(const std::vector<double>& ratios, double tol = 1e-12) {
  require(!ratios.empty(), "ratio list must be nonempty");
  for (double r : ratios) require(r > 0.0 && r < 1.0, "ratios must lie in (0,1)");
  auto g = [&](double s) {
    KahanSum sum;
    for (double r : ratios) sum.add(std::pow(r, s));
    return sum.value() - 1.0;
  };
  double hi = 1.0;
  while (g(hi) > 0.0) hi *= 2.0;
  MoranDimension out;
  out.root = ratios.size() == 1 ? 0.0 : bisect(g, 0.0, hi, tol);
  out.capped = out.root > 1.0;
  out.value = std::min(out.root, 1.0);
  return out;
}

struct MoranNode {
  Word word;
  Interval interval;
  size_t parent = 0;  ///< index in the previous generation
};

struct MoranBlock {
  size_t cert = 0;      ///< index into the certificate list
  size_t reps = 0;      ///< q_p
  size_t k = 0;
  size_t count = 0;     ///< #K_p
  size_t spacer = 0;    ///< zeros inserted before the block's first generation
  size_t end_time = 0;  ///< n_p, word length once the block is complete
};

struct MoranFamily {
  std::vector<std::vector<MoranNode>> generations;  ///< generations[0] is the root [0,1]
  std::vector<MoranBlock> schedule;
  std::vector<Count> predicted;  ///< closed-form generation sizes

  size_t depth() const { return generations.size() - 1; }
  double weight(size_t l) const { return 1.0 / static_cast<double>(generations.at(l).size()); }
  double min_length(size_t l) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& nd : generations.at(l)) m = std::min(m, nd.interval.length());
    return m;
  }
  double max_length(size_t l) const {
    double m = 0.0;
    for (const auto& nd : generations.at(l)) m = std::max(m, nd.interval.length());
    return m;
  }
  std::vector<Interval> intervals(size_t l) const {
    std::vector<Interval> out;
    out.reserve(generations.at(l).size());
    for (const auto& nd : generations[l]) out.push_back(nd.interval);
    return out;
  }
};

struct ScheduleEntry {
  size_t cert = 0;
  size_t reps = 1;
};

struct BuildOptions {
  size_t budget = 2'000'000;  ///< nodes in the deepest generation
  unsigned threads = 1;
  size_t word_limit = 1u << 16;  ///< largest certificate family materialized
};

/// Generation l appends one word of the current block's family; a block other than the first
/// opens with a spacer of zeros whose length is the previous block's word length.
inline MoranFamily build_nested(const IntervalMap& map, const MarkovStructure& markov,
                                const std::vector<HorseshoeCertificate>& certs,
                                const std::vector<ScheduleEntry>& schedule, size_t L, const BuildOptions& opt = {}) {
  require(map.full_branch(), "nested families need a full-branch map");
  require(!certs.empty() && !schedule.empty(), "certificates and schedule must be nonempty");
  require(L >= 1, "depth must be at least 1");
  std::vector<std::vector<Word>> words(certs.size());
  for (size_t i = 0; i < certs.size(); ++i) {
    words[i] = certificate_words(certs[i], markov, opt.word_limit);
    require(!words[i].empty(), "certificate family is empty");
    for (const auto& w : words[i]) {
      if (w.size() != certs[i].k) throw Error(ErrorCode::invalid_argument, "incompatible certificates: word length differs from k");
    }
  }
  MoranFamily fam;
  size_t total = 0, prev_k = 0;
  for (size_t p = 0; p < schedule.size(); ++p) {
    const auto& e = schedule[p];
    require(e.cert < certs.size(), "schedule refers to an unknown certificate");
    require(e.reps >= 1, "repetition counts must be positive");
    MoranBlock b;
    b.cert = e.cert;
    b.reps = e.reps;
    b.k = certs[e.cert].k;
    b.count = words[e.cert].size();
    b.spacer = p == 0 ? 0 : prev_k;
    total += b.spacer + b.reps * b.k;
    b.end_time = total;
    prev_k = b.k;
    fam.schedule.push_back(b);
  }
  size_t reps_total = 0;
  for (const auto& b : fam.schedule) reps_total += b.reps;
  require(reps_total >= L, "schedule covers fewer generations than the requested depth");

  // Closed-form sizes: full blocks contribute #K^q, the current block #K^s.
  fam.predicted.assign(L + 1, Count(1));
  for (size_t l = 1; l <= L; ++l) {
    Count c(1);
    size_t left = l;
    for (const auto& b : fam.schedule) {
      const size_t used = std::min(left, b.reps);
      c *= pow(Count(b.count), static_cast<unsigned>(used));
      left -= used;
      if (left == 0) break;
    }
    fam.predicted[l] = c;
  }
  if (fam.predicted[L].is_saturated() || fam.predicted[L].raw() > opt.budget) {
    throw Error(ErrorCode::budget_exceeded, "generation " + std::to_string(L) + " holds " + fam.predicted[L].to_string() +
                                                " intervals, above the budget of " + std::to_string(opt.budget));
  }

  fam.generations.push_back({MoranNode{{}, {0.0, 1.0}, 0}});
  size_t p = 0, in_block = 0;
  for (size_t l = 1; l <= L; ++l) {
    if (in_block == fam.schedule[p].reps) {
      ++p;
      in_block = 0;
    }
    const MoranBlock& b = fam.schedule[p];
    const Word spacer(in_block == 0 ? b.spacer : 0, 0);
    ++in_block;
    const auto& fam_words = words[b.cert];
    const auto& parents = fam.generations.back();
    std::vector<MoranNode> next(parents.size() * fam_words.size());
    parallel_for(parents.size(), opt.threads, [&](size_t i) {
      for (size_t j = 0; j < fam_words.size(); ++j) {
        MoranNode nd;
        nd.word = parents[i].word;
        nd.word.insert(nd.word.end(), spacer.begin(), spacer.end());
        nd.word.insert(nd.word.end(), fam_words[j].begin(), fam_words[j].end());
        nd.interval = pullback(map, nd.word, {0.0, 1.0});
        nd.parent = i;
        next[i * fam_words.size() + j] = std::move(nd);
      }
    });
    fam.generations.push_back(std::move(next));
  }
  return fam;
}

/// Two certificates with a common word length, alternating block by block with repetition
/// counts q_seq[p].
inline MoranFamily build_alternating(const IntervalMap& map, const MarkovStructure& markov,
                                     const HorseshoeCertificate& c1, const HorseshoeCertificate& c2,
                                     const std::vector<size_t>& q_seq, size_t L, const BuildOptions& opt = {}) {
  if (c1.k != c2.k) throw Error(ErrorCode::invalid_argument, "incompatible certificates: alternation needs a shared k");
  std::vector<ScheduleEntry> schedule;
  for (size_t p = 0; p < q_seq.size(); ++p) schedule.push_back({p % 2, q_seq[p]});
  return build_nested(map, markov, {c1, c2}, schedule, L, opt);
}

/// S_n(phi)/n on the cylinder of `word` when phi is constant on every branch domain.
inline double symbolic_average(const IntervalMap& map, const Potential& phi, const Word& word, size_t n) {
  require(n >= 1 && n <= word.size(), "average length must lie in [1, word length]");
  std::vector<double> cell(map.size());
  for (size_t a = 0; a < map.size(); ++a) {
    const auto v = phi.constant_on(map.branch(a).domain());
    require(v.has_value(), "potential must be constant on each branch domain");
    cell[a] = *v;
  }
  KahanSum s;
  for (size_t i = 0; i < n; ++i) s.add(cell[static_cast<size_t>(word[i])]);
  return s.value() / static_cast<double>(n);
}

struct MassOptions {
  size_t samples = 64;
  uint64_t seed = 0;
  std::vector<double> radii;  ///< empty: the per-generation minimum lengths
};

struct RadiusRow {
  double r = 0.0;
  size_t generation = 0;      ///< generation used to bound the mass of balls of radius r
  double min_ratio = 0.0;     ///< min over samples of log mu+ / log r
  double max_count = 0.0;     ///< largest number of generation intervals met
};

struct MassDistributionReport {
  double bound = 0.0;             ///< min over samples of the slope at the two smallest radii
  std::vector<RadiusRow> radii;   ///< reliable radii, increasing
  size_t excluded = 0;            ///< radii below the deepest resolution
  std::vector<double> analytic;   ///< analytic[l] = (log #Q(l) - log 3) / (-log minlen(l+1)), l = 1..L-1
  std::string note;
};

namespace detail {

/// Number of intervals of a sorted disjoint-interior family with positive overlap with [a, b].
inline size_t count_hits(const std::vector<Interval>& sorted, double a, double b) {
  auto first = std::partition_point(sorted.begin(), sorted.end(), [&](const Interval& iv) { return iv.hi <= a; });
  auto last = std::partition_point(first, sorted.end(), [&](const Interval& iv) { return iv.lo < b; });
  return static_cast<size_t>(last - first);
}

}  // namespace detail

/// Upper mass of [x - r, x + r] from the generation whose shortest interval is at least r:
/// such a ball meets at most three of its intervals, each of weight 1/#Q(l).
inline MassDistributionReport mass_distribution_bound(const MoranFamily& fam, const MassOptions& opt = {}) {
  const size_t L = fam.depth();
  require(L >= 3, "mass distribution bound needs at least 3 generations");
  require(opt.samples >= 1, "need at least one sample point");
  for (size_t l = 1; l <= L; ++l) {
    for (const auto& nd : fam.generations[l]) {
      require(nd.parent < fam.generations[l - 1].size(), "inconsistent family: dangling parent");
    }
  }
  MassDistributionReport rep;
  std::vector<double> minlen(L + 1);
  std::vector<std::vector<Interval>> sorted(L + 1);
  for (size_t l = 0; l <= L; ++l) {
    minlen[l] = fam.min_length(l);
    sorted[l] = fam.intervals(l);
    std::sort(sorted[l].begin(), sorted[l].end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  }
  for (size_t l = 1; l < L; ++l) {
    const double num = std::log(static_cast<double>(fam.generations[l].size())) - std::log(3.0);
    rep.analytic.push_back(num / -std::log(minlen[l + 1]));
  }

  std::vector<double> radii = opt.radii;
  if (radii.empty()) {
    for (size_t l = 1; l <= L; ++l) radii.push_back(minlen[l]);
  }
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end(), [](double a, double b) { return std::abs(a - b) <= 1e-15 * b; }), radii.end());
  const double resolution = minlen[L] * (1.0 - 1e-12);
  std::vector<std::pair<double, size_t>> usable;
  for (double r : radii) {
    require(r > 0.0, "radii must be positive");
    if (r < resolution) {
      ++rep.excluded;
      continue;
    }
    size_t g = 0;
    for (size_t l = 1; l <= L; ++l) {
      if (minlen[l] >= r * (1.0 - 1e-12)) g = l;
    }
    usable.push_back({r, g});
  }
  if (rep.excluded) rep.note = std::to_string(rep.excluded) + " radii below the deepest resolution excluded";
  require(usable.size() >= 2, "need at least two radii at or above the deepest resolution");

  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<size_t> pick(0, fam.generations[L].size() - 1);
  std::vector<double> xs(opt.samples);
  for (auto& x : xs) x = fam.generations[L][pick(rng)].interval.mid();

  auto log_mass = [&](double x, double r, size_t g, size_t* hits) {
    const size_t h = detail::count_hits(sorted[g], x - r, x + r);
    if (hits) *hits = h;
    return std::log(static_cast<double>(h)) - std::log(static_cast<double>(fam.generations[g].size()));
  };

  for (const auto& [r, g] : usable) {
    RadiusRow row{r, g, std::numeric_limits<double>::infinity(), 0.0};
    for (double x : xs) {
      size_t h = 0;
      const double lm = log_mass(x, r, g, &h);
      row.max_count = std::max(row.max_count, static_cast<double>(h));
      row.min_ratio = std::min(row.min_ratio, r < 1.0 ? lm / std::log(r) : 0.0);
    }
    rep.radii.push_back(row);
  }
  const auto [ra, ga] = usable[0];
  const auto [rb, gb] = usable[1];
  rep.bound = std::numeric_limits<double>::infinity();
  for (double x : xs) {
    const double slope = (log_mass(x, ra, ga, nullptr) - log_mass(x, rb, gb, nullptr)) / (std::log(ra) - std::log(rb));
    rep.bound = std::min(rep.bound, slope);
  }
  return rep;
}

struct BoxDimensionReport {
  double value = 0.0;
  double residual = 0.0;
  std::vector<double> scales;
  std::vector<double> counts;
};

namespace detail {

inline BoxDimensionReport box_fit(const std::vector<Interval>& items, std::vector<double> scales) {
  BoxDimensionReport rep;
  require(scales.size() >= 4, "box counting needs at least 4 scales");
  std::sort(scales.begin(), scales.end());
  require(scales.front() > 0.0 && scales.back() / scales.front() >= 100.0 * (1.0 - 1e-12),
          "box counting scales must span at least two decades");
  std::vector<Interval> sorted = items;
  std::sort(sorted.begin(), sorted.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<double> xs, ys;
  for (double r : scales) {
    // Union of box-index ranges [floor(lo/r), ceil(hi/r) - 1].
    long long covered = 0, cur_lo = 0, cur_hi = -1;
    bool open = false;
    for (const auto& iv : sorted) {
      const long long a = static_cast<long long>(std::floor(iv.lo / r));
      const long long b = std::max(a, static_cast<long long>(std::ceil(iv.hi / r)) - 1);
      if (open && a <= cur_hi) {
        cur_hi = std::max(cur_hi, b);
      } else {
        if (open) covered += cur_hi - cur_lo + 1;
        cur_lo = a;
        cur_hi = b;
        open = true;
      }
    }
    if (open) covered += cur_hi - cur_lo + 1;
    rep.scales.push_back(r);
    rep.counts.push_back(static_cast<double>(covered));
    xs.push_back(-std::log(r));
    ys.push_back(std::log(static_cast<double>(covered)));
  }
  const LinearFit fit = fit_line(xs, ys);
  rep.value = std::max(0.0, fit.slope);
  rep.residual = fit.residual;
  return rep;
}

inline std::vector<double> geometric_scales(double hi, double lo, size_t n = 12) {
  std::vector<double> s(n);
  for (size_t i = 0; i < n; ++i) s[i] = hi * std::pow(lo / hi, static_cast<double>(i) / static_cast<double>(n - 1));
  return s;
}

}  // namespace detail

/// Least-squares slope of log N(r) against log(1/r); boxes are counted when they meet an
/// interval with positive overlap. Default scales run from 0.1 down to max(10 * longest
/// interval, 1/(4 * count)).
inline BoxDimensionReport box_dimension(const std::vector<Interval>& intervals, std::vector<double> scales = {}) {
  require(!intervals.empty(), "box counting needs a nonempty set");
  double lo = intervals[0].lo, hi = intervals[0].hi, maxlen = 0.0;
  for (const auto& iv : intervals) {
    lo = std::min(lo, iv.lo);
    hi = std::max(hi, iv.hi);
    maxlen = std::max(maxlen, iv.length());
  }
  if (hi - lo <= 0.0) return {};
  if (scales.empty()) {
    const double rmin = std::max(10.0 * maxlen, 0.25 / static_cast<double>(intervals.size()));
    scales = detail::geometric_scales(0.1, rmin);
  }
  return detail::box_fit(intervals, std::move(scales));
}

/// Point-set version; default scales run from 0.1 down to 10 / #points.
inline BoxDimensionReport box_dimension_points(const std::vector<double>& points, std::vector<double> scales = {}) {
  require(!points.empty(), "box counting needs a nonempty set");
  const auto [mn, mx] = std::minmax_element(points.begin(), points.end());
  if (*mx - *mn <= 0.0) return {};
  if (scales.empty()) scales = detail::geometric_scales(0.1, 10.0 / static_cast<double>(points.size()));
  std::vector<Interval> items;
  items.reserve(points.size());
  for (double x : points) items.push_back({x, x});
  return detail::box_fit(items, std::move(scales));
}

struct CoverDepth {
  size_t n = 0;
  double sum_all = 0.0;            ///< sum over A_n of |A|^delta0
  double sum_filtered = 0.0;       ///< sum over B_n (Birkhoff window) of |A|^delta0
  std::vector<double> sum_star;    ///< sum over B*_{n,s} of |B|^delta0, s = 0..l0-1
  long selected_s = -1;            ///< smallest s meeting the refinement inequality, -1 if none
};

struct HausdorffCoverReport {
  double delta0 = 0.0;
  double alpha = 0.0;
  double eps = 0.0;
  double C = 1.0;
  double gamma0 = 1.0;
  size_t l0 = 1;
  double base_length = 0.0;
  double ceiling = 0.0;  ///< l0 (C^2 gamma0^{-1} |J|)^delta0
  std::vector<CoverDepth> depths;
  std::string trend;      ///< "bounded" or "growing"
  std::string monotone;   ///< "decreasing", "increasing" or "non-monotone" over the last 8 depths
  double log_slope = 0.0; ///< fitted slope of log sum_filtered over the last 8 depths
  bool certified = true;
};

struct CoverOptions {
  size_t composed_depth = 10;  ///< depth of the distortion check
  double tol = 1e-9;
  size_t window = 8;           ///< trailing depths for the monotonicity verdict
};

/// Cover sums over composed returns for the level set {S_n phi / n -> alpha}. A_n consists of
/// full returns followed by a tail piece (a return or a pending piece); B_n keeps the elements
/// meeting the window |S_n phi / n - alpha| < eps/2 (eps = infinity disables the filter);
/// B*_{n,s} holds the exact composed returns of time n + s inside members of B_n.
inline HausdorffCoverReport hausdorff_cover_report(const ReturnStructure& rs, const Potential& phi, double alpha, double eps,
                                                   double delta0, const std::vector<size_t>& depths,
                                                   const CoverOptions& opt = {}) {
  require(delta0 >= 0.0 && delta0 <= 1.0, "delta0 must lie in [0,1]");
  require(eps > 0.0, "eps must be positive");
  require(!depths.empty(), "need at least one depth");
  const IntervalMap& map = *rs.map;
  require(map.is_affine(), "cover sums need an affine map");
  const H1Report h1 = check_h1(rs);
  const H4Report h4 = check_h4(rs);
  if (!h1.holds || !h4.found) throw Error(ErrorCode::inconclusive, "tower hypotheses not verified at the computed depth");
  const H3Report h3 = check_h3(rs, std::min(opt.composed_depth, rs.depth));

  HausdorffCoverReport rep;
  rep.delta0 = delta0;
  rep.alpha = alpha;
  rep.eps = eps;
  rep.C = h3.C;
  rep.gamma0 = h4.gamma0;
  rep.l0 = h4.l0;
  rep.base_length = rs.base.length();
  rep.ceiling = static_cast<double>(rep.l0) * std::pow(rep.C * rep.C / rep.gamma0 * rep.base_length, delta0);
  rep.certified = h3.certified;

  const size_t maxn = *std::max_element(depths.begin(), depths.end());
  const size_t l0 = rep.l0;
  require(*std::min_element(depths.begin(), depths.end()) >= 1, "depths must be positive");
  if (maxn + l0 - 1 > rs.depth) {
    throw Error(ErrorCode::inconclusive, "tower depth " + std::to_string(rs.depth) + " is below the required " + std::to_string(maxn + l0 - 1));
  }
  const double Jlen = rep.base_length;

  struct PieceData {
    double len;
    Bound S;
    double ld;
    bool full;
    size_t level, index;
  };
  auto piece_data = [&](const TowerPiece& p, bool full, size_t level, size_t index) {
    const auto orbit = piece_orbit(map, p.word, p.image);
    Bound S{0.0, 0.0, true};
    for (const auto& iv : orbit) S += phi.range_on(iv);
    return PieceData{p.domain.length(), S, p.logderiv.lo, full, level, index};
  };
  const size_t top = maxn + l0 - 1;
  std::vector<std::vector<PieceData>> ret(top + 1), tails(top + 1);
  for (size_t j = 1; j <= top; ++j) {
    for (size_t i = 0; i < rs.returns[j].size(); ++i) {
      ret[j].push_back(piece_data(rs.returns[j][i], true, j, i));
      tails[j].push_back(ret[j].back());
    }
    for (size_t i = 0; i < rs.pending[j].size(); ++i) tails[j].push_back(piece_data(rs.pending[j][i], false, j, i));
  }

  // Exact composed returns, aggregated by (S range, log-derivative).
  struct DClass {
    double count;
    Bound S;
    double ld;
  };
  using Key = std::tuple<long long, long long, long long>;
  auto key_of = [](const Bound& S, double ld) {
    return Key{std::llround(S.lo * 1e9), std::llround(S.hi * 1e9), std::llround(ld * 1e9)};
  };
  std::vector<std::vector<DClass>> D(top + 1);
  D[0].push_back({1.0, {0.0, 0.0, true}, 0.0});
  for (size_t m = 1; m <= top; ++m) {
    std::map<Key, DClass> acc;
    for (size_t r = 1; r <= m; ++r) {
      for (const auto& d : D[m - r]) {
        for (const auto& v : ret[r]) {
          const Bound S = d.S + v.S;
          const double ld = d.ld + v.ld;
          auto [it, fresh] = acc.try_emplace(key_of(S, ld), DClass{0.0, S, ld});
          it->second.count += d.count;
        }
      }
    }
    for (auto& [k, c] : acc) D[m].push_back(c);
  }
  std::vector<double> Z(l0, 0.0);
  for (size_t s = 0; s < l0; ++s) {
    KahanSum z;
    for (const auto& d : D[s]) z.add(d.count * std::exp(-delta0 * d.ld));
    Z[s] = std::pow(Jlen, delta0) * z.value();
  }

  // Ancestor of a return component at a given pending level.
  auto ancestor = [&](size_t level, size_t index, size_t at) -> long {
    long idx = rs.returns[level][index].parent;
    for (size_t lv = level - 1; lv > at; --lv) idx = rs.pending[lv][static_cast<size_t>(idx)].parent;
    return idx;
  };
  // G[j][t][s]: sum of |B''|^delta0 over exact returns of time j + s inside tail piece t.
  std::vector<std::vector<std::vector<double>>> G(top + 1);
  for (size_t j = 1; j <= maxn; ++j) {
    G[j].assign(tails[j].size(), std::vector<double>(l0, 0.0));
    for (size_t t = 0; t < tails[j].size(); ++t) {
      const auto& T = tails[j][t];
      for (size_t s = 0; s < l0; ++s) {
        if (T.full) {
          G[j][t][s] = std::pow(T.len / Jlen, delta0) * Z[s];
          continue;
        }
        KahanSum g;
        for (size_t r = j + 1; r <= j + s; ++r) {
          for (const auto& v : ret[r]) {
            if (ancestor(r, v.index, j) != static_cast<long>(T.index)) continue;
            g.add(std::pow(v.len / Jlen, delta0) * Z[j + s - r]);
          }
        }
        G[j][t][s] = g.value();
      }
    }
  }

  const bool filtered = std::isfinite(eps);
  const double half = 0.5 * eps;
  for (size_t n : depths) {
    CoverDepth row;
    row.n = n;
    row.sum_star.assign(l0, 0.0);
    KahanSum all, kept;
    std::vector<KahanSum> star(l0);
    const double dn = static_cast<double>(n);
    for (size_t j = 1; j <= n; ++j) {
      for (const auto& d : D[n - j]) {
        const double w = d.count * std::exp(-delta0 * d.ld);
        for (size_t t = 0; t < tails[j].size(); ++t) {
          const auto& T = tails[j][t];
          const double a = w * std::pow(T.len, delta0);
          all.add(a);
          const Bound S = d.S + T.S;
          const bool inside = !filtered || (S.lo / dn < alpha + half - 1e-12 && S.hi / dn > alpha - half + 1e-12);
          if (!inside) continue;
          kept.add(a);
          for (size_t s = 0; s < l0; ++s) star[s].add(w * G[j][t][s]);
        }
      }
    }
    row.sum_all = all.value();
    row.sum_filtered = kept.value();
    const double need = std::pow(rep.C, -delta0) * std::pow(rep.gamma0, delta0) * row.sum_filtered / static_cast<double>(l0);
    for (size_t s = 0; s < l0; ++s) {
      row.sum_star[s] = star[s].value();
      if (row.selected_s < 0 && row.sum_star[s] >= need * (1.0 - opt.tol)) row.selected_s = static_cast<long>(s);
    }
    rep.depths.push_back(std::move(row));
  }

  double sup = 0.0;
  for (const auto& r : rep.depths) sup = std::max(sup, r.sum_filtered);
  rep.trend = sup <= rep.ceiling * (1.0 + opt.tol) ? "bounded" : "growing";

  const size_t w = std::min(opt.window, rep.depths.size());
  const size_t from = rep.depths.size() - w;
  bool inc = w >= 2, dec = w >= 2;
  std::vector<double> xs, ys;
  for (size_t i = from; i < rep.depths.size(); ++i) {
    if (i > from) {
      inc = inc && rep.depths[i].sum_filtered > rep.depths[i - 1].sum_filtered;
      dec = dec && rep.depths[i].sum_filtered < rep.depths[i - 1].sum_filtered;
    }
    if (rep.depths[i].sum_filtered > 0.0) {
      xs.push_back(static_cast<double>(rep.depths[i].n));
      ys.push_back(std::log(rep.depths[i].sum_filtered));
    }
  }
  rep.monotone = inc ? "increasing" : dec ? "decreasing" : "non-monotone";
  if (xs.size() >= 2) rep.log_slope = fit_line(xs, ys).slope;
  return rep;
}

}  // namespace birkhoff

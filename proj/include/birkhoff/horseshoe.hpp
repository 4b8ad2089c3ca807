#pragma once

// Horseshoes approximating an equilibrium state, their block concatenation, and the
// entropy/Jacobian bound for finite Markov systems.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "count.hpp"
#include "error.hpp"
#include "interval_map.hpp"
#include "numeric.hpp"
#include "potential.hpp"
#include "symbolic.hpp"
#include "thermo.hpp"

namespace birkhoff {

struct HorseshoeCertificate {
  size_t k = 0;
  Interval base;
  double eps = 0.0;
  Count count;
  double entropy_bound = 0.0;  ///< log(count) / k
  Interval logderiv_window;    ///< range of log|(f^k)'| / k over the family
  std::vector<Interval> phi_windows;
  double target_entropy = 0.0;
  double target_lyapunov = 0.0;
  std::vector<double> target_means;
  bool certified = true;
  bool combinatorial = false;  ///< counted by symbol-count classes rather than by streaming
  std::vector<CylinderClass> classes;  ///< kept classes (combinatorial mode)
  std::vector<Word> words;             ///< kept words (streaming mode)
};

struct ExtractOptions {
  Count budget = Count(10'000'000);
  unsigned threads = 1;
  double window_slack = 1e-9;  ///< closed windows, widened for rounding at exact boundaries
  size_t predict_cap = 400;    ///< largest k scanned when predicting a successful depth
};

namespace detail {

/// Base interval: all of [0,1] for full-branch maps, else the first partition element
/// contained in every branch image (or element 0).
inline Interval horseshoe_base(const IntervalMap& map, const MarkovStructure& markov) {
  if (map.full_branch()) return {0.0, 1.0};
  for (size_t a = 0; a < markov.size(); ++a) {
    bool everywhere = true;
    for (size_t b = 0; b < markov.size(); ++b) everywhere = everywhere && markov.allowed(static_cast<int>(b), static_cast<int>(a));
    if (everywhere) return markov.partition()[a];
  }
  return markov.partition()[0];
}

struct Windows {
  double lo_l, hi_l;
  std::vector<double> lo_p, hi_p;
};

inline Windows target_windows(const EquilibriumStats& target, double eps, double slack) {
  Windows w{target.lyapunov - eps - slack, target.lyapunov + eps + slack, {}, {}};
  for (double m : target.phi_mean) {
    w.lo_p.push_back(m - eps - slack);
    w.hi_p.push_back(m + eps + slack);
  }
  return w;
}

inline Count combinatorial_count(const ThermoSystem& sys, const EquilibriumStats& target, double eps, size_t k,
                                 const ExtractOptions& opt, HorseshoeCertificate* cert) {
  const auto& map = sys.map();
  const auto& markov = sys.markov();
  const Interval base = horseshoe_base(map, markov);
  const Windows w = target_windows(target, eps, opt.window_slack);
  const double dk = static_cast<double>(k);
  Count total(0);
  for (auto& cl : aggregate_classes(map, markov, k, sys.potentials())) {
    if (!map.branch(static_cast<size_t>(cl.last)).image().contains(base, 1e-12)) continue;
    const double ld = cl.logderiv / dk;
    bool keep = ld >= w.lo_l && ld <= w.hi_l;
    for (size_t j = 0; j < cl.sums.size() && keep; ++j) {
      const double a = cl.sums[j] / dk;
      keep = a >= w.lo_p[j] && a <= w.hi_p[j];
    }
    if (!keep) continue;
    total += cl.multiplicity;
    if (cert) {
      cert->logderiv_window.lo = std::min(cert->logderiv_window.lo, ld);
      cert->logderiv_window.hi = std::max(cert->logderiv_window.hi, ld);
      for (size_t j = 0; j < cl.sums.size(); ++j) {
        cert->phi_windows[j].lo = std::min(cert->phi_windows[j].lo, cl.sums[j] / dk);
        cert->phi_windows[j].hi = std::max(cert->phi_windows[j].hi, cl.sums[j] / dk);
      }
      cert->classes.push_back(std::move(cl));
    }
  }
  return total;
}

}  // namespace detail

/// Filters depth-k cylinders to those whose expansion and Birkhoff averages lie within eps
/// of the target's, and whose k-th image covers the base.
inline HorseshoeCertificate extract(const ThermoSystem& sys, const EquilibriumStats& target, double eps, size_t k,
                                    const ExtractOptions& opt = {}) {
  require(eps > 0.0, "eps must be positive");
  require(k >= 1, "k must be at least 1");
  require(target.phi_mean.size() == sys.dimension(), "target must carry one mean per registered potential");
  const auto& map = sys.map();
  const auto& markov = sys.markov();
  const double inf = std::numeric_limits<double>::infinity();

  HorseshoeCertificate cert;
  cert.k = k;
  cert.eps = eps;
  cert.base = detail::horseshoe_base(map, markov);
  cert.target_entropy = target.entropy;
  cert.target_lyapunov = target.lyapunov;
  cert.target_means = target.phi_mean;
  cert.logderiv_window = {inf, -inf};
  cert.phi_windows.assign(sys.dimension(), Interval{inf, -inf});

  const bool combinatorial = supports_class_aggregation(map, markov, sys.potentials());
  cert.combinatorial = combinatorial;
  const double dk = static_cast<double>(k);
  if (combinatorial) {
    cert.count = detail::combinatorial_count(sys, target, eps, k, opt, &cert);
  } else {
    const detail::Windows w = detail::target_windows(target, eps, opt.window_slack);
    struct Keep {
      const detail::Windows* w;
      const IntervalMap* map;
      Interval base;
      double dk;
      std::vector<Word> words;
      Interval ld{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
      std::vector<Interval> phi;
      bool certified = true;
      void operator()(const Cylinder& c, const CylinderStats& s) {
        if (!map->branch(static_cast<size_t>(c.word.back())).image().contains(base, 1e-12)) return;
        if (s.logderiv.lo / dk < w->lo_l || s.logderiv.hi / dk > w->hi_l) return;
        for (size_t j = 0; j < s.sums.size(); ++j) {
          if (s.sums[j].lo / dk < w->lo_p[j] || s.sums[j].hi / dk > w->hi_p[j]) return;
        }
        words.push_back(c.word);
        ld.lo = std::min(ld.lo, s.logderiv.lo / dk);
        ld.hi = std::max(ld.hi, s.logderiv.hi / dk);
        phi.resize(s.sums.size(), Interval{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
        for (size_t j = 0; j < s.sums.size(); ++j) {
          phi[j].lo = std::min(phi[j].lo, s.sums[j].lo / dk);
          phi[j].hi = std::max(phi[j].hi, s.sums[j].hi / dk);
        }
        certified = certified && s.certified;
      }
    };
    auto shards = enumerate_cylinders_sharded(
        map, markov, k, sys.potentials(), [&](size_t) { return Keep{&w, &map, cert.base, dk, {}, {inf, -inf}, {}, true}; },
        EnumOptions{opt.budget, opt.threads});
    for (auto& s : shards) {
      cert.certified = cert.certified && s.certified;
      for (auto& word : s.words) cert.words.push_back(std::move(word));
      cert.logderiv_window.lo = std::min(cert.logderiv_window.lo, s.ld.lo);
      cert.logderiv_window.hi = std::max(cert.logderiv_window.hi, s.ld.hi);
      for (size_t j = 0; j < s.phi.size(); ++j) {
        cert.phi_windows[j].lo = std::min(cert.phi_windows[j].lo, s.phi[j].lo);
        cert.phi_windows[j].hi = std::max(cert.phi_windows[j].hi, s.phi[j].hi);
      }
    }
    cert.count = Count(cert.words.size());
  }
  cert.entropy_bound = cert.count.raw() == 0 ? -inf : cert.count.log() / dk;

  const double needed = dk * (target.entropy - eps);
  if (cert.count.raw() == 0 || cert.count.log() < needed) {
    std::string msg = "insufficient cylinders at k=" + std::to_string(k) + ": found " + cert.count.to_string() +
                      ", need >= exp(" + std::to_string(needed) + ")";
    if (cert.count.raw() == 0) msg += " (window empty)";
    if (combinatorial) {
      for (size_t kk = k + 1; kk <= opt.predict_cap; ++kk) {
        const Count c = detail::combinatorial_count(sys, target, eps, kk, opt, nullptr);
        if (c.raw() > 0 && c.log() >= static_cast<double>(kk) * (target.entropy - eps)) {
          msg += "; smallest succeeding k is " + std::to_string(kk);
          break;
        }
        if (kk == opt.predict_cap) msg += "; no k <= " + std::to_string(opt.predict_cap) + " succeeds";
      }
    }
    throw Error(ErrorCode::insufficient_cylinders, msg);
  }
  return cert;
}

/// Words of a certificate's family, materialized up to `limit` entries.
inline std::vector<Word> certificate_words(const HorseshoeCertificate& cert, const MarkovStructure& markov,
                                           size_t limit = 1u << 20) {
  if (!cert.combinatorial) return cert.words;
  require(cert.count.raw() <= limit, "certificate family too large to materialize");
  std::set<std::pair<int, std::vector<int>>> keep;
  for (const auto& cl : cert.classes) keep.insert({cl.last, cl.counts});
  const size_t K = markov.size();
  // Per-symbol count ceilings over kept classes prune the search.
  std::vector<int> ceiling(K, 0);
  for (const auto& cl : cert.classes) {
    for (size_t i = 0; i < K; ++i) ceiling[i] = std::max(ceiling[i], cl.counts[i]);
  }
  std::vector<Word> out;
  Word w;
  std::vector<int> counts(K, 0);
  auto dfs = [&](auto&& self) -> void {
    if (w.size() == cert.k) {
      if (keep.count({w.back(), counts})) out.push_back(w);
      return;
    }
    for (size_t a = 0; a < K; ++a) {
      if (!w.empty() && !markov.allowed(w.back(), static_cast<int>(a))) continue;
      if (counts[a] + 1 > ceiling[a]) continue;
      w.push_back(static_cast<int>(a));
      ++counts[a];
      self(self);
      --counts[a];
      w.pop_back();
    }
  };
  dfs(dfs);
  return out;
}

/// Certificate for an explicit family of admissible words of a common length. Targets are
/// left at zero and the windows are the observed ranges over the family.
inline HorseshoeCertificate certificate_from_words(const IntervalMap& map, const MarkovStructure& markov,
                                                   const std::vector<Potential>& pots, std::vector<Word> words) {
  require(!words.empty(), "word family must be nonempty");
  const size_t k = words.front().size();
  require(k >= 1, "words must be nonempty");
  std::sort(words.begin(), words.end());
  require(std::adjacent_find(words.begin(), words.end()) == words.end(), "words must be distinct");
  const double inf = std::numeric_limits<double>::infinity();
  HorseshoeCertificate cert;
  cert.k = k;
  cert.base = detail::horseshoe_base(map, markov);
  cert.logderiv_window = {inf, -inf};
  cert.phi_windows.assign(pots.size(), Interval{inf, -inf});
  const double dk = static_cast<double>(k);
  for (const auto& w : words) {
    require(w.size() == k, "words must share a common length");
    for (size_t i = 0; i < k; ++i) {
      require(w[i] >= 0 && static_cast<size_t>(w[i]) < markov.size(), "symbol out of range");
      if (i > 0) require(markov.allowed(w[i - 1], w[i]), "word is not admissible");
    }
    const auto st = cylinder_stats(map, cylinder_of(map, w), pots);
    cert.logderiv_window.lo = std::min(cert.logderiv_window.lo, st.logderiv.lo / dk);
    cert.logderiv_window.hi = std::max(cert.logderiv_window.hi, st.logderiv.hi / dk);
    for (size_t j = 0; j < pots.size(); ++j) {
      cert.phi_windows[j].lo = std::min(cert.phi_windows[j].lo, st.sums[j].lo / dk);
      cert.phi_windows[j].hi = std::max(cert.phi_windows[j].hi, st.sums[j].hi / dk);
    }
    cert.certified = cert.certified && st.certified;
  }
  cert.count = Count(static_cast<unsigned long long>(words.size()));
  cert.entropy_bound = cert.count.log() / dk;
  cert.words = std::move(words);
  return cert;
}

struct PlanBlock {
  HorseshoeCertificate cert;
  int weight = 1;  ///< l_i; the measure weight is l_i / l
};

struct CombinationPlan {
  std::vector<PlanBlock> blocks;
  size_t n = 1;
  double eps = 0.1;
};

struct CombinedCertificate {
  size_t n = 0, q = 0, l = 0, k = 0;
  size_t period = 0;  ///< (n l + q) k
  double log_count = 0.0;
  double entropy_lower = 0.0;
  double entropy_target = 0.0;
  bool entropy_ok = false;
  Interval lyapunov_window;
  double lyapunov_target = 0.0;
  bool lyapunov_ok = false;
  std::vector<Interval> phi_windows;
  std::vector<double> phi_targets;
  bool phi_ok = false;
  size_t min_n = 0;
  bool ok() const { return entropy_ok && lyapunov_ok && phi_ok; }
};

/// Concatenates n l_i words of each block followed by one spacer of length k (the constant
/// word 0^k, which maps onto [0,1] for full-branch maps) and bounds the entropy, expansion
/// and Birkhoff averages of the resulting family.
inline CombinedCertificate combine(const CombinationPlan& plan, const IntervalMap& map,
                                   const std::vector<Potential>& pots) {
  require(!plan.blocks.empty(), "plan needs at least one block");
  require(plan.eps > 0.0, "eps must be positive");
  require(map.full_branch(), "spacer blocks need a full-branch map");
  const size_t k = plan.blocks[0].cert.k;
  size_t l = 0;
  for (const auto& b : plan.blocks) {
    require(b.cert.k == k, "all certificates must share k");
    require(b.weight >= 1, "block weights must be positive integers");
    require(b.cert.phi_windows.size() == pots.size(), "certificate windows must match the potentials");
    l += static_cast<size_t>(b.weight);
  }
  const size_t q = plan.blocks.size();
  const double eps = plan.eps;
  const double max_log = map.max_log_derivative();
  const double min_log = map.min_log_derivative();

  CombinedCertificate out;
  out.n = plan.n;
  out.q = q;
  out.l = l;
  out.k = k;
  // q k max log|f'| <= (eps/4) n l k
  out.min_n = static_cast<size_t>(std::ceil(4.0 * static_cast<double>(q) * std::abs(max_log) / (eps * static_cast<double>(l)) - 1e-12));
  out.min_n = std::max<size_t>(out.min_n, 1);
  if (plan.n < out.min_n) {
    throw Error(ErrorCode::too_small, "n too small: slack condition needs n >= " + std::to_string(out.min_n));
  }
  const double n = static_cast<double>(plan.n);
  const double dk = static_cast<double>(k);
  const double dl = static_cast<double>(l);
  out.period = (plan.n * l + q) * k;
  const double period = static_cast<double>(out.period);

  // Entropy chain: log #Q = sum_i n l_i log #K_i.
  double log_count = 0.0;
  for (const auto& b : plan.blocks) log_count += n * b.weight * b.cert.count.log();
  out.log_count = log_count;
  out.entropy_lower = log_count / period;
  for (const auto& b : plan.blocks) out.entropy_target += b.weight / dl * b.cert.target_entropy;
  out.entropy_ok = out.entropy_lower >= out.entropy_target - eps;

  // Expansion chain: block windows plus one spacer of k steps per block.
  double lhi = q * dk * max_log, llo = q * dk * min_log;
  for (const auto& b : plan.blocks) {
    lhi += n * b.weight * dk * b.cert.logderiv_window.hi;
    llo += n * b.weight * dk * b.cert.logderiv_window.lo;
    out.lyapunov_target += b.weight / dl * b.cert.target_lyapunov;
  }
  out.lyapunov_window = {llo / period, lhi / period};
  out.lyapunov_ok = out.lyapunov_window.hi <= out.lyapunov_target + eps;

  // Birkhoff chain per potential.
  out.phi_ok = true;
  for (size_t j = 0; j < pots.size(); ++j) {
    const Bound range = pots[j].range_on({0.0, 1.0});
    double lo = q * dk * range.lo, hi = q * dk * range.hi, target = 0.0;
    for (const auto& b : plan.blocks) {
      lo += n * b.weight * dk * b.cert.phi_windows[j].lo;
      hi += n * b.weight * dk * b.cert.phi_windows[j].hi;
      target += b.weight / dl * b.cert.target_means[j];
    }
    out.phi_windows.push_back({lo / period, hi / period});
    out.phi_targets.push_back(target);
    out.phi_ok = out.phi_ok && std::abs(lo / period - target) <= eps && std::abs(hi / period - target) <= eps;
  }
  return out;
}

struct FiniteMarkovSystem {
  double total_measure = 1.0;  ///< m(Y)
  struct Piece {
    double measure = 0.0;       ///< m(Y_j)
    double mean_log_jac = 0.0;  ///< average log-Jacobian on Y_j
  };
  std::vector<Piece> pieces;
  double distortion = 1.0;  ///< C

  /// Throws unless the pieces fit in Y, C >= 1, and each mean log-Jacobian is within
  /// log C of log(m(Y) / m(Y_j)) as bounded distortion of a full branch forces.
  void validate(double tol = 1e-12) const {
    require(total_measure > 0.0, "m(Y) must be positive");
    require(distortion >= 1.0, "distortion C must be at least 1");
    require(!pieces.empty(), "need at least one piece");
    double s = 0.0;
    for (const auto& p : pieces) {
      require(p.measure > 0.0, "piece measures must be positive");
      s += p.measure;
      const double ref = std::log(total_measure / p.measure);
      require(std::abs(p.mean_log_jac - ref) <= std::log(distortion) + tol,
              "mean log-Jacobian inconsistent with distortion bound");
    }
    require(s <= total_measure * (1.0 + tol), "piece measures exceed m(Y)");
  }
};

struct FiniteMarkovBound {
  double achieved = 0.0;
  double bound = 0.0;
  std::vector<double> weights;
  bool holds() const { return achieved - bound >= -1e-12; }
};

/// Bernoulli weights p_j proportional to m(Y_j)^delta, their entropy minus delta times the
/// mean log-Jacobian, and the lower bound log sum m(Y_j)^delta - delta log(C m(Y)).
inline FiniteMarkovBound lemma9_bound(const FiniteMarkovSystem& sys, double delta) {
  require(delta >= 0.0 && delta <= 1.0, "delta must lie in [0,1]");
  sys.validate();
  LogSumExp lse;
  for (const auto& p : sys.pieces) lse.add(delta * std::log(p.measure));
  const double log_z = lse.value();
  FiniteMarkovBound r;
  KahanSum ent, jac;
  for (const auto& p : sys.pieces) {
    const double logp = delta * std::log(p.measure) - log_z;
    const double w = std::exp(logp);
    r.weights.push_back(w);
    ent.add(-w * logp);
    jac.add(w * p.mean_log_jac);
  }
  r.achieved = ent.value() - delta * jac.value();
  r.bound = log_z - delta * std::log(sys.distortion * sys.total_measure);
  return r;
}

}  // namespace birkhoff

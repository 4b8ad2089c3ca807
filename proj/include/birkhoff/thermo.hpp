#pragma once

// Pressure of q.phi - t.log|f'| + c, the Bowen root, and equilibrium-state statistics.
//
// Two backends:
//  * transfer matrix: affine Markov maps whose potentials are constant on the cylinders of
//    some depth m <= 6. The pressure is the log spectral radius of the m-block weighted
//    transition matrix, and the equilibrium state is the Markov measure built from its
//    left/right Perron vectors.
//  * cylinder sums: (1/n) log sum over depth-n cylinders of exp(sup S_n psi) (upper) and
//    exp(inf S_n psi) (lower). Cylinder bounds are computed once per depth and cached, so
//    evaluating the pressure at a new (q, t) is a single pass over the cache.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "error.hpp"
#include "interval_map.hpp"
#include "numeric.hpp"
#include "potential.hpp"
#include "symbolic.hpp"

namespace birkhoff {

enum class Backend { automatic, transfer_matrix, cylinder_sum };

inline const char* to_string(Backend b) {
  switch (b) {
    case Backend::automatic: return "automatic";
    case Backend::transfer_matrix: return "transfer-matrix";
    case Backend::cylinder_sum: return "cylinder-sum";
  }
  return "unknown";
}

struct PressureEstimate {
  double value = 0.0;
  size_t depth = 0;
  double lo = 0.0;
  double hi = 0.0;
  bool certified = false;  ///< lo/hi form a certified bracket of the depth-n sums
  double drift = 0.0;      ///< |P_n - P_{n-1}| of the reported value (cylinder backend)
  Backend method = Backend::cylinder_sum;
};

struct EquilibriumStats {
  std::vector<double> q;
  double t = 0.0;
  double pressure = 0.0;
  double entropy = 0.0;
  double lyapunov = 0.0;
  std::vector<double> phi_mean;
};

struct ThermoOptions {
  Backend backend = Backend::automatic;
  size_t depth = 0;  ///< cylinder depth; 0 selects 14 for affine maps and 10 otherwise
  unsigned threads = 1;
  Count budget = Count(10'000'000);
  size_t max_refinement = 6;
  double fd_step = 1e-4;
};

/// Exact leading eigen-data model on m-block cylinders.
class TransferModel {
 public:
  /// Returns nullopt when no refinement depth m <= max_m makes every potential constant.
  static std::optional<TransferModel> build(const IntervalMap& map, const MarkovStructure& markov,
                                            const std::vector<Potential>& phis, size_t max_m) {
    if (!map.is_affine()) return std::nullopt;
    for (size_t m = 1; m <= max_m; ++m) {
      if (Count(4096) < count_words(markov, m)) break;
      TransferModel tm;
      tm.m_ = m;
      bool ok = true;
      enumerate_cylinders(map, markov, m, {}, [&](const Cylinder& c, const CylinderStats&) {
        if (!ok) return;
        std::vector<double> vals;
        for (const auto& p : phis) {
          const auto v = p.constant_on(c.interval);
          if (!v) {
            ok = false;
            return;
          }
          vals.push_back(*v);
        }
        tm.words_.push_back(c.word);
        tm.phi_.push_back(std::move(vals));
        tm.logslope_.push_back(std::log(std::abs(map.branch(static_cast<size_t>(c.word[0])).affine_form()->slope)));
      });
      if (!ok) continue;
      tm.link(markov);
      return tm;
    }
    return std::nullopt;
  }

  size_t refinement() const { return m_; }
  size_t states() const { return words_.size(); }

  double pressure(const std::vector<double>& q, double t, double c = 0.0) const {
    return solve(q, t, c, false).pressure;
  }

  EquilibriumStats gibbs(const std::vector<double>& q, double t) const { return solve(q, t, 0.0, true); }

 private:
  void link(const MarkovStructure& markov) {
    std::map<Word, size_t> index;
    for (size_t i = 0; i < words_.size(); ++i) index[words_[i]] = i;
    succ_.assign(words_.size(), {});
    for (size_t u = 0; u < words_.size(); ++u) {
      const Word& w = words_[u];
      for (size_t b = 0; b < markov.size(); ++b) {
        if (!markov.allowed(w.back(), static_cast<int>(b))) continue;
        Word v(w.begin() + 1, w.end());
        v.push_back(static_cast<int>(b));
        const auto it = index.find(v);
        if (it != index.end()) succ_[u].push_back(it->second);
      }
    }
  }

  static void positive_part(Eigen::VectorXd& v) {
    if (v.sum() < 0) v = -v;
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::max(v[i], 0.0);
  }

  EquilibriumStats solve(const std::vector<double>& q, double t, double c, bool with_stats) const {
    require(q.size() == (phi_.empty() ? 0 : phi_[0].size()) || phi_.empty(), "q has the wrong length");
    const auto n = static_cast<Eigen::Index>(words_.size());
    std::vector<double> g(words_.size());
    double gmax = -std::numeric_limits<double>::infinity();
    for (size_t u = 0; u < words_.size(); ++u) {
      double v = c - t * logslope_[u];
      for (size_t j = 0; j < q.size(); ++j) v += q[j] * phi_[u][j];
      g[u] = v;
      gmax = std::max(gmax, v);
    }
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (size_t u = 0; u < words_.size(); ++u) {
      const double w = std::exp(g[u] - gmax);
      for (size_t v : succ_[u]) M(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = w;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, with_stats);
    Eigen::Index lead = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      if (es.eigenvalues()[i].real() > es.eigenvalues()[lead].real()) lead = i;
    }
    const double rho = es.eigenvalues()[lead].real();
    if (!(rho > 0.0)) throw Error(ErrorCode::degenerate, "transfer matrix has no positive leading eigenvalue");
    EquilibriumStats st;
    st.q = q;
    st.t = t;
    st.pressure = std::log(rho) + gmax;
    if (!with_stats) return st;

    Eigen::VectorXd r = es.eigenvectors().col(lead).real();
    Eigen::EigenSolver<Eigen::MatrixXd> esl(M.transpose(), true);
    Eigen::Index llead = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      if (esl.eigenvalues()[i].real() > esl.eigenvalues()[llead].real()) llead = i;
    }
    Eigen::VectorXd l = esl.eigenvectors().col(llead).real();
    positive_part(r);
    positive_part(l);
    Eigen::VectorXd pi = l.cwiseProduct(r);
    pi /= pi.sum();

    const size_t p = q.size();
    st.phi_mean.assign(p, 0.0);
    KahanSum lyap, ent;
    std::vector<KahanSum> means(p);
    for (size_t u = 0; u < words_.size(); ++u) {
      const double w = pi[static_cast<Eigen::Index>(u)];
      if (w <= 0.0) continue;
      lyap.add(w * logslope_[u]);
      for (size_t j = 0; j < p; ++j) means[j].add(w * phi_[u][j]);
      const double ru = r[static_cast<Eigen::Index>(u)];
      for (size_t v : succ_[u]) {
        const double puv = M(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) *
                           r[static_cast<Eigen::Index>(v)] / (rho * ru);
        if (puv > 0.0) ent.add(-w * puv * std::log(puv));
      }
    }
    st.lyapunov = lyap.value();
    st.entropy = ent.value();
    for (size_t j = 0; j < p; ++j) st.phi_mean[j] = means[j].value();
    return st;
  }

  size_t m_ = 1;
  std::vector<Word> words_;
  std::vector<std::vector<double>> phi_;  // per state, per potential
  std::vector<double> logslope_;
  std::vector<std::vector<size_t>> succ_;
};

/// Cached cylinder bounds at one depth.
class CylinderSumModel {
 public:
  CylinderSumModel(const IntervalMap& map, const MarkovStructure& markov, const std::vector<Potential>& phis, size_t n,
                   const EnumOptions& opt)
      : n_(n) {
    struct Collect {
      std::vector<Entry> entries;
      void operator()(const Cylinder&, const CylinderStats& s) { entries.push_back({s.sums, s.logderiv}); }
    };
    auto shards = enumerate_cylinders_sharded(map, markov, n, phis, [](size_t) { return Collect{}; }, opt);
    certified_ = true;
    for (auto& s : shards) {
      for (auto& e : s.entries) {
        certified_ = certified_ && e.logderiv.certified;
        for (const auto& b : e.sums) certified_ = certified_ && b.certified;
        entries_.push_back(std::move(e));
      }
    }
  }

  size_t depth() const { return n_; }
  bool certified() const { return certified_; }

  /// (lo, hi) of the depth-n pressure of sum_j q_j phi_j - t log|f'| + c.
  std::pair<double, double> bracket(const std::vector<double>& q, double t, double c = 0.0) const {
    LogSumExp lo, hi;
    const double n = static_cast<double>(n_);
    for (const auto& e : entries_) {
      double a = n * c, b = n * c;
      for (size_t j = 0; j < q.size(); ++j) {
        const double x = q[j] * e.sums[j].lo, y = q[j] * e.sums[j].hi;
        a += std::min(x, y);
        b += std::max(x, y);
      }
      const double x = -t * e.logderiv.lo, y = -t * e.logderiv.hi;
      a += std::min(x, y);
      b += std::max(x, y);
      lo.add(a);
      hi.add(b);
    }
    return {lo.value() / n, hi.value() / n};
  }

 private:
  struct Entry {
    std::vector<Bound> sums;
    Bound logderiv;
  };
  size_t n_;
  bool certified_ = true;
  std::vector<Entry> entries_;
};

/// A map, its Markov structure and a list of registered potentials phi_1..phi_p.
class ThermoSystem {
 public:
  ThermoSystem(IntervalMap map, std::vector<Potential> phis, ThermoOptions opt = {})
      : ThermoSystem(std::move(map), std::nullopt, std::move(phis), opt) {}

  ThermoSystem(IntervalMap map, std::optional<MarkovStructure> markov, std::vector<Potential> phis,
               ThermoOptions opt)
      : map_(std::move(map)), phis_(std::move(phis)), opt_(opt) {
    markov_ = markov ? std::move(*markov) : MarkovStructure::from_map(map_);
    require(markov_.size() == map_.size(), "Markov structure does not match the map");
    const MixingResult mix = mixing_check(markov_);
    if (!mix.mixing) throw Error(ErrorCode::not_mixing, "transition matrix is not primitive");
    mixing_power_ = mix.power;
    if (opt_.backend != Backend::cylinder_sum) {
      transfer_ = TransferModel::build(map_, markov_, phis_, opt_.max_refinement);
      if (!transfer_ && opt_.backend == Backend::transfer_matrix) {
        throw Error(ErrorCode::invalid_argument,
                    "transfer-matrix backend needs an affine map with potentials constant on cylinders of depth <= " +
                        std::to_string(opt_.max_refinement));
      }
    }
    if (!transfer_) {
      depth_ = opt_.depth ? opt_.depth : (map_.is_affine() ? 14 : 10);
      require(depth_ >= 2, "cylinder depth must be at least 2");
      EnumOptions eo{opt_.budget, opt_.threads};
      cyl_.emplace_back(map_, markov_, phis_, depth_, eo);
      cyl_.emplace_back(map_, markov_, phis_, depth_ - 1, eo);
    }
  }

  const IntervalMap& map() const { return map_; }
  const MarkovStructure& markov() const { return markov_; }
  const std::vector<Potential>& potentials() const { return phis_; }
  size_t dimension() const { return phis_.size(); }
  int mixing_power() const { return mixing_power_; }
  Backend backend() const { return transfer_ ? Backend::transfer_matrix : Backend::cylinder_sum; }
  size_t depth() const { return transfer_ ? transfer_->refinement() : depth_; }

  PressureEstimate pressure(const std::vector<double>& q, double t, double c = 0.0) const {
    check_q(q);
    PressureEstimate pe;
    pe.method = backend();
    pe.depth = depth();
    if (transfer_) {
      pe.value = pe.lo = pe.hi = transfer_->pressure(q, t, c);
      pe.certified = true;
      return pe;
    }
    const auto [lo, hi] = cyl_[0].bracket(q, t, c);
    const auto [lo1, hi1] = cyl_[1].bracket(q, t, c);
    pe.lo = lo;
    pe.hi = hi;
    pe.value = midpoint(lo, hi);
    pe.drift = std::abs(pe.value - midpoint(lo1, hi1));
    pe.certified = cyl_[0].certified();
    return pe;
  }

  double pressure_value(const std::vector<double>& q, double t, double c = 0.0) const {
    return pressure(q, t, c).value;
  }

  /// Exact Gibbs statistics with the transfer matrix, finite differences otherwise.
  EquilibriumStats equilibrium_stats(const std::vector<double>& q, double t) const {
    check_q(q);
    EquilibriumStats st = transfer_ ? transfer_->gibbs(q, t) : equilibrium_stats_fd(q, t);
    if (!(st.lyapunov > 0.0)) {
      throw Error(ErrorCode::not_hyperbolic, "non-positive Lyapunov exponent at t=" + std::to_string(t));
    }
    return st;
  }

  /// Centered differences of the pressure with one Richardson step.
  EquilibriumStats equilibrium_stats_fd(const std::vector<double>& q, double t) const {
    check_q(q);
    const double h = opt_.fd_step;
    auto deriv = [&](auto&& f) {
      const double d1 = (f(h) - f(-h)) / (2.0 * h);
      const double d2 = (f(h / 2) - f(-h / 2)) / h;
      return (4.0 * d2 - d1) / 3.0;
    };
    EquilibriumStats st;
    st.q = q;
    st.t = t;
    st.pressure = pressure_value(q, t);
    st.lyapunov = -deriv([&](double s) { return pressure_value(q, t + s); });
    st.phi_mean.resize(q.size());
    for (size_t j = 0; j < q.size(); ++j) {
      st.phi_mean[j] = deriv([&](double s) {
        auto qq = q;
        qq[j] += s;
        return pressure_value(qq, t);
      });
    }
    st.entropy = st.pressure + t * st.lyapunov;
    for (size_t j = 0; j < q.size(); ++j) st.entropy -= q[j] * st.phi_mean[j];
    return st;
  }

  /// Root of t -> P(-t log|f'|) on [0, 1].
  double bowen_dimension(double tol = 1e-13) const {
    if (map_.min_expansion() <= 1.0) {
      throw Error(ErrorCode::not_hyperbolic, "Bowen root needs min |f'| > 1");
    }
    const std::vector<double> zero(phis_.size(), 0.0);
    auto P = [&](double t) { return pressure_value(zero, t); };
    const double p0 = P(0.0);
    if (p0 <= 0.0) throw Error(ErrorCode::degenerate, "no repeller entropy: P(0) <= 0");
    double prev = p0;
    for (int i = 1; i <= 8; ++i) {
      const double cur = P(i / 8.0);
      if (cur > prev + 1e-12) throw Error(ErrorCode::rootfind_failed, "pressure is not monotone in t");
      prev = cur;
    }
    if (P(1.0) > 0.0) {
      // Conformal (acip) maps have P(1) = 0; truncation can leave the estimate slightly positive.
      if (pressure(zero, 1.0).lo <= 0.0) return 1.0;
      throw Error(ErrorCode::rootfind_failed, "P(-log|f'|) > 0: no root in [0,1]");
    }
    return bisect(P, 0.0, 1.0, tol);
  }

 private:
  static double midpoint(double lo, double hi) {
    if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
    return std::isfinite(lo) ? lo : hi;
  }

  void check_q(const std::vector<double>& q) const {
    require(q.size() == phis_.size(), "expected one q per registered potential");
  }

  IntervalMap map_;
  std::vector<Potential> phis_;
  ThermoOptions opt_;
  MarkovStructure markov_;
  int mixing_power_ = 1;
  std::optional<TransferModel> transfer_;
  size_t depth_ = 0;
  std::vector<CylinderSumModel> cyl_;
};

/// Pressure of a single potential psi.
inline PressureEstimate pressure(const IntervalMap& map, const MarkovStructure& markov, const Potential& psi,
                                 ThermoOptions opt = {}) {
  const ThermoSystem sys(map, markov, {psi}, opt);
  return sys.pressure({1.0}, 0.0);
}

inline double bowen_dimension(const IntervalMap& map, const MarkovStructure& markov, ThermoOptions opt = {}) {
  const ThermoSystem sys(map, markov, {}, opt);
  return sys.bowen_dimension();
}

/// Ruelle inequality h <= lambda + tol.
inline bool ruelle_check(const EquilibriumStats& st, double tol = 1e-6) { return st.entropy <= st.lyapunov + tol; }

}  // namespace birkhoff

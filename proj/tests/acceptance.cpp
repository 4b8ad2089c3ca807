// Acceptance runner: prints one PASS/FAIL line per criterion.
// Exit status is 0 when the failing criteria are exactly those listed with --known-failures.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "birkhoff/cli.hpp"
#include "birkhoff/horseshoe.hpp"
#include "birkhoff/moran.hpp"
#include "birkhoff/spectrum.hpp"
#include "birkhoff/tower.hpp"

using namespace birkhoff;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double H(double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); }
double besicovitch(double a) { return H(a) / std::log(2.0); }

ThermoSystem doubling_indicator() {
  return ThermoSystem(builtin::full_linear(2, {2, 2}), {Potential::indicator({0.5, 1.0})});
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

Outcome pressure_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  const ThermoSystem matrix(builtin::full_linear(2, {2, 2}), {});
  const double p = matrix.pressure_value({}, 0.0);
  ThermoOptions opt;
  opt.backend = Backend::cylinder_sum;
  opt.depth = 14;
  const PressureEstimate e = ThermoSystem(builtin::full_linear(2, {2, 2}), {}, opt).pressure({}, 0.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = matrix.backend() == Backend::transfer_matrix && std::abs(p - std::log(2.0)) <= 1e-12 &&
                  e.lo <= std::log(2.0) && e.hi >= std::log(2.0) && secs < 1.0;
  return {ok, "matrix error " + fmt(std::abs(p - std::log(2.0))) + ", depth-14 bracket [" + fmt(e.lo) + ", " + fmt(e.hi) + "]"};
}

Outcome bowen_equation() {
  const auto t0 = std::chrono::steady_clock::now();
  const double cantor = ThermoSystem(builtin::ternary_cantor(), {}).bowen_dimension();
  const IntervalMap m = builtin::full_linear(2, {2, 4});
  const double gap = bowen_dimension(m, MarkovStructure::from_map(m));
  double lo = 0, hi = 1;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::pow(2.0, -mid) + std::pow(4.0, -mid) > 1 ? lo : hi) = mid;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double e1 = std::abs(cantor - std::log(2.0) / std::log(3.0)), e2 = std::abs(gap - 0.5 * (lo + hi));
  return {e1 <= 1e-9 && e2 <= 1e-6 && secs < 1.0, "cantor error " + fmt(e1) + ", [2,4] error " + fmt(e2)};
}

Outcome spectrum_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> alphas;
  for (int i = 1; i <= 9; ++i) alphas.push_back(i / 10.0);
  alphas.push_back(1.2);
  const SpectrumCurve c = birkhoff_spectrum(doubling_indicator(), alphas);
  double worst = 0;
  bool ok = true;
  for (int i = 0; i < 9; ++i) {
    ok = ok && c.points[i].level.status == LevelStatus::attained;
    worst = std::max(worst, std::abs(c.points[i].level.value - besicovitch(alphas[i])));
  }
  const bool empty = c.points[9].level.status == LevelStatus::empty && c.points[9].level.value == 0.0;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {ok && empty && worst <= 1e-4 && secs < 30.0,
          "max error " + fmt(worst) + ", alpha=1.2 " + (empty ? "empty/0" : "not empty")};
}

Outcome basin_consistency() {
  const ThermoSystem sys = doubling_indicator();
  double worst = 0;
  bool ok = true;
  for (double a : {0.2, 0.3, 0.5, 0.7, 0.8}) {
    const BasinResult b = basin_dimension(sys, {a});
    const LevelSolution s = birkhoff_spectrum(sys, {a}).points[0].level;
    ok = ok && b.status == LevelStatus::attained;
    worst = std::max(worst, std::abs(b.value - s.value));
  }
  const ThermoSystem two(builtin::full_linear(2, {2, 2}),
                         {Potential::indicator({0.5, 1.0}), Potential::step({0.75}, {0.0, 1.0})});
  const BasinResult b2 = basin_dimension(two, {1.0 / 3, 1.0 / 9});
  const double e2 = std::abs(b2.value - H(1.0 / 3) / std::log(2.0));
  return {ok && worst <= 1e-8 && b2.status == LevelStatus::attained && e2 <= 1e-3,
          "p=1 max gap " + fmt(worst) + ", p=2 error " + fmt(e2)};
}

Outcome irregular_set() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = irregular_dimension_estimate(doubling_indicator(), {0.1, 0.03, 0.01});
  const double need[] = {0.9, 0.97, 0.99};
  bool ok = rows.size() == 3;
  std::string d = "bounds";
  for (size_t i = 0; ok && i < 3; ++i) {
    ok = ok && rows[i].bound >= need[i] && std::abs(rows[i].mu1.phi_mean[0] - rows[i].mu2.phi_mean[0]) > 0 &&
         std::abs(rows[i].bound - std::min(rows[i].d1, rows[i].d2)) <= 1e-15;
    d += " " + fmt(rows[i].bound);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {ok && secs < 10.0, d};
}

Outcome extraction_count() {
  const auto t0 = std::chrono::steady_clock::now();
  const ThermoSystem sys = doubling_indicator();
  const auto target = sys.equilibrium_stats({-std::log(2.0)}, 1.0);
  const HorseshoeCertificate c = extract(sys, target, 0.05, 60);
  // Closed window |j/60 - 1/3| <= 0.05 keeps 17 <= j <= 23 ones.
  unsigned long long oracle = 0;
  for (int j = 17; j <= 23; ++j) {
    unsigned long long b = 1;
    for (int i = 1; i <= j; ++i) b = b * static_cast<unsigned long long>(60 - j + i) / static_cast<unsigned long long>(i);
    oracle += b;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = c.count.raw() == oracle && c.count.log() > 60 * (H(1.0 / 3) - 0.05) && secs < 5.0;
  return {ok, "count " + c.count.to_string() + " vs oracle " + std::to_string(oracle)};
}

Outcome finite_markov_suite() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 1000; ++trial) {
    FiniteMarkovSystem s;
    s.total_measure = 0.1 + 3 * u(rng);
    s.distortion = 1 + 9 * u(rng);
    const int n = 1 + static_cast<int>(12 * u(rng));
    std::vector<double> w(n);
    double tot = 0;
    for (auto& x : w) tot += (x = 1e-3 + u(rng));
    const double fill = 0.05 + 0.95 * u(rng);
    for (double x : w) {
      const double m = x / tot * fill * s.total_measure;
      s.pieces.push_back({m, std::log(s.total_measure / m) + std::log(s.distortion) * (2 * u(rng) - 1)});
    }
    const FiniteMarkovBound r = lemma9_bound(s, u(rng));
    worst = std::min(worst, r.achieved - r.bound);
  }
  FiniteMarkovSystem eq;
  eq.total_measure = 0.9;
  eq.pieces = {{0.2, std::log(0.9 / 0.2)}, {0.3, std::log(0.9 / 0.3)}, {0.1, std::log(9.0)}};
  double eq_gap = 0;
  for (double delta : {0.0, 0.37, 1.0}) {
    const FiniteMarkovBound r = lemma9_bound(eq, delta);
    eq_gap = std::max(eq_gap, std::abs(r.achieved - r.bound));
  }
  return {worst >= -1e-12 && eq_gap <= 1e-12, "min slack " + fmt(worst) + ", equality gap " + fmt(eq_gap)};
}

Outcome combine_monotone() {
  const ThermoSystem sys = doubling_indicator();
  const double eps = 0.05;
  CombinationPlan plan;
  plan.eps = eps;
  for (double q : {-std::log(2.0), std::log(2.0)})
    plan.blocks.push_back({extract(sys, sys.equilibrium_stats({q}, 1.0), eps / 2, 60), 1});
  std::vector<CombinedCertificate> c;
  for (size_t n : {100u, 200u, 400u}) {
    plan.n = n;
    c.push_back(combine(plan, sys.map(), sys.potentials()));
  }
  bool ok = true;
  std::string d = "entropy";
  for (size_t i = 0; i < c.size(); ++i) {
    ok = ok && c[i].entropy_lower <= H(1.0 / 3) && c[i].phi_windows[0].contains(0.5);
    if (i > 0) {
      ok = ok && c[i].entropy_lower >= c[i - 1].entropy_lower - 1e-9;
      ok = ok && c[i].phi_windows[0].length() <= c[i - 1].phi_windows[0].length() + 1e-9;
    }
    d += " " + fmt(c[i].entropy_lower);
  }
  d += ", window widths";
  for (const auto& x : c) d += " " + fmt(x.phi_windows[0].length());
  return {ok, d};
}

Outcome tower_certification() {
  const auto t0 = std::chrono::steady_clock::now();
  const IntervalMap two = builtin::full_linear(2, {2, 2});
  const ReturnStructure full = induce(two, {0.0, 1.0}, 12);
  const H1Report h1 = check_h1(full);
  const H3Report h3 = check_h3(full, 8);
  const H4Report h4 = check_h4(full);
  const bool consts = h1.holds && std::abs(h1.lambda - 2.0) <= 1e-12 && std::abs(h3.C - 1.0) <= 1e-12 && h4.found &&
                      h4.l0 == 1 && std::abs(h4.gamma0 - 1.0) <= 1e-12;
  const IntervalMap mp = builtin::manneville_pomeau(0.5);
  const TailReport pm = tail_classify(induce(mp, mp.branch(1).domain(), 40));
  const TailReport half = tail_classify(induce(two, {0.0, 0.5}, 40));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = consts && pm.classification == TailClass::polynomial && half.classification == TailClass::exponential &&
                  std::abs(half.exp_rate - std::log(2.0)) <= 0.05 * std::log(2.0) && secs < 20.0;
  return {ok, "lambda " + fmt(h1.lambda) + " C " + fmt(h3.C) + " l0 " + std::to_string(h4.l0) + " gamma0 " +
                  fmt(h4.gamma0) + "; MP " + to_string(pm.classification) + " (exponent " + fmt(pm.poly_exponent) +
                  "); half-base " + to_string(half.classification) + " (rate " + fmt(half.exp_rate) + ")"};
}

Outcome cover_dichotomy() {
  const IntervalMap m = builtin::full_linear(2, {2, 2});
  const ReturnStructure rs = induce(m, {0.0, 1.0}, 24);
  const Potential phi = Potential::indicator({0.5, 1.0});
  std::vector<size_t> depths;
  for (size_t n = 10; n <= 24; ++n) depths.push_back(n);
  const double d = besicovitch(1.0 / 3);
  const auto above = hausdorff_cover_report(rs, phi, 1.0 / 3, 0.04, d + 0.03, depths);
  const auto below = hausdorff_cover_report(rs, phi, 1.0 / 3, 0.04, d - 0.07, depths);
  // Subsequence n = 0 mod 3, where 1/3 is a lattice point of S_n phi / n.
  auto lattice = [](const HausdorffCoverReport& r, int sign) {
    double prev = std::numeric_limits<double>::quiet_NaN();
    bool mono = true;
    for (const auto& x : r.depths) {
      if (x.n % 3) continue;
      if (!std::isnan(prev)) mono = mono && sign * (x.sum_filtered - prev) > 0;
      prev = x.sum_filtered;
    }
    return mono;
  };
  const bool ok = above.monotone == "decreasing" && below.monotone == "increasing";
  return {ok, "above: " + above.monotone + " (log slope " + fmt(above.log_slope) + "), below: " + below.monotone +
                  " (log slope " + fmt(below.log_slope) + "); along n = 0 mod 3: " +
                  (lattice(above, -1) ? "decreasing" : "not decreasing") + " / " +
                  (lattice(below, 1) ? "increasing" : "not increasing")};
}

Outcome mass_distribution() {
  const IntervalMap m = builtin::ternary_cantor();
  const auto mk = MarkovStructure::from_map(m);
  const auto cert = certificate_from_words(m, mk, {}, {{0}, {1}});
  const MoranFamily f = build_nested(m, mk, {cert}, {{0, 12}}, 12);
  const double bound = mass_distribution_bound(f).bound;
  const double box = box_dimension(f.intervals(12)).value;
  const double target = std::log(2.0) / std::log(3.0);
  return {std::abs(bound - target) <= 0.02 && std::abs(bound - box) <= 0.03,
          "bound " + fmt(bound) + ", box " + fmt(box) + ", target " + fmt(target)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "birkhoff_acceptance";
  fs::remove_all(root);
  const fs::path configs = fs::path(BIRKHOFF_SOURCE_DIR) / "configs";
  size_t compared = 0;
  std::string bad;
  for (const auto& cmd : cli::commands()) {
    const std::string cfg = (configs / (cmd + ".json")).string();
    std::vector<fs::path> dirs;
    for (const char* t : {"1", "8", "1"}) {
      const fs::path dir = root / (cmd + "-" + t + "-" + std::to_string(dirs.size()));
      std::ostringstream out, err;
      if (cli::run({cmd, "--config", cfg, "--out", dir.string(), "--threads", t, "--seed", "7"}, out, err) != 0) {
        bad += " " + cmd + "(exit)";
      }
      dirs.push_back(dir);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      if (entry.path().extension() != ".csv") continue;
      const std::string ref = slurp(entry.path());
      for (size_t i = 1; i < dirs.size(); ++i) {
        if (slurp(dirs[i] / entry.path().filename()) != ref) bad += " " + entry.path().filename().string();
      }
      ++compared;
    }
  }
  return {bad.empty() && compared >= cli::commands().size(),
          std::to_string(compared) + " CSVs compared across threads 1/8/1" + (bad.empty() ? "" : "; mismatches:" + bad)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--known-failures" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) known.insert(std::stoi(tok));
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"pressure exactness", pressure_exactness},
      {"Bowen equation", bowen_equation},
      {"spectrum vs Besicovitch-Eggleston", spectrum_oracle},
      {"spectrum/basin consistency", basin_consistency},
      {"irregular set lower bounds", irregular_set},
      {"horseshoe extraction count", extraction_count},
      {"finite Markov system bound", finite_markov_suite},
      {"combination monotonicity", combine_monotone},
      {"tower certification", tower_certification},
      {"cover-sum dichotomy", cover_dichotomy},
      {"mass distribution estimator", mass_distribution},
      {"CLI determinism", determinism},
  };
  std::set<int> failed;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) failed.insert(id);
    std::printf("%s criterion %2d  %-36s %7.3fs  %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed.size(), criteria.size());
  if (failed != known) {
    std::printf("failing set differs from the declared known failures\n");
    return 1;
  }
  return 0;
}

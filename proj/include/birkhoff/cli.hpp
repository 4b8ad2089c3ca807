#pragma once

// Config-driven front end: `birkhoff <command> --config <path> [--out <dir>] [--threads N] [--seed S]`.
// Configs are JSON objects with the sections map, potentials, thermo, analysis, output and seed;
// unknown keys are rejected at every level. Each command writes <out>/<command>.csv (first
// column schema_version, always a status column) and, when output.plot is true, an SVG.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "horseshoe.hpp"
#include "interval_map.hpp"
#include "moran.hpp"
#include "potential.hpp"
#include "spectrum.hpp"
#include "symbolic.hpp"
#include "thermo.hpp"
#include "tower.hpp"

namespace birkhoff::cli {

using json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"pressure", "bowen", "spectrum", "basin", "horseshoe",
                                          "combine", "tower-check", "cover", "moran", "irregular"};
  return c;
}

// ---------------------------------------------------------------- config access

inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::invalid_argument, where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw Error(ErrorCode::invalid_argument, "unknown key '" + it.key() + "' in " + where);
  }
}

inline const json& need(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw Error(ErrorCode::invalid_argument, "missing required key '" + key + "' in " + where);
  return obj.at(key);
}

template <class T>
T get_as(const json& v, const std::string& what) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::invalid_argument, "key '" + what + "' has the wrong type");
  }
}

template <class T>
T get_or(const json& obj, const std::string& key, T fallback) {
  return obj.contains(key) ? get_as<T>(obj.at(key), key) : fallback;
}

inline Interval get_interval(const json& v, const std::string& what) {
  const auto xs = get_as<std::vector<double>>(v, what);
  if (xs.size() != 2 || !(xs[0] < xs[1])) throw Error(ErrorCode::invalid_argument, "key '" + what + "' must be [lo, hi] with lo < hi");
  return {xs[0], xs[1]};
}

/// A number list given either explicitly or as {"from", "to", "points"}.
inline std::vector<double> get_grid(const json& v, const std::string& what) {
  if (v.is_array()) return get_as<std::vector<double>>(v, what);
  check_keys(v, {"from", "to", "points"}, what);
  const double a = get_as<double>(need(v, "from", what), "from");
  const double b = get_as<double>(need(v, "to", what), "to");
  const auto n = get_as<size_t>(need(v, "points", what), "points");
  require(n >= 1, what + ".points must be positive");
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

/// Tower base: [lo, hi], or "branch:<i>" for the domain of branch i.
inline Interval get_base(const json& a, const IntervalMap& map) {
  if (!a.contains("base")) return {0.0, 1.0};
  const json& v = a.at("base");
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    require(s.rfind("branch:", 0) == 0, "analysis.base must be [lo, hi] or \"branch:<index>\"");
    size_t i = 0;
    try {
      i = std::stoul(s.substr(7));
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_argument, "analysis.base: bad branch index in '" + s + "'");
    }
    require(i < map.size(), "analysis.base: branch index out of range");
    return map.branch(i).domain();
  }
  return get_interval(v, "base");
}

inline IntervalMap parse_map(const json& m) {
  if (m.contains("builtin")) {
    check_keys(m, {"builtin", "slopes", "a", "s"}, "map");
    builtin::Params p;
    p.slopes = get_or<std::vector<double>>(m, "slopes", {});
    p.a = get_or<double>(m, "a", 4.0);
    p.s = get_or<double>(m, "s", 0.5);
    const auto name = get_as<std::string>(m.at("builtin"), "builtin");
    if (name == "full-linear") require(!p.slopes.empty(), "full-linear needs a nonempty 'slopes' list");
    return builtin::make(name, p);
  }
  check_keys(m, {"branches", "name"}, "map");
  const json& bs = need(m, "branches", "map (or 'builtin')");
  require(bs.is_array() && !bs.empty(), "map.branches must be a nonempty list");
  std::vector<Branch> branches;
  for (const auto& b : bs) {
    if (b.contains("coeffs")) {
      check_keys(b, {"domain", "coeffs"}, "map.branches[]");
      const auto c = get_as<std::vector<double>>(b.at("coeffs"), "coeffs");
      require(c.size() >= 2, "polynomial branch needs degree at least 1");
      auto f = [c](double x) {
        double s = 0.0;
        for (size_t i = c.size(); i-- > 0;) s = s * x + c[i];
        return s;
      };
      auto df = [c](double x) {
        double s = 0.0;
        for (size_t i = c.size(); i-- > 1;) s = s * x + static_cast<double>(i) * c[i];
        return s;
      };
      branches.emplace_back(get_interval(need(b, "domain", "map.branches[]"), "domain"), f, df, c.size() <= 3);
    } else {
      check_keys(b, {"domain", "slope", "intercept"}, "map.branches[]");
      branches.push_back(Branch::affine(get_interval(need(b, "domain", "map.branches[]"), "domain"),
                                        get_as<double>(need(b, "slope", "map.branches[]"), "slope"),
                                        get_as<double>(need(b, "intercept", "map.branches[]"), "intercept")));
    }
  }
  return IntervalMap(std::move(branches), get_or<std::string>(m, "name", "custom"));
}

inline Potential parse_potential(const json& p, const IntervalMap& map) {
  const auto type = get_as<std::string>(need(p, "type", "potentials[]"), "type");
  if (type == "indicator") {
    check_keys(p, {"type", "interval"}, "indicator potential");
    return Potential::indicator(get_interval(need(p, "interval", "indicator potential"), "interval"));
  }
  if (type == "polynomial") {
    check_keys(p, {"type", "coeffs"}, "polynomial potential");
    return Potential::polynomial(get_as<std::vector<double>>(need(p, "coeffs", "polynomial potential"), "coeffs"));
  }
  if (type == "constant") {
    check_keys(p, {"type", "value"}, "constant potential");
    return Potential::constant(get_as<double>(need(p, "value", "constant potential"), "value"));
  }
  if (type == "step") {
    check_keys(p, {"type", "breaks", "values"}, "step potential");
    return Potential::step(get_as<std::vector<double>>(need(p, "breaks", "step potential"), "breaks"),
                           get_as<std::vector<double>>(need(p, "values", "step potential"), "values"));
  }
  if (type == "log-derivative") {
    check_keys(p, {"type"}, "log-derivative potential");
    return Potential::log_derivative(map);
  }
  throw Error(ErrorCode::invalid_argument, "unknown potential type '" + type + "'");
}

struct Config {
  json raw;
  std::optional<IntervalMap> map;
  std::vector<Potential> potentials;
  ThermoOptions thermo;
  json analysis = json::object();
  std::string out_dir = "out";
  bool plot = true;
  uint64_t seed = 0;
};

inline Config parse_config(const json& j, unsigned threads) {
  check_keys(j, {"map", "potentials", "thermo", "analysis", "output", "seed"}, "config");
  Config c;
  c.raw = j;
  c.map = parse_map(need(j, "map", "config"));
  if (j.contains("potentials")) {
    require(j.at("potentials").is_array(), "potentials must be a list");
    for (const auto& p : j.at("potentials")) c.potentials.push_back(parse_potential(p, *c.map));
  }
  c.thermo.threads = threads;
  if (j.contains("thermo")) {
    const json& t = j.at("thermo");
    check_keys(t, {"backend", "depth", "max_refinement"}, "thermo");
    const auto b = get_or<std::string>(t, "backend", "automatic");
    if (b == "automatic") c.thermo.backend = Backend::automatic;
    else if (b == "transfer-matrix") c.thermo.backend = Backend::transfer_matrix;
    else if (b == "cylinder-sum") c.thermo.backend = Backend::cylinder_sum;
    else throw Error(ErrorCode::invalid_argument, "unknown thermo.backend '" + b + "'");
    c.thermo.depth = get_or<size_t>(t, "depth", 0);
    c.thermo.max_refinement = get_or<size_t>(t, "max_refinement", 6);
  }
  if (j.contains("analysis")) {
    require(j.at("analysis").is_object(), "analysis must be an object");
    c.analysis = j.at("analysis");
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, {"dir", "plot"}, "output");
    c.out_dir = get_or<std::string>(o, "dir", c.out_dir);
    c.plot = get_or<bool>(o, "plot", true);
  }
  c.seed = get_or<uint64_t>(j, "seed", 0);
  return c;
}

// ---------------------------------------------------------------- output

inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16g", x);
  return buf;
}

class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  void add(std::vector<std::string> row) {
    require(row.size() == columns_.size(), "internal: row width mismatch");
    rows_.push_back(std::move(row));
  }
  void write(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::invalid_argument, "cannot write " + path.string());
    f << "schema_version";
    for (const auto& c : columns_) f << ',' << c;
    f << '\n';
    for (const auto& r : rows_) {
      f << kSchemaVersion;
      for (const auto& v : r) f << ',' << v;
      f << '\n';
    }
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

struct Series {
  std::string label;
  std::vector<double> x, y;
};

/// Minimal standalone line plot.
inline void write_svg(const std::filesystem::path& path, const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, const std::vector<Series>& series) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 <= 0) x1 = x0 + 1;
  if (y1 - y0 <= 0) y1 = y0 + 1;
  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::invalid_argument, "cannot write " + path.string());
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n"
    << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xlabel << "</text>\n"
    << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2 << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << ylabel << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    f << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << num(std::round(xv * 1e4) / 1e4) << "</text>\n";
    f << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 3 << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << num(std::round(yv * 1e4) / 1e4) << "</text>\n";
  }
  for (size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    f << "<polyline fill=\"none\" stroke=\"" << colors[k % 4] << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) f << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    f << "\"/>\n<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (k + 1) << "\" text-anchor=\"end\" fill=\"" << colors[k % 4]
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
  }
  f << "</svg>\n";
}

// ---------------------------------------------------------------- commands

struct Context {
  Config cfg;
  std::filesystem::path out;
  unsigned threads = 1;
  std::ostream& log;
};

struct Outcome {
  int code = 0;
  std::string summary;
};

inline ThermoSystem make_system(const Context& ctx, size_t min_potentials = 0) {
  require(ctx.cfg.potentials.size() >= min_potentials,
          "command needs at least " + std::to_string(min_potentials) + " potential(s) in 'potentials'");
  return ThermoSystem(*ctx.cfg.map, ctx.cfg.potentials, ctx.cfg.thermo);
}

inline std::vector<double> get_q(const json& a, size_t p) {
  auto q = get_or<std::vector<double>>(a, "q", std::vector<double>(p, 0.0));
  require(q.size() == p, "analysis.q needs one entry per potential");
  return q;
}

inline Outcome cmd_pressure(Context& ctx) {
  const json& a = ctx.cfg.analysis;
  check_keys(a, {"q", "t"}, "analysis");
  const ThermoSystem sys = make_system(ctx);
  const auto q = get_q(a, sys.dimension());
  std::vector<double> ts{1.0};
  if (a.contains("t")) ts = a.at("t").is_array() || a.at("t").is_object() ? get_grid(a.at("t"), "t") : std::vector<double>{get_as<double>(a.at("t"), "t")};
  Table tab({"status", "t", "pressure", "lo", "hi", "depth", "backend", "certified", "drift"});
  Series s{"P(t)", {}, {}};
  for (double t : ts) {
    const PressureEstimate e = sys.pressure(q, t);
    tab.add({"ok", num(t), num(e.value), num(e.lo), num(e.hi), std::to_string(e.depth), to_string(e.method),
             e.certified ? "true" : "false", num(e.drift)});
    s.x.push_back(t);
    s.y.push_back(e.value);
  }
  tab.write(ctx.out / "pressure.csv");
  if (ctx.cfg.plot && ts.size() > 1) write_svg(ctx.out / "pressure.svg", "pressure", "t", "P", {s});
  return {0, "pressure: " + std::to_string(ts.size()) + " value(s), P(t=" + num(ts[0]) + ") = " + num(s.y[0])};
}

inline Outcome cmd_bowen(Context& ctx) {
  check_keys(ctx.cfg.analysis, {}, "analysis");
  const ThermoSystem sys = make_system(ctx);
  const double d = sys.bowen_dimension();
  Table tab({"status", "dimension", "backend", "depth", "mixing_power"});
  tab.add({"ok", num(d), to_string(sys.backend()), std::to_string(sys.depth()), std::to_string(sys.mixing_power())});
  tab.write(ctx.out / "bowen.csv");
  return {0, "bowen: dimension = " + num(d)};
}

inline Outcome cmd_spectrum(Context& ctx) {
  const json& a = ctx.cfg.analysis;
  check_keys(a, {"alpha", "range_depth"}, "analysis");
  const ThermoSystem sys = make_system(ctx, 1);
  require(sys.dimension() == 1, "spectrum needs exactly one potential");
  const auto alphas = get_grid(need(a, "alpha", "analysis"), "alpha");
  const SpectrumCurve curve = birkhoff_spectrum(sys, alphas, get_or<size_t>(a, "range_depth", 0));
  Table tab({"alpha", "dimension", "status", "q", "t", "entropy", "lyapunov", "residual"});
  Series s{"D(alpha)", {}, {}};
  size_t failed = 0;
  for (const auto& pt : curve.points) {
    const auto& lv = pt.level;
    const bool ok = lv.status == LevelStatus::attained;
    failed += lv.status == LevelStatus::failed;
    const double nan = std::nan("");
    tab.add({num(pt.alpha), num(lv.value), to_string(lv.status), num(ok ? lv.q[0] : nan), num(ok ? lv.t : nan),
             num(ok ? lv.witness->entropy : nan), num(ok ? lv.witness->lyapunov : nan),
             num(lv.status == LevelStatus::empty ? 0.0 : lv.residual)});
    if (lv.status != LevelStatus::failed) {
      s.x.push_back(pt.alpha);
      s.y.push_back(lv.value);
    }
  }
  tab.write(ctx.out / "spectrum.csv");
  if (ctx.cfg.plot) write_svg(ctx.out / "spectrum.svg", "Birkhoff spectrum", "alpha", "dimension", {s});
  return {failed ? 3 : 0, "spectrum: " + std::to_string(curve.points.size()) + " points, " + std::to_string(failed) +
                              " failed, Bowen dimension " + num(curve.bowen)};
}

inline Outcome cmd_basin(Context& ctx) {
  const json& a = ctx.cfg.analysis;
  check_keys(a, {"targets"}, "analysis");
  const ThermoSystem sys = make_system(ctx, 1);
  const auto targets = get_as<std::vector<double>>(need(a, "targets", "analysis"), "targets");
  const BasinResult r = basin_dimension(sys, targets);
  Table tab({"status", "value", "relaxed_1e-2", "relaxed_1e-3", "relaxed_1e-4", "extrapolated", "trend", "residual"});
  const bool ok = r.status == LevelStatus::attained;
  tab.add({to_string(r.status), num(r.value), num(ok ? r.relaxed[0] : 0.0), num(ok ? r.relaxed[1] : 0.0),
           num(ok ? r.relaxed[2] : 0.0), num(ok ? r.extrapolated : 0.0), ok ? r.trend : "", num(ok ? r.residual : 0.0)});
  tab.write(ctx.out / "basin.csv");
  return {r.status == LevelStatus::failed ? 3 : 0, std::string("basin: ") + to_string(r.status) + ", dimension = " + num(r.value)};
}

inline HorseshoeCertificate extract_from(const ThermoSystem& sys, const json& request, double eps, size_t k, unsigned threads,
                                         const std::string& where) {
  check_keys(request, {"q", "t", "weight"}, where);
  const auto q = get_q(request, sys.dimension());
  const double t = get_or<double>(request, "t", 1.0);
  ExtractOptions opt;
  opt.threads = threads;
  return extract(sys, sys.equilibrium_stats(q, t), eps, k, opt);
}

inline Outcome cmd_horseshoe(Context& ctx) {
  const json& a = ctx.cfg.analysis;
  check_keys(a, {"q", "t", "eps", "k"}, "analysis");
  const ThermoSystem sys = make_system(ctx);
  const double eps = get_as<double>(need(a, "eps", "analysis"), "eps");
  const auto k = get_as<size_t>(need(a, "k", "analysis"), "k");
  json request = json::object();
  if (a.contains("q")) request["q"] = a.at("q");
  if (a.contains("t")) request["t"] = a.at("t");
  const HorseshoeCertificate c = extract_from(sys, request, eps, k, ctx.threads, "analysis");
  std::vector<std::string> cols{"status", "k", "eps", "count", "entropy_bound", "target_entropy", "lyapunov_lo",
                                "lyapunov_hi", "target_lyapunov", "certified", "mode"};
  std::vector<std::string> row{"ok", std::to_string(k), num(eps), c.count.to_string(), num(c.entropy_bound),
                               num(c.target_entropy), num(c.logderiv_window.lo), num(c.logderiv_window.hi),
                               num(c.target_lyapunov), c.certified ? "true" : "false",
                               c.combinatorial ? "combinatorial" : "streaming"};
  for (size_t j = 0; j < c.phi_windows.size(); ++j) {
    cols.push_back("phi" + std::to_string(j) + "_lo");
    cols.push_back("phi" + std::to_string(j) + "_hi");
    cols.push_back("phi" + std::to_string(j) + "_target");
    row.push_back(num(c.phi_windows[j].lo));
    row.push_back(num(c.phi_windows[j].hi));
    row.push_back(num(c.target_means[j]));
  }
  Table tab(cols);
  tab.add(row);
  tab.write(ctx.out / "horseshoe.csv");
  return {0, "horseshoe: k = " + std::to_string(k) + ", count = " + c.count.to_string()};
}

inline Outcome cmd_combine(Context& ctx) {
  const json& a = ctx.cfg.analysis;
  check_keys(a, {"blocks", "eps", "k", "n"}, "analysis");
  const ThermoSystem sys = make_system(ctx);
  const double eps = get_as<double>(need(a, "eps", "analysis"), "eps");
  const auto k = get_as<size_t>(need(a, "k", "analysis"), "k");
  const json& blocks = need(a, "blocks", "analysis");
  require(blocks.is_array() && !blocks.empty(), "analysis.blocks must be a nonempty list");
  CombinationPlan plan;
  plan.eps = eps;
  for (const auto& b : blocks) {
    // Blocks are extracted at eps/2 so that spacers keep the combined family within eps.
    plan.blocks.push_back({extract_from(sys, b, eps / 2, k, ctx.threads, "analysis.blocks[]"), get_or<int>(b, "weight", 1)});
  }
  const json& nj = need(a, "n", "analysis");
  const auto ns = nj.is_array() ? get_as<std::vector<size_t>>(nj, "n") : std::vector<size_t>{get_as<size_t>(nj, "n")};
  std::vector<std::string> cols{"status", "n", "period", "entropy_lower", "entropy_target", "entropy_ok",
                                "lyapunov_lo", "lyapunov_hi", "lyapunov_target", "lyapunov_ok", "min_n"};
  for (size_t j = 0; j < sys.dimension(); ++j) {
    for (const char* suf : {"_lo", "_hi", "_target"}) cols.push_back("phi" + std::to_string(j) + suf);
  }
  cols.push_back("phi_ok");
  Table tab(cols);
  Series s{"entropy lower bound", {}, {}};
  int code = 0;
  for (size_t n : ns) {
    plan.n = n;
    try {
      const CombinedCertificate c = combine(plan, sys.map(), sys.potentials());
      std::vector<std::string> row{c.ok() ? "ok" : "window-miss", std::to_string(n), std::to_string(c.period),
                                   num(c.entropy_lower), num(c.entropy_target), c.entropy_ok ? "true" : "false",
                                   num(c.lyapunov_window.lo), num(c.lyapunov_window.hi), num(c.lyapunov_target),
                                   c.lyapunov_ok ? "true" : "false", std::to_string(c.min_n)};
      for (size_t j = 0; j < c.phi_windows.size(); ++j) {
        row.push_back(num(c.phi_windows[j].lo));
        row.push_back(num(c.phi_windows[j].hi));
        row.push_back(num(c.phi_targets[j]));
      }
      row.push_back(c.phi_ok ? "true" : "false");
      tab.add(row);
      s.x.push_back(static_cast<double>(n));
      s.y.push_back(c.entropy_lower);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::too_small) throw;
      std::vector<std::string> row(cols.size(), "");
      row[0] = "too-small";
      row[1] = std::to_string(n);
      tab.add(row);
      code = 3;
    }
  }
  tab.write(ctx.out / "combine.csv");
  if (ctx.cfg.plot && s.x.size() > 1) write_svg(ctx.out / "combine.svg", "combined horseshoe", "n", "entropy lower bound", {s});
  return {code, "combine: " + std::to_string(ns.size()) + " block length(s)"};
}

inline Outcome cmd_tower(Context& ctx) {
  const json& a = ctx.cfg.analysis;
  check_keys(a, {"base", "depth", "composed_depth"}, "analysis");
  const Interval J = get_base(a, *ctx.cfg.map);
  const auto N = get_or<size_t>(a, "depth", 40);
  const auto M = std::min(get_or<size_t>(a, "composed_depth", 10), N);
  const ReturnStructure rs = induce(*ctx.cfg.map, J, N);
  const H1Report h1 = check_h1(rs);
  const H2Report h2 = check_h2(rs, M);
  const H3Report h3 = check_h3(rs, M);
  const H4Report h4 = check_h4(rs);
  std::optional<TailReport> tail;
  if (N >= 10) tail = tail_classify(rs);
  Table tab({"status", "n", "returned_mass", "tail_mass", "escaped_mass", "eps_n"});
  for (size_t n = 1; n <= N; ++n) {
    tab.add({"ok", std::to_string(n), num(rs.returned_mass(n)), num(rs.tail_mass(n)), num(rs.escaped[n]),
             n <= M ? num(h2.eps[n]) : ""});
  }
  tab.write(ctx.out / "tower-check.csv");
  Table sum({"status", "key", "value"});
  auto put = [&](const std::string& k, const std::string& v) { sum.add({"ok", k, v}); };
  put("depth", std::to_string(N));
  put("h1_holds", h1.holds ? "true" : "false");
  put("h1_lambda", num(h1.lambda));
  put("h2_decreasing", h2.decreasing ? "true" : "false");
  put("h2_decay_rate", num(h2.decay_rate));
  put("h3_C", num(h3.C));
  put("h3_certified", h3.certified ? "true" : "false");
  put("h4_found", h4.found ? "true" : "false");
  put("h4_l0", std::to_string(h4.l0));
  put("h4_gamma0", num(h4.gamma0));
  put("tail_class", tail ? to_string(tail->classification) : "too-small");
  put("tail_exp_rate", tail ? num(tail->exp_rate) : "");
  put("tail_poly_exponent", tail ? num(tail->poly_exponent) : "");
  put("mass_defect", num(rs.mass_defect(N)));
  sum.write(ctx.out / "tower-check-summary.csv");
  if (ctx.cfg.plot) {
    Series s{"log m(R>n)", {}, {}};
    for (size_t n = 1; n <= N; ++n) {
      if (rs.tail_mass(n) > 0) {
        s.x.push_back(static_cast<double>(n));
        s.y.push_back(std::log(rs.tail_mass(n)));
      }
    }
    write_svg(ctx.out / "tower-check.svg", "tail decay", "n", "log tail mass", {s});
  }
  return {0, std::string("tower-check: H1 ") + (h1.holds ? "holds" : "fails") + ", C = " + num(h3.C) + ", l0 = " +
                 std::to_string(h4.l0) + ", tail " + (tail ? to_string(tail->classification) : "too-small")};
}

inline Outcome cmd_cover(Context& ctx) {
  const json& a = ctx.cfg.analysis;
  check_keys(a, {"base", "alpha", "eps", "delta0", "depths"}, "analysis");
  require(!ctx.cfg.potentials.empty(), "cover needs one potential");
  const Interval J = get_base(a, *ctx.cfg.map);
  const double alpha = get_as<double>(need(a, "alpha", "analysis"), "alpha");
  const double eps = get_or<double>(a, "eps", INFINITY);
  const double delta0 = get_as<double>(need(a, "delta0", "analysis"), "delta0");
  std::vector<size_t> depths;
  for (double d : get_grid(need(a, "depths", "analysis"), "depths")) depths.push_back(static_cast<size_t>(std::llround(d)));
  const size_t maxn = *std::max_element(depths.begin(), depths.end());
  // The tower must reach max depth + l0 - 1; l0 is at most the H4 scan cap.
  const ReturnStructure probe = induce(*ctx.cfg.map, J, maxn);
  const size_t l0 = check_h4(probe).l0;
  const ReturnStructure rs = l0 > 1 ? induce(*ctx.cfg.map, J, maxn + l0 - 1) : probe;
  const HausdorffCoverReport r = hausdorff_cover_report(rs, ctx.cfg.potentials[0], alpha, eps, delta0, depths);
  std::vector<std::string> cols{"status", "n", "sum_all", "sum_filtered", "selected_s"};
  for (size_t s = 0; s < r.l0; ++s) cols.push_back("sum_star_s" + std::to_string(s));
  for (const char* c : {"ceiling", "trend", "monotone", "delta0", "C", "gamma0", "l0"}) cols.push_back(c);
  Table tab(cols);
  Series s{"sum over B_n", {}, {}};
  for (const auto& d : r.depths) {
    std::vector<std::string> row{"ok", std::to_string(d.n), num(d.sum_all), num(d.sum_filtered), std::to_string(d.selected_s)};
    for (double v : d.sum_star) row.push_back(num(v));
    for (const auto& v : {num(r.ceiling), r.trend, r.monotone, num(r.delta0), num(r.C), num(r.gamma0), std::to_string(r.l0)}) row.push_back(v);
    tab.add(row);
    s.x.push_back(static_cast<double>(d.n));
    s.y.push_back(d.sum_filtered);
  }
  tab.write(ctx.out / "cover.csv");
  if (ctx.cfg.plot) write_svg(ctx.out / "cover.svg", "cover sums", "n", "sum |A|^delta0", {s});
  return {0, "cover: trend " + r.trend + " (" + r.monotone + "), ceiling " + num(r.ceiling)};
}

inline Outcome cmd_moran(Context& ctx) {
  const json& a = ctx.cfg.analysis;
  check_keys(a, {"certificates", "schedule", "depth", "samples", "radii"}, "analysis");
  const IntervalMap& map = *ctx.cfg.map;
  const MarkovStructure markov = MarkovStructure::from_map(map);
  std::optional<ThermoSystem> sys;
  std::vector<HorseshoeCertificate> certs;
  const json& cj = need(a, "certificates", "analysis");
  require(cj.is_array() && !cj.empty(), "analysis.certificates must be a nonempty list");
  for (const auto& c : cj) {
    if (c.contains("words")) {
      check_keys(c, {"words"}, "analysis.certificates[]");
      certs.push_back(certificate_from_words(map, markov, ctx.cfg.potentials, get_as<std::vector<Word>>(c.at("words"), "words")));
    } else {
      check_keys(c, {"q", "t", "eps", "k"}, "analysis.certificates[]");
      if (!sys) sys.emplace(make_system(ctx));
      json request = json::object();
      if (c.contains("q")) request["q"] = c.at("q");
      if (c.contains("t")) request["t"] = c.at("t");
      certs.push_back(extract_from(*sys, request, get_as<double>(need(c, "eps", "certificate"), "eps"),
                                   get_as<size_t>(need(c, "k", "certificate"), "k"), ctx.threads, "analysis.certificates[]"));
    }
  }
  std::vector<ScheduleEntry> schedule;
  const json& sj = need(a, "schedule", "analysis");
  require(sj.is_array() && !sj.empty(), "analysis.schedule must be a nonempty list");
  for (const auto& e : sj) {
    check_keys(e, {"cert", "reps"}, "analysis.schedule[]");
    schedule.push_back({get_as<size_t>(need(e, "cert", "schedule entry"), "cert"), get_as<size_t>(need(e, "reps", "schedule entry"), "reps")});
  }
  const auto L = get_or<size_t>(a, "depth", 12);
  BuildOptions bo;
  bo.threads = ctx.threads;
  const MoranFamily fam = build_nested(map, markov, certs, schedule, L, bo);
  MassOptions mo;
  mo.samples = get_or<size_t>(a, "samples", 64);
  mo.seed = ctx.cfg.seed;
  mo.radii = get_or<std::vector<double>>(a, "radii", {});
  const MassDistributionReport rep = mass_distribution_bound(fam, mo);
  double box = std::nan("");
  try {
    box = box_dimension(fam.intervals(L)).value;
  } catch (const Error&) {
  }
  Table tab({"status", "radius", "generation", "min_ratio", "max_count", "bound", "box_dimension", "generation_size", "excluded"});
  Series s{"min log mu / log r", {}, {}};
  for (const auto& r : rep.radii) {
    tab.add({"ok", num(r.r), std::to_string(r.generation), num(r.min_ratio), num(r.max_count), num(rep.bound), num(box),
             std::to_string(fam.generations[L].size()), std::to_string(rep.excluded)});
    s.x.push_back(-std::log(r.r));
    s.y.push_back(r.min_ratio);
  }
  tab.write(ctx.out / "moran.csv");
  if (ctx.cfg.plot) write_svg(ctx.out / "moran.svg", "mass distribution", "log(1/r)", "log mu / log r", {s});
  return {0, "moran: depth " + std::to_string(L) + ", " + std::to_string(fam.generations[L].size()) + " intervals, bound " +
                 num(rep.bound) + ", box " + num(box)};
}

inline Outcome cmd_irregular(Context& ctx) {
  const json& a = ctx.cfg.analysis;
  check_keys(a, {"eps"}, "analysis");
  const ThermoSystem sys = make_system(ctx, 1);
  const auto eps = get_or<std::vector<double>>(a, "eps", {0.1, 0.03, 0.01});
  const auto rows = irregular_dimension_estimate(sys, eps);
  Table tab({"status", "eps", "bound", "mean1", "mean2", "d1", "d2"});
  for (const auto& r : rows) {
    tab.add({"ok", num(r.eps), num(r.bound), num(r.mu1.phi_mean[0]), num(r.mu2.phi_mean[0]), num(r.d1), num(r.d2)});
  }
  tab.write(ctx.out / "irregular.csv");
  return {0, "irregular: " + std::to_string(rows.size()) + " bound(s), last " + num(rows.empty() ? 0.0 : rows.back().bound)};
}

// ---------------------------------------------------------------- entry point

/// Runs one CLI invocation; args excludes the program name. Returns the exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Multifractal analysis of expanding interval maps"};
  std::string command, config_path, out_dir;
  unsigned threads = 1;
  uint64_t seed = 0;
  app.add_option("command", command, "analysis to run")->required()->check(CLI::IsMember(commands()));
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides config seed)");
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  std::filesystem::path target;
  try {
    std::ifstream f(config_path);
    if (!f) throw Error(ErrorCode::invalid_argument, "cannot read config '" + config_path + "'");
    json j;
    try {
      j = json::parse(f);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::invalid_argument, std::string("malformed config: ") + e.what());
    }
    Context ctx{parse_config(j, threads), {}, threads, err};
    if (seed_opt->count()) ctx.cfg.seed = seed;
    ctx.out = out_dir.empty() ? std::filesystem::path(ctx.cfg.out_dir) : std::filesystem::path(out_dir);
    std::filesystem::create_directories(ctx.out);
    target = ctx.out;
    Outcome o;
    if (command == "pressure") o = cmd_pressure(ctx);
    else if (command == "bowen") o = cmd_bowen(ctx);
    else if (command == "spectrum") o = cmd_spectrum(ctx);
    else if (command == "basin") o = cmd_basin(ctx);
    else if (command == "horseshoe") o = cmd_horseshoe(ctx);
    else if (command == "combine") o = cmd_combine(ctx);
    else if (command == "tower-check") o = cmd_tower(ctx);
    else if (command == "cover") o = cmd_cover(ctx);
    else if (command == "moran") o = cmd_moran(ctx);
    else o = cmd_irregular(ctx);
    out << o.summary << '\n';
    return o.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    if (e.is_validation()) return 2;
    // Numerical failures still leave a CSV naming the failure.
    if (!target.empty()) {
      std::string status = to_string(e.code());
      std::replace(status.begin(), status.end(), ' ', '-');
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      Table tab({"status", "message"});
      tab.add({status, msg});
      tab.write(target / (command + ".csv"));
    }
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace birkhoff::cli

#include "heatlab/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "heatlab/error.hpp"
#include "heatlab/kernels.hpp"
#include "heatlab/localization.hpp"
#include "heatlab/montecarlo.hpp"

namespace heatlab {

using json = nlohmann::ordered_json;

const std::vector<std::string> kCommands = {
    "kernel-eval",     "verify-main",          "verify-regimes", "verify-noncut",
    "verify-cumulant", "verify-varadhan",      "verify-localization",
    "verify-decomposition", "mc-exit",         "mc-density",     "suite"};

const std::vector<std::string> kPresets = {"paper-section-5", "incomplete-interval",
                                           "weighted-circle", "localization", "montecarlo-smoke"};

namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

bool is_unset(double v) { return std::isnan(v); }

template <class T>
T field(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: field '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown field '" + key + "'");
  }
}

ClosedSet parse_closed_set(const json& j) {
  if (!j.is_array()) throw ConfigError("config: A must be a list of points or [lo, hi] arcs");
  ClosedSet out;
  for (const auto& e : j) {
    if (e.is_number()) {
      out.push_back({e.get<double>(), e.get<double>()});
    } else if (e.is_array() && e.size() == 2) {
      out.push_back({e[0].get<double>(), e[1].get<double>()});
    } else {
      throw ConfigError("config: A entries must be numbers or [lo, hi] pairs");
    }
  }
  return out;
}

std::vector<PointPair> parse_pairs(const json& j) {
  if (!j.is_array()) throw ConfigError("config: K must be a list of [x, y] pairs");
  std::vector<PointPair> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw ConfigError("config: K entries must be [x, y] pairs");
    }
    out.push_back({e[0].get<double>(), e[1].get<double>()});
  }
  return out;
}

double optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return kUnset;
  if (!j.at(key).is_number()) throw ConfigError(std::string("config: field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

bool is_circle(const Manifold1D& m) { return m.is_periodic(); }

std::vector<PointPair> default_K(const RunConfig& c, const Manifold1D& m) {
  std::vector<PointPair> k;
  switch (m.kind()) {
    case ManifoldKind::Circle:
    case ManifoldKind::WeightedCircle:
      for (int i = 0; i <= 10; ++i) k.push_back({0.0, 0.05 * i * m.circumference()});
      break;
    case ManifoldKind::DirichletInterval: {
      const double ell = m.upper() - m.lower();
      for (int i = 0; i <= 4; ++i) {
        for (int j = 0; j <= 4; ++j) {
          k.push_back({m.lower() + (0.3 + 0.1 * i) * ell, m.lower() + (0.3 + 0.1 * j) * ell});
        }
      }
      break;
    }
    case ManifoldKind::HyperbolicRadial3:
      for (double r : {0.25, 0.5, 1.0, 2.0}) k.push_back({0.0, r});
      break;
    default:
      for (double d : {0.0, 0.25, 0.5, 1.0, 2.0}) k.push_back({0.0, d});
      break;
  }
  (void)c;
  return k;
}

std::vector<double> default_grid(const std::string& cmd, const Manifold1D& m) {
  if (cmd == "verify-main" || cmd == "verify-regimes") return geometric_grid(0.005, 1.0, 40);
  if (cmd == "verify-noncut") {
    return is_circle(m) ? geometric_grid(5e-4, 3e-3, 8) : geometric_grid(1e-3, 0.1, 12);
  }
  if (cmd == "verify-cumulant") return {0.02, 0.01, 0.005};
  if (cmd == "verify-varadhan" || cmd == "verify-localization") {
    return geometric_grid(1e-3, 0.1, 12);
  }
  if (cmd == "mc-exit" || cmd == "mc-density") return {0.1};
  return {0.05};
}

int default_order(const std::string& cmd) {
  if (cmd == "kernel-eval" || cmd == "verify-regimes" || cmd == "verify-noncut" ||
      cmd == "verify-cumulant") {
    return 2;
  }
  if (cmd == "verify-main") return 1;
  return 0;
}

double default_tolerance(const std::string& cmd) {
  if (cmd == "verify-cumulant") return 1e-4;
  if (cmd == "verify-decomposition") return 1e-8;
  if (cmd == "verify-main" || cmd == "verify-regimes") return kRefinementStability;
  if (cmd == "mc-exit") return kExitSigma;
  if (cmd == "mc-density") return kDensitySigma;
  return 1e-3;
}

PointPair default_xy(const std::string& cmd, const Manifold1D& m) {
  const double L = m.is_periodic() ? m.circumference() : 1.0;
  const bool circle = m.is_periodic();
  switch (m.kind()) {
    case ManifoldKind::DirichletInterval: {
      const double ell = m.upper() - m.lower();
      return {m.lower() + 0.4 * ell, m.lower() + 0.6 * ell};
    }
    case ManifoldKind::HyperbolicRadial3:
      return {0.0, 1.0};
    default:
      break;
  }
  if (cmd == "verify-cumulant") return {0.0, 0.5 * L};
  if (cmd == "verify-noncut") return {0.0, circle ? 0.25 * L : 0.7};
  if (cmd == "verify-localization") return {0.0, circle ? 0.0 : 1.0};
  if (cmd == "verify-decomposition") return {0.1, 0.2};
  if (cmd == "mc-exit" || cmd == "mc-density") {
    return {m.kind() == ManifoldKind::WeightedLine ? 0.5 : 0.0, 0.0};
  }
  return {0.0, circle ? 0.3 * L : 0.5};
}

Kernel make_kernel(const RunConfig& c, const Manifold1D& m) {
  if (c.backend == "auto") return Kernel::for_manifold(m, c.grid_size);
  return Kernel(m, parse_kernel_id(c.backend), c.grid_size);
}

json pair_json(const PointPair& p) { return json::array({number(p.first), number(p.second)}); }

ScanOptions scan_options(int threads) {
  ScanOptions o;
  o.threads = threads;
  return o;
}

void finish_scan(Report& rep, const VerificationReport& r) {
  append(rep, r);
  rep.summary = summary_of(r);
}

Report kernel_eval(const RunConfig& c, const Manifold1D& m) {
  const Kernel kernel = make_kernel(c, m);
  Report rep;
  bool pass = true;
  for (double t : c.t) {
    const Jet p = kernel.y_jet(t, c.x, c.y, c.order);
    const Jet l = kernel.y_log_jet(t, c.x, c.y, c.order);
    for (int k = 0; k <= c.order; ++k) {
      const bool ok_p = std::isfinite(p[k]) && std::isfinite(p.error(k)) && (k > 0 || p[0] >= 0.0);
      const bool ok_l = std::isfinite(l[k]) && std::isfinite(l.error(k));
      rep.results.push_back({"kernel-eval/p", {t, c.x, c.y, k}, p[k], p.error(k), ok_p});
      rep.results.push_back({"kernel-eval/log-p", {t, c.x, c.y, k}, l[k], l.error(k), ok_l});
      pass = pass && ok_p && ok_l;
    }
  }
  rep.summary["backend"] = kernel.describe();
  rep.summary["manifold"] = m.id();
  rep.summary["bound_column"] = "absolute error bound";
  rep.summary["pass"] = pass;
  return rep;
}

Report verify_main(const RunConfig& c, const Manifold1D& m, int threads, bool regimes) {
  const Kernel kernel = make_kernel(c, m);
  Report rep;
  const double eps = kKConditionEpsilon;
  const auto ok = check_K_condition(m, c.K, eps);
  bool k_ok = true;
  for (std::size_t i = 0; i < ok.size(); ++i) {
    rep.results.push_back(
        {"K-condition", {0.0, c.K[i].first, c.K[i].second, 0}, ok[i] ? 1.0 : 0.0, 1.0, ok[i]});
    k_ok = k_ok && ok[i];
  }
  if (!k_ok) {
    rep.summary["manifold"] = m.id();
    rep.summary["k_epsilon"] = eps;
    rep.summary["notes"] = json::array({"K violates the compact-closure condition; scan skipped"});
    rep.summary["pass"] = false;
    return rep;
  }
  ScanOptions o = scan_options(threads);
  const VerificationReport r = regimes ? regime_scan(kernel, c.K, c.order, c.t, c.split, o)
                                       : main_bound_scan(kernel, c.K, c.order, c.t, o);
  append(rep, r);
  rep.summary = summary_of(r);
  rep.summary["k_epsilon"] = eps;
  return rep;
}

Report verify_cumulant(const RunConfig& c, const Manifold1D& m, int threads) {
  const Kernel kernel = make_kernel(c, m);
  Report rep;
  const VerificationReport r =
      cumulant_vs_kernel(kernel, c.x, c.y, c.order, c.t, c.tolerance, scan_options(threads));
  finish_scan(rep, r);
  const CumulantLeading lead = cumulant_leading(m, c.x, c.y, c.order);
  rep.summary["limit"] = number(lead.value);
  rep.summary["limit_exact"] = lead.exact ? json(lead.exact->str()) : json(nullptr);
  rep.summary["cumulant"] = number(lead.cumulant.value);
  return rep;
}

Report verify_varadhan(const RunConfig& c, const Manifold1D& m, int threads) {
  const Kernel kernel = make_kernel(c, m);
  Report rep;
  const VerificationReport r =
      varadhan_limit_check(kernel, c.x, c.y, c.t, c.tolerance, c.order, scan_options(threads));
  finish_scan(rep, r);
  if (c.order == 0 && distance_to_cut_locus(m, c.x, c.y) >=
                          kCutBufferFraction * (m.is_periodic() ? m.circumference() : 0.0)) {
    const BenArousEstimate b = benarous_c0(kernel, c.x, c.y, c.t);
    rep.summary["benarous_c0"] = number(b.c0);
    rep.summary["benarous_slope"] = number(b.slope);
  }
  return rep;
}

Report verify_localization(const RunConfig& c, const Manifold1D& m) {
  const RateReport r = rate_through(m, c.A, c.x, c.y, c.t, c.tolerance);
  Report rep;
  const auto tail = small_time_tail(r.t);
  std::vector<bool> judged(r.t.size(), false);
  for (std::size_t i : tail) judged[i] = true;
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    ReportRow row{"EQN:BN-A/rate", {r.t[i], c.x, c.y, 0}, r.rate[i], std::nullopt, true};
    if (judged[i]) {
      row.bound = r.envelope[i] + r.tolerance;
      row.verdict = r.residual[i] <= r.tolerance;
    }
    rep.results.push_back(row);
  }
  rep.results.push_back({"EQN:BN-A/residual-at-t-min",
                         {r.t[tail.front()], c.x, c.y, 0},
                         std::abs(r.residual[tail.front()]),
                         r.tolerance,
                         std::abs(r.residual[tail.front()]) <= r.tolerance});
  rep.summary["manifold"] = m.id();
  rep.summary["distance_via"] = number(r.distance_via);
  rep.summary["c1"] = number(r.c1);
  rep.summary["c2"] = number(r.c2);
  rep.summary["tail_size"] = r.tail_size;
  rep.summary["truncated"] = r.truncated;
  rep.summary["tolerance"] = r.tolerance;
  rep.summary["pass"] = r.pass;
  return rep;
}

Report verify_decomp(const RunConfig& c, const Manifold1D& m) {
  const OpenArc u{c.U.at(0), c.U.at(1)};
  Report rep;
  bool pass = true;
  double worst = 0.0;
  for (double t : c.t) {
    const DecompositionResult d = verify_decomposition(m, u, t, c.x, c.y);
    const bool ok = d.residual <= c.tolerance;
    rep.results.push_back({"EQN:Decomp/residual", {t, c.x, c.y, 0}, d.residual, c.tolerance, ok});
    pass = pass && ok;
    worst = std::max(worst, d.residual);
  }
  rep.summary["manifold"] = m.id();
  rep.summary["max_residual"] = number(worst);
  rep.summary["tolerance"] = c.tolerance;
  rep.summary["pass"] = pass;
  return rep;
}

SimulationConfig sim_config(const RunConfig& c, const Manifold1D& m, int threads) {
  SimulationConfig s;
  s.manifold = m;
  s.x = c.x;
  s.t = c.t.at(0);
  s.dt = c.dt > 0.0 ? c.dt : s.t / 1000.0;
  s.paths = c.paths;
  s.seed = c.seed;
  s.bridge_correction = c.bridge;
  s.threads = threads;
  return s;
}

Report mc_exit(const RunConfig& c, const Manifold1D& m, int threads) {
  Report rep;
  if (c.search) {
    ExitOptions o;
    o.paths = c.paths;
    o.dt = c.dt;
    o.seed = c.seed;
    o.bridge_correction = c.bridge;
    o.threads = threads;
    std::vector<double> starts;
    for (const auto& p : c.K) starts.push_back(p.first);
    if (starts.empty()) starts.push_back(c.x);
    const ExitHorizon h = exit_horizon(m, starts, c.radius, c.t.at(0), o);
    for (std::size_t i = 0; i < h.upper.size(); ++i) {
      rep.results.push_back(
          {"LEM:Exit/upper", {h.horizon, starts[i], c.radius, 0}, h.upper[i], 0.5, h.upper[i] < 0.5});
    }
    rep.summary["horizon"] = number(h.horizon);
    rep.summary["found"] = h.found;
    rep.summary["evaluations"] = h.evaluations;
    rep.summary["pass"] = h.found;
    return rep;
  }
  const SimulationConfig s = sim_config(c, m, threads);
  const Estimate e = mc_exit_probability(s, c.radius);
  rep.summary["estimate"] = number(e.value);
  rep.summary["standard_error"] = number(e.standard_error);
  if (!m.has_drift()) {
    const ExitProbability series = exit_probability(m, c.x, c.radius, s.t);
    const double gap = std::abs(e.value - series.value);
    const double bound = c.tolerance * e.standard_error;
    rep.results.push_back({"LEM:Exit/mc-vs-series", {s.t, c.x, c.radius, 0}, gap, bound, gap <= bound});
    rep.summary["series"] = number(series.value);
    rep.summary["pass"] = gap <= bound;
  } else {
    rep.results.push_back({"LEM:Exit/mc", {s.t, c.x, c.radius, 0}, e.value, std::nullopt, true});
    rep.summary["pass"] = true;
  }
  return rep;
}

Report mc_density(const RunConfig& c, const Manifold1D& m, int threads) {
  const SimulationConfig s = sim_config(c, m, threads);
  BinSpec spec;
  spec.bins = c.bins;
  const DensityCheck d = mc_density_check(s, make_kernel(c, m), spec);
  Report rep;
  for (const auto& bin : d.bins) {
    rep.results.push_back({"mc-density/bin",
                           {s.t, c.x, 0.5 * (bin.lo + bin.hi), 0},
                           std::abs(bin.observed - bin.expected),
                           kDensitySigma * bin.standard_error + bin.allowance,
                           bin.pass});
  }
  if (m.kind() == ManifoldKind::DirichletInterval) {
    rep.results.push_back({"mc-density/survival",
                           {s.t, c.x, 0.0, 0},
                           std::abs(d.surviving_fraction - d.expected_survival),
                           kSurvivalSigma * d.survival_standard_error,
                           d.survival_pass});
    rep.summary["surviving_fraction"] = number(d.surviving_fraction);
    rep.summary["expected_survival"] = number(d.expected_survival);
  }
  rep.summary["max_standardized_deviation"] = number(d.max_standardized_deviation);
  rep.summary["pass"] = d.pass;
  return rep;
}

Report execute_impl(const RunConfig& c, int threads);

Report suite(const RunConfig& c, int threads) {
  Report rep;
  json entries = json::array();
  bool pass = true;
  for (const auto& entry : preset_entries(c.preset)) {
    const RunConfig rc = resolve(entry.config);
    const Report sub = execute_impl(rc, threads);
    for (const auto& row : sub.results) {
      ReportRow r = row;
      r.tag = entry.name + "/" + row.tag;
      rep.results.push_back(r);
    }
    json e;
    e["name"] = entry.name;
    e["config"] = to_json(rc);
    e["summary"] = sub.summary;
    e["pass"] = sub.pass();
    entries.push_back(e);
    pass = pass && sub.pass();
  }
  rep.summary["preset"] = c.preset;
  rep.summary["entries"] = entries;
  rep.summary["pass"] = pass;
  return rep;
}

Report execute_impl(const RunConfig& c, int threads) {
  if (c.command == "suite") return suite(c, threads);
  const Manifold1D m = build_manifold(c.manifold);
  Report rep;
  if (c.command == "kernel-eval") {
    rep = kernel_eval(c, m);
  } else if (c.command == "verify-main") {
    rep = verify_main(c, m, threads, false);
  } else if (c.command == "verify-regimes") {
    rep = verify_main(c, m, threads, true);
  } else if (c.command == "verify-noncut") {
    finish_scan(rep, noncut_check(make_kernel(c, m), c.x, c.y, c.order, c.t, scan_options(threads)));
  } else if (c.command == "verify-cumulant") {
    rep = verify_cumulant(c, m, threads);
  } else if (c.command == "verify-varadhan") {
    rep = verify_varadhan(c, m, threads);
  } else if (c.command == "verify-localization") {
    rep = verify_localization(c, m);
  } else if (c.command == "verify-decomposition") {
    rep = verify_decomp(c, m);
  } else if (c.command == "mc-exit") {
    rep = mc_exit(c, m, threads);
  } else if (c.command == "mc-density") {
    rep = mc_density(c, m, threads);
  } else {
    throw ConfigError("unknown command '" + c.command + "'");
  }
  return rep;
}

RunConfig entry(const std::string& command, ManifoldSpec m) {
  RunConfig c;
  c.command = command;
  c.manifold = std::move(m);
  return c;
}

ManifoldSpec circle_spec() { return {}; }
ManifoldSpec line_spec() {
  ManifoldSpec s;
  s.kind = "line";
  return s;
}
ManifoldSpec interval_spec() {
  ManifoldSpec s;
  s.kind = "interval";
  return s;
}
ManifoldSpec weighted_circle_spec() {
  ManifoldSpec s;
  s.kind = "weighted-circle";
  s.potential = {0.0, 0.3};
  return s;
}
ManifoldSpec weighted_line_spec() {
  ManifoldSpec s;
  s.kind = "weighted-line";
  s.potential = {0.0, 0.0, -1.0};
  return s;
}

}  // namespace

Manifold1D build_manifold(const ManifoldSpec& s) {
  Manifold1D m = Manifold1D::line();
  const ManifoldKind kind = parse_manifold_kind(s.kind);
  switch (kind) {
    case ManifoldKind::Circle:
      m = Manifold1D::circle(s.L);
      break;
    case ManifoldKind::Line:
      m = Manifold1D::line();
      break;
    case ManifoldKind::DirichletInterval:
      m = Manifold1D::dirichlet_interval(s.a, s.b);
      break;
    case ManifoldKind::WeightedLine:
      m = Manifold1D::weighted_line({s.potential});
      break;
    case ManifoldKind::WeightedCircle:
      m = Manifold1D::weighted_circle(s.L, {s.potential});
      break;
    case ManifoldKind::HyperbolicRadial3:
      m = Manifold1D::hyperbolic_radial3();
      break;
  }
  if (kind != ManifoldKind::WeightedLine && kind != ManifoldKind::WeightedCircle &&
      !s.potential.empty()) {
    bool zero = true;
    for (double v : s.potential) zero = zero && v == 0.0;
    if (!zero) throw ConfigError("config: a potential needs weighted-line or weighted-circle");
  }
  MetricDensity g;
  g.poly = s.metric;
  g.exp_rate = s.metric_rate;
  if (!g.is_flat()) m = m.with_metric(g);
  return m;
}

RunConfig parse_run_config(const json& j) {
  static const std::set<std::string> allowed = {
      "command", "manifold", "backend", "grid_size", "t",     "t_min",  "t_max",  "t_count",
      "K",       "x",        "y",       "order",     "tolerance", "seed", "paths", "dt",
      "radius",  "bins",     "split",   "A",         "U",     "bridge", "search", "preset",
      "out",     "format"};
  static const std::set<std::string> manifold_allowed = {"kind",      "L",      "a", "b",
                                                         "potential", "metric", "metric_rate"};
  reject_unknown(j, allowed, "config");
  RunConfig c;
  c.command = field<std::string>(j, "command", "");
  if (j.contains("manifold")) {
    const json& mj = j.at("manifold");
    reject_unknown(mj, manifold_allowed, "config.manifold");
    c.manifold.kind = field<std::string>(mj, "kind", c.manifold.kind);
    c.manifold.L = field<double>(mj, "L", c.manifold.L);
    c.manifold.a = field<double>(mj, "a", c.manifold.a);
    c.manifold.b = field<double>(mj, "b", c.manifold.b);
    c.manifold.potential = field<std::vector<double>>(mj, "potential", {});
    c.manifold.metric = field<std::vector<double>>(mj, "metric", {1.0});
    c.manifold.metric_rate = field<double>(mj, "metric_rate", 0.0);
  }
  c.backend = field<std::string>(j, "backend", c.backend);
  c.grid_size = field<int>(j, "grid_size", c.grid_size);
  c.t = field<std::vector<double>>(j, "t", {});
  c.t_min = field<double>(j, "t_min", 0.0);
  c.t_max = field<double>(j, "t_max", 0.0);
  c.t_count = field<int>(j, "t_count", 0);
  if (j.contains("K")) c.K = parse_pairs(j.at("K"));
  c.x = optional_number(j, "x");
  c.y = optional_number(j, "y");
  c.order = field<int>(j, "order", -1);
  c.tolerance = field<double>(j, "tolerance", 0.0);
  c.seed = field<std::uint64_t>(j, "seed", c.seed);
  c.paths = field<std::size_t>(j, "paths", c.paths);
  c.dt = field<double>(j, "dt", 0.0);
  c.radius = field<double>(j, "radius", c.radius);
  c.bins = field<int>(j, "bins", c.bins);
  c.split = field<double>(j, "split", c.split);
  if (j.contains("A")) c.A = parse_closed_set(j.at("A"));
  c.U = field<std::vector<double>>(j, "U", {});
  c.bridge = field<bool>(j, "bridge", false);
  c.search = field<bool>(j, "search", false);
  c.preset = field<std::string>(j, "preset", "");
  c.out = field<std::string>(j, "out", "");
  c.format = field<std::string>(j, "format", c.format);
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  if (c.command == "suite") {
    j["preset"] = c.preset;
    j["out"] = c.out;
    j["format"] = c.format;
    return j;
  }
  json m;
  m["kind"] = c.manifold.kind;
  m["L"] = c.manifold.L;
  m["a"] = c.manifold.a;
  m["b"] = c.manifold.b;
  m["potential"] = c.manifold.potential;
  m["metric"] = c.manifold.metric;
  m["metric_rate"] = c.manifold.metric_rate;
  j["manifold"] = m;
  j["backend"] = c.backend;
  j["grid_size"] = c.grid_size;
  j["t"] = c.t;
  json k = json::array();
  for (const auto& p : c.K) k.push_back(pair_json(p));
  j["K"] = k;
  j["x"] = number(c.x);
  j["y"] = number(c.y);
  j["order"] = c.order;
  j["tolerance"] = c.tolerance;
  j["seed"] = c.seed;
  j["paths"] = c.paths;
  j["dt"] = c.dt;
  j["radius"] = c.radius;
  j["bins"] = c.bins;
  j["split"] = c.split;
  json a = json::array();
  for (const auto& arc : c.A) a.push_back(json::array({arc.lo, arc.hi}));
  j["A"] = a;
  j["U"] = c.U;
  j["bridge"] = c.bridge;
  j["search"] = c.search;
  j["out"] = c.out;
  j["format"] = c.format;
  return j;
}

RunConfig resolve(RunConfig c) {
  if (std::find(kCommands.begin(), kCommands.end(), c.command) == kCommands.end()) {
    throw ConfigError("unknown command '" + c.command + "'");
  }
  if (c.format != "json" && c.format != "csv") throw ConfigError("format must be json or csv");
  if (c.command == "suite") {
    if (std::find(kPresets.begin(), kPresets.end(), c.preset) == kPresets.end()) {
      throw ConfigError("unknown preset '" + c.preset + "'");
    }
    return c;
  }
  if (c.backend != "auto") parse_kernel_id(c.backend);
  const Manifold1D m = build_manifold(c.manifold);
  if (c.t.empty()) {
    if (c.t_count > 0) {
      c.t = geometric_grid(c.t_min, c.t_max, c.t_count);
    } else {
      c.t = default_grid(c.command, m);
    }
  }
  c.t_min = 0.0;
  c.t_max = 0.0;
  c.t_count = 0;
  const PointPair xy = default_xy(c.command, m);
  if (is_unset(c.x)) c.x = xy.first;
  if (is_unset(c.y)) c.y = xy.second;
  if (c.order < 0) c.order = default_order(c.command);
  if (!(c.tolerance > 0.0)) c.tolerance = default_tolerance(c.command);
  if (c.K.empty() && (c.command == "verify-main" || c.command == "verify-regimes")) {
    c.K = default_K(c, m);
  }
  if (c.A.empty() && c.command == "verify-localization") {
    const double L = m.is_periodic() ? m.circumference() : 1.0;
    c.A = m.is_periodic() ? ClosedSet{{0.5 * L, 0.5 * L}} : ClosedSet{{2.0, 2.0}};
  }
  if (c.U.empty() && c.command == "verify-decomposition") {
    c.U = m.kind() == ManifoldKind::DirichletInterval ? std::vector<double>{m.lower(), m.upper()}
                                                      : std::vector<double>{-1.0, 1.0};
  }
  if (c.command == "verify-decomposition" && c.U.size() != 2) {
    throw ConfigError("config: U must be [lo, hi]");
  }
  return c;
}

std::vector<SuiteEntry> preset_entries(const std::string& preset) {
  std::vector<SuiteEntry> out;
  if (preset == "paper-section-5") {
    for (int n : {2, 3, 4}) {
      RunConfig c = entry("verify-cumulant", circle_spec());
      c.order = n;
      c.x = 0.0;
      c.y = 0.5;
      out.push_back({"cumulant-N" + std::to_string(n), c});
    }
    RunConfig v = entry("verify-varadhan", circle_spec());
    v.x = 0.0;
    v.y = 0.3;
    out.push_back({"varadhan", v});
    RunConfig nc = entry("verify-noncut", circle_spec());
    nc.x = 0.0;
    nc.y = 0.25;
    out.push_back({"noncut", nc});
    RunConfig mb = entry("verify-main", circle_spec());
    mb.order = 2;
    out.push_back({"main-N2", mb});
  } else if (preset == "incomplete-interval") {
    for (int n : {1, 2}) {
      RunConfig c = entry("verify-main", interval_spec());
      c.order = n;
      out.push_back({"main-N" + std::to_string(n), c});
    }
  } else if (preset == "weighted-circle") {
    RunConfig k = entry("kernel-eval", weighted_circle_spec());
    k.t = {0.05, 0.2};
    k.x = 0.0;
    k.y = 0.3;
    out.push_back({"kernel", k});
    for (int n : {1, 2}) {
      RunConfig c = entry("verify-main", weighted_circle_spec());
      c.order = n;
      c.t = geometric_grid(0.01, 1.0, 12);
      out.push_back({"main-N" + std::to_string(n), c});
    }
  } else if (preset == "localization") {
    RunConfig a = entry("verify-localization", circle_spec());
    a.A = {{0.5, 0.5}};
    a.x = 0.0;
    a.y = 0.0;
    out.push_back({"rate-circle-antipode", a});
    RunConfig g = entry("verify-localization", circle_spec());
    g.A = {{0.1, 0.2}};
    g.x = 0.0;
    g.y = 0.3;
    out.push_back({"rate-circle-geodesic", g});
    RunConfig l = entry("verify-localization", line_spec());
    l.A = {{2.0, 2.0}};
    l.x = 0.0;
    l.y = 1.0;
    out.push_back({"rate-line", l});
    RunConfig d = entry("verify-decomposition", line_spec());
    d.U = {-1.0, 1.0};
    d.x = 0.1;
    d.y = 0.2;
    d.t = {0.005, 0.05};
    out.push_back({"decomposition", d});
  } else if (preset == "montecarlo-smoke") {
    RunConfig e = entry("mc-exit", line_spec());
    e.t = {0.1};
    e.radius = 1.0;
    e.paths = 20000;
    e.dt = 1e-4;
    e.seed = 20240;
    e.bridge = true;
    out.push_back({"exit-line", e});
    RunConfig d = entry("mc-density", circle_spec());
    d.t = {0.1};
    d.paths = 20000;
    d.dt = 2e-4;
    d.seed = 20241;
    out.push_back({"density-circle", d});
    RunConfig w = entry("mc-density", weighted_line_spec());
    w.t = {0.2};
    w.x = 0.5;
    w.paths = 20000;
    w.dt = 4e-4;
    w.seed = 20242;
    out.push_back({"density-weighted-line", w});
    RunConfig i = entry("mc-density", interval_spec());
    i.t = {0.05};
    i.x = 0.4;
    i.paths = 20000;
    i.dt = 2e-4;
    i.seed = 20243;
    i.bridge = true;
    out.push_back({"density-interval", i});
  } else {
    throw ConfigError("unknown preset '" + preset + "'");
  }
  return out;
}

Report execute(const RunConfig& config, int threads) {
  const RunConfig c = resolve(config);
  Report rep = execute_impl(c, threads);
  rep.config = to_json(c);
  rep.canonicalize();
  return rep;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Numerical:
    case ErrorKind::Precision:
    case ErrorKind::StepSize:
      return 3;
    default:
      return 2;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"heatlab: heat-kernel jets, log-derivative bounds and small-time asymptotics on "
               "model 1-D manifolds"};
  app.set_version_flag("--version", std::string(kToolVersion));
  RunConfig c;
  std::string config_path;
  std::string k_json;
  std::string a_json;
  std::string u_json;
  int threads = 0;
  double x = 0.0;
  double y = 0.0;

  app.add_option("command", c.command, "Command to run")
      ->required()
      ->check(CLI::IsMember(kCommands));
  auto* o_config = app.add_option("--config", config_path,
                                  "RunConfig JSON file; flags given explicitly override it");
  auto* o_manifold =
      app.add_option("--manifold", c.manifold.kind,
                     "circle | line | interval | weighted-line | weighted-circle | h3")
          ->capture_default_str();
  auto* o_L = app.add_option("--L", c.manifold.L, "Circumference of circle variants")
                  ->capture_default_str();
  auto* o_a = app.add_option("--a", c.manifold.a, "Interval lower end")->capture_default_str();
  auto* o_b = app.add_option("--b", c.manifold.b, "Interval upper end")->capture_default_str();
  auto* o_pot = app.add_option("--potential", c.manifold.potential,
                               "Potential coefficients, comma separated (polynomial on lines, "
                               "[c0, cos1, sin1, ...] on circles)")
                    ->delimiter(',');
  auto* o_metric = app.add_option("--metric", c.manifold.metric,
                                  "Metric density polynomial coefficients, comma separated")
                       ->delimiter(',');
  auto* o_rate = app.add_option("--metric-rate", c.manifold.metric_rate,
                                "Exponential rate of the metric density")
                     ->capture_default_str();
  auto* o_backend = app.add_option("--backend", c.backend,
                                   "auto | theta | gauss | interval | mehler | h3 | spectral")
                        ->capture_default_str();
  auto* o_grid = app.add_option("--grid-size", c.grid_size, "Spectral grid size (power of two)")
                     ->capture_default_str();
  auto* o_t = app.add_option("--t", c.t, "Explicit time list, comma separated")->delimiter(',');
  auto* o_tmin = app.add_option("--t-min", c.t_min, "Geometric grid lower end");
  auto* o_tmax = app.add_option("--t-max", c.t_max, "Geometric grid upper end");
  auto* o_tcount = app.add_option("--t-count", c.t_count, "Geometric grid size");
  auto* o_K = app.add_option("--K", k_json, "Point pairs as JSON, e.g. [[0,0.5],[0,0.25]]");
  auto* o_x = app.add_option("--x", x, "Source point (default per command)");
  auto* o_y = app.add_option("--y", y, "Target point (default per command)");
  auto* o_order = app.add_option("--order", c.order, "Derivative order N (default per command)");
  auto* o_tol = app.add_option("--tolerance", c.tolerance, "Tolerance (default per command)");
  auto* o_seed = app.add_option("--seed", c.seed, "Monte Carlo seed")->capture_default_str();
  auto* o_paths = app.add_option("--paths", c.paths, "Monte Carlo path count")->capture_default_str();
  auto* o_dt = app.add_option("--dt", c.dt, "Euler step (0 selects t/1000)")->capture_default_str();
  auto* o_radius = app.add_option("--radius", c.radius, "Exit-ball radius")->capture_default_str();
  auto* o_bins = app.add_option("--bins", c.bins, "Histogram bins")->capture_default_str();
  auto* o_split = app.add_option("--split", c.split, "Regime split distance c")->capture_default_str();
  auto* o_A = app.add_option("--A", a_json, "Closed set as JSON: points and [lo,hi] arcs");
  auto* o_U = app.add_option("--U", u_json, "Open set U as JSON [lo,hi]");
  auto* o_bridge = app.add_flag("--bridge", c.bridge, "Enable the Brownian-bridge exit correction");
  auto* o_search = app.add_flag("--search", c.search,
                                "mc-exit: search the largest T with P + 3 SE < 1/2 over K starts");
  auto* o_preset = app.add_option("--preset", c.preset, "Suite preset")
                       ->check(CLI::IsMember(kPresets));
  auto* o_out = app.add_option("--out", c.out, "Report path (stdout when empty)");
  auto* o_format = app.add_option("--format", c.format, "json | csv")
                       ->check(CLI::IsMember({"json", "csv"}))
                       ->capture_default_str();
  app.add_option("--threads", threads,
                 "Worker cap (0: HEATLAB_THREADS or hardware); never changes results");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig parsed = c;
    if (o_config->count() > 0) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot read config file '" + config_path + "'");
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config file: ") + e.what());
      }
      parsed = parse_run_config(j);
      if (!parsed.command.empty() && parsed.command != c.command) {
        throw ConfigError("config command '" + parsed.command + "' does not match '" + c.command +
                          "'");
      }
      parsed.command = c.command;
      auto take = [&](CLI::Option* opt, auto& dst, const auto& src) {
        if (opt->count() > 0) dst = src;
      };
      take(o_manifold, parsed.manifold.kind, c.manifold.kind);
      take(o_L, parsed.manifold.L, c.manifold.L);
      take(o_a, parsed.manifold.a, c.manifold.a);
      take(o_b, parsed.manifold.b, c.manifold.b);
      take(o_pot, parsed.manifold.potential, c.manifold.potential);
      take(o_metric, parsed.manifold.metric, c.manifold.metric);
      take(o_rate, parsed.manifold.metric_rate, c.manifold.metric_rate);
      take(o_backend, parsed.backend, c.backend);
      take(o_grid, parsed.grid_size, c.grid_size);
      take(o_t, parsed.t, c.t);
      take(o_tmin, parsed.t_min, c.t_min);
      take(o_tmax, parsed.t_max, c.t_max);
      take(o_tcount, parsed.t_count, c.t_count);
      take(o_order, parsed.order, c.order);
      take(o_tol, parsed.tolerance, c.tolerance);
      take(o_seed, parsed.seed, c.seed);
      take(o_paths, parsed.paths, c.paths);
      take(o_dt, parsed.dt, c.dt);
      take(o_radius, parsed.radius, c.radius);
      take(o_bins, parsed.bins, c.bins);
      take(o_split, parsed.split, c.split);
      take(o_bridge, parsed.bridge, c.bridge);
      take(o_search, parsed.search, c.search);
      take(o_preset, parsed.preset, c.preset);
      take(o_out, parsed.out, c.out);
      take(o_format, parsed.format, c.format);
    }
    if (o_x->count() > 0) parsed.x = x;
    if (o_y->count() > 0) parsed.y = y;
    if (o_t->count() > 0 || o_tcount->count() > 0) {
      if (o_t->count() == 0) parsed.t.clear();
    }
    auto parse_json_flag = [](const std::string& text, const char* what) {
      try {
        return json::parse(text);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("--") + what + ": " + e.what());
      }
    };
    if (o_K->count() > 0) parsed.K = parse_pairs(parse_json_flag(k_json, "K"));
    if (o_A->count() > 0) parsed.A = parse_closed_set(parse_json_flag(a_json, "A"));
    if (o_U->count() > 0) {
      const json u = parse_json_flag(u_json, "U");
      if (!u.is_array() || u.size() != 2) throw ConfigError("--U must be [lo, hi]");
      parsed.U = {u[0].get<double>(), u[1].get<double>()};
    }
    if (parsed.command == "suite" && parsed.preset.empty()) {
      throw ConfigError("suite needs --preset");
    }

    const Report rep = execute(parsed, threads);
    const std::string text = parsed.format == "csv" ? to_csv(rep) : to_json_string(rep);
    if (parsed.out.empty()) {
      out << text;
    } else {
      std::ofstream file(parsed.out, std::ios::binary);
      if (!file) throw ConfigError("cannot write '" + parsed.out + "'");
      file << text;
    }
    return rep.pass() ? 0 : 1;
  } catch (const Error& e) {
    err << "heatlab: " << to_string(e.kind()) << " error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    err << "heatlab: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "heatlab: numerical failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace heatlab

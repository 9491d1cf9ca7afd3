#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wass/convergence.hpp"
#include "wass/functionals.hpp"
#include "wass/io.hpp"
#include "wass/random.hpp"
#include "wass/schemes.hpp"
#include "wass/sequences.hpp"
#include "wass/transport.hpp"

namespace wass::experiment {

using io::Json;
namespace fs = std::filesystem;

/// Malformed config: the message names the offending field (or the parse position).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system failure while reading a config or writing artifacts.
class IOError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kPass = 0, kVerdictFailure = 1, kConfigError = 2 };

inline const std::vector<std::string>& kinds() {
  static const std::vector<std::string> k{"distance", "jko", "evi", "fixed_point", "opial", "sw_convergence"};
  return k;
}

struct Check {
  std::string name;
  std::string tag;
  double residual;
  double tolerance;
  bool pass;
};

struct Verdict {
  std::string kind;
  std::vector<Check> checks;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }

  /// Records residual <= tolerance. NaN residuals fail.
  void add(std::string name, std::string tag, double residual, double tolerance) {
    checks.push_back({std::move(name), std::move(tag), residual, tolerance, residual <= tolerance});
  }

  /// An expectation about a yes/no outcome: residual 0 when met, 1 when not, tolerance 0.
  void expect(std::string name, std::string tag, bool met) {
    add(std::move(name), std::move(tag), met ? 0.0 : 1.0, 0.0);
  }
};

inline Json to_json(const Verdict& v) {
  Json checks = Json::array();
  for (const auto& c : v.checks)
    checks.push_back(Json{{"name", c.name},
                          {"tag", c.tag},
                          {"residual", io::number(c.residual)},
                          {"tolerance", io::number(c.tolerance)},
                          {"pass", c.pass}});
  return Json{{"kind", v.kind}, {"pass", v.pass()}, {"checks", checks}};
}

struct RunResult {
  Verdict verdict;
  Json manifest;
  Json report;
  std::string trace_csv;
};

namespace detail {

// Typed access into the config with the dotted field path carried along for
// error messages.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const Json& json() const { return *j_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("field '" + (path_.empty() ? std::string("<root>") : path_) + "': " + what);
  }

  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  Node at(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    auto it = j_->find(key);
    if (it == j_->end()) Node(*j_, child_path(key)).fail("required field is missing");
    return Node(*it, child_path(key));
  }

  std::optional<Node> opt(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return at(key);
  }

  std::vector<Node> items() const {
    if (!j_->is_array()) fail("expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < j_->size(); ++i) out.emplace_back((*j_)[i], path_ + "[" + std::to_string(i) + "]");
    return out;
  }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    const double v = j_->get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  double positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("expected a positive number");
    return v;
  }

  std::uint64_t uint() const {
    if (!j_->is_number_integer() || (j_->is_number_integer() && !j_->is_number_unsigned() && j_->get<long long>() < 0))
      fail("expected a non-negative integer");
    return j_->get<std::uint64_t>();
  }

  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }

  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& n : items()) out.push_back(n.number());
    return out;
  }

  Point point() const {
    auto v = numbers();
    if (v.empty()) fail("expected a non-empty coordinate array");
    return Point(std::move(v));
  }

  double number_or(const std::string& key, double fallback) const {
    auto n = opt(key);
    return n ? n->number() : fallback;
  }

  std::uint64_t uint_or(const std::string& key, std::uint64_t fallback) const {
    auto n = opt(key);
    return n ? n->uint() : fallback;
  }

 private:
  const Json* j_;
  std::string path_;
};

// Everything a run resolves from the config beyond the config itself: the
// tolerances actually used and the seeds consumed. Both go to the manifest.
struct Context {
  double tolerance_scale = 1.0;
  Json tolerances = Json::object();
  std::vector<std::uint64_t> seeds;
  const Json* tolerance_config = nullptr;

  double tolerance(const std::string& name, double fallback) {
    double base = fallback;
    if (tolerance_config && tolerance_config->contains(name)) {
      const Node n((*tolerance_config)[name], "tolerances." + name);
      base = n.number();
      if (base < 0.0) n.fail("tolerance must be non-negative");
    }
    const double v = base * tolerance_scale;
    tolerances[name] = v;
    return v;
  }

  std::optional<double> optional_tolerance(const std::string& name) {
    if (!tolerance_config || !tolerance_config->contains(name)) return std::nullopt;
    return tolerance(name, 0.0);
  }

  std::uint64_t seed(const Node& n) {
    const auto s = n.uint();
    seeds.push_back(s);
    return s;
  }
};

template <class F>
auto guarded(const Node& n, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    n.fail(e.what());
  }
}

inline std::vector<Point> grid_points(const Node& n) {
  std::vector<std::uint64_t> dims;
  for (const auto& d : n.at("dims").items()) {
    const auto v = d.uint();
    if (v == 0) d.fail("grid sizes must be positive");
    dims.push_back(v);
  }
  if (dims.empty()) n.at("dims").fail("grid needs at least one dimension");
  std::vector<double> spacing;
  const Node sp = n.at("spacing");
  if (sp.json().is_array()) {
    spacing = sp.numbers();
    if (spacing.size() != dims.size()) sp.fail("needs one spacing per dimension");
  } else {
    spacing.assign(dims.size(), sp.number());
  }
  for (double h : spacing)
    if (!(h > 0.0)) sp.fail("spacing must be positive");
  std::vector<double> origin(dims.size(), 0.0);
  if (auto o = n.opt("origin")) {
    origin = o->numbers();
    if (origin.size() != dims.size()) o->fail("needs one coordinate per dimension");
  }
  std::vector<Point> out;
  std::vector<std::uint64_t> idx(dims.size(), 0);
  for (;;) {
    Point p = Point::zeros(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) p[k] = origin[k] + spacing[k] * static_cast<double>(idx[k]);
    out.push_back(std::move(p));
    std::size_t k = dims.size();
    while (k > 0 && ++idx[k - 1] == dims[k - 1]) idx[--k] = 0;
    if (k == 0) break;
  }
  return out;
}

inline std::vector<double> weights_or_uniform(const Node& n, std::size_t count) {
  if (auto w = n.opt("weights")) {
    auto v = w->numbers();
    if (v.size() != count) w->fail("expected " + std::to_string(count) + " weights");
    return v;
  }
  return std::vector<double>(count, 1.0 / static_cast<double>(count));
}

inline DiscreteMeasure measure(const Node& n, Context& ctx) {
  const std::string type = n.at("type").string();
  return guarded(n, [&]() -> DiscreteMeasure {
    if (type == "explicit") {
      std::vector<Point> pts;
      for (const auto& p : n.at("points").items()) pts.push_back(p.point());
      if (pts.empty()) n.at("points").fail("expected at least one atom");
      auto w = weights_or_uniform(n, pts.size());
      return new_discrete(std::move(pts), std::move(w));
    }
    if (type == "dirac") return DiscreteMeasure::dirac(n.at("point").point());
    if (type == "seeded_random") {
      const auto atoms = n.at("n_atoms").uint();
      const auto dim = n.at("dim").uint();
      if (atoms == 0) n.at("n_atoms").fail("expected at least one atom");
      if (dim == 0) n.at("dim").fail("expected dimension >= 1");
      const double radius = n.at("radius").positive();
      Rng rng(ctx.seed(n.at("seed")));
      return wass::detail::random_limit(rng, atoms, dim, radius);
    }
    if (type == "grid") {
      auto pts = grid_points(n);
      auto w = weights_or_uniform(n, pts.size());
      return new_discrete(std::move(pts), std::move(w));
    }
    n.at("type").fail("unknown measure type '" + type + "'");
  });
}

inline Functional functional(const Node& n, Context& ctx) {
  const std::string kind = n.at("kind").string();
  const Json empty = Json::object();
  const Node params = n.has("params") ? n.at("params") : Node(empty, n.child_path("params"));
  auto opt_point = [&](const char* key) { return params.has(key) ? params.at(key).point() : Point{}; };
  if (kind == "potential") {
    const std::string name = n.at("name").string();
    if (name == "quadratic") return quadratic_potential(opt_point("a"));
    if (name == "abs") return abs_potential(opt_point("a"));
    if (name == "linear") return linear_potential(params.at("c").point());
    if (name == "zero") return zero_potential();
    if (name == "concave_test") return concave_test_potential();
    n.at("name").fail("unknown potential '" + name + "'");
  }
  if (kind == "interaction") {
    const std::string name = n.has("name") ? n.at("name").string() : "quadratic";
    if (name != "quadratic") n.at("name").fail("unknown interaction '" + name + "'");
    return guarded(n, [&] { return quadratic_interaction(params.number_or("scale", 1.0)); });
  }
  if (kind == "quadratic_to_target") return quadratic_to_target(measure(params.at("target"), ctx));
  if (kind == "grid_entropy") return guarded(n, [&] { return grid_entropy(grid_points(params.at("grid"))); });
  n.at("kind").fail("unknown functional kind '" + kind + "'");
}

inline std::vector<NamedMeasure> probes(const Node& root, Context& ctx, bool required) {
  std::vector<NamedMeasure> out;
  auto list = root.opt("probes");
  if (!list) {
    if (required) root.at("probes");
    return out;
  }
  for (const auto& p : list->items()) {
    std::string name = p.at("name").string();
    if (name.empty() || name.find_first_of(",\n\"") != std::string::npos) p.at("name").fail("invalid probe name");
    for (const auto& q : out)
      if (q.name == name) p.at("name").fail("duplicate probe name '" + name + "'");
    out.push_back({std::move(name), measure(p.at("measure"), ctx)});
  }
  if (required && out.empty()) list->fail("expected at least one probe");
  return out;
}

inline std::vector<double> column(std::size_t rows, double start = 0.0, double step = 1.0) {
  std::vector<double> v(rows);
  for (std::size_t i = 0; i < rows; ++i) v[i] = start + step * static_cast<double>(i);
  return v;
}

inline double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

inline double max_increase(const std::vector<double>& v) {
  double m = 0.0;
  for (std::size_t k = 1; k < v.size(); ++k) m = std::max(m, v[k] - v[k - 1]);
  return m;
}

inline void check_final(const Node& root, Context& ctx, Verdict& v, const DiscreteMeasure& last, const char* tag) {
  auto expect = root.opt("expect");
  if (!expect || !expect->has("final_measure")) return;
  const auto target = measure(expect->at("final_measure"), ctx);
  if (target.dim() != last.dim()) expect->at("final_measure").fail("dimension differs from the run");
  v.add("final_measure", tag, w2(last, target), ctx.tolerance("final_measure", 1e-9));
}

// ---- kinds ----

inline void run_distance(const Node& root, Context& ctx, RunResult& r) {
  const auto mu = measure(root.at("mu"), ctx);
  const auto nu = measure(root.at("nu"), ctx);
  if (mu.dim() != nu.dim()) root.at("nu").fail("dimension differs from mu");
  const auto sol = solve_ot(mu, nu);
  const auto max_cycle = root.uint_or("max_cycle", 4);
  if (max_cycle < 2) root.at("max_cycle").fail("must be >= 2");
  const auto cm = is_cyclically_monotone(sol.plan, max_cycle);

  auto& v = r.verdict;
  if (auto expect = root.opt("expect"); expect && expect->has("w2"))
    v.add("w2", "Eq.53", std::abs(sol.w2() - expect->at("w2").number()), ctx.tolerance("w2", 1e-9));
  v.add("duality_gap", "Eq.53", std::abs(sol.duality_gap), ctx.tolerance("duality_gap", 1e-7));
  v.add("cyclical_monotonicity", "Eq.11", std::max(0.0, -cm.min_cycle_sum),
        ctx.tolerance("cyclical_monotonicity", 1e-9));

  io::Table t;
  t.add("k", {0.0});
  t.add("w2", {sol.w2()});
  t.add("squared_cost", {sol.squared_cost});
  t.add("duality_gap", {sol.duality_gap});
  r.trace_csv = t.str();
  r.report = Json{{"w2", sol.w2()}, {"squared_cost", sol.squared_cost}, {"duality_gap", sol.duality_gap},
                  {"plan", io::to_json(sol.plan)}};
}

inline void run_jko(const Node& root, Context& ctx, RunResult& r) {
  const auto f = functional(root.at("functional"), ctx);
  const auto mu0 = measure(root.at("initial"), ctx);
  const Node scheme = root.at("scheme");
  const double tau = scheme.at("tau").positive();
  const auto steps = scheme.at("K").uint();
  if (steps == 0) scheme.at("K").fail("expected at least one step");
  JKOMode mode = JKOMode::lagrangian;
  if (auto m = scheme.opt("mode")) {
    const auto s = m->string();
    if (s == "eulerian") mode = JKOMode::eulerian;
    else if (s != "lagrangian") m->fail("expected 'lagrangian' or 'eulerian'");
  }
  SolverParams params;
  params.epsilon = scheme.has("epsilon") ? scheme.at("epsilon").positive() : params.epsilon;
  params.max_iterations = scheme.uint_or("max_iterations", params.max_iterations);
  if (auto g = scheme.opt("grid")) params.grid = guarded(*g, [&] { return grid_points(*g); });
  const auto pr = probes(root, ctx, false);
  std::optional<std::size_t> minimizer;
  if (auto m = root.opt("minimizer")) {
    const auto name = m->string();
    for (std::size_t p = 0; p < pr.size(); ++p)
      if (pr[p].name == name) minimizer = p;
    if (!minimizer) m->fail("no probe named '" + name + "'");
  }

  const auto tr = guarded(root, [&] { return jko_run(f, mu0, tau, steps, mode, pr, params); });

  auto& v = r.verdict;
  v.add("eq60", "Eq.60", max_of(tr.residual_eq60), ctx.tolerance("eq60", params.epsilon));
  if (!pr.empty()) v.add("perconv", "Eq.perconvPPA", max_of(tr.residual_perconv), ctx.tolerance("perconv", params.epsilon));
  v.add("minimality", "Eq.51bis", max_of(tr.residual_minimality), ctx.tolerance("minimality", params.epsilon));
  v.add("energy_decrease", "Eq.51bis", max_increase(tr.energies), ctx.tolerance("energy_decrease", params.epsilon));
  if (minimizer) v.add("eq62", "Eq.62", max_increase(tr.w2_to_probe[*minimizer]), ctx.tolerance("monotone", 1e-7));
  check_final(root, ctx, v, tr.measures.back(), "JKO");

  const std::size_t rows = tr.measures.size();
  io::Table t;
  t.add("k", column(rows));
  t.add("t", column(rows, 0.0, tau));
  t.add("energy", tr.energies);
  t.add("step_w2", tr.step_w2);
  for (std::size_t p = 0; p < pr.size(); ++p) t.add("w2_to_probe_" + pr[p].name, tr.w2_to_probe[p]);
  t.add("residual_eq60", tr.residual_eq60);
  if (!pr.empty()) t.add("residual_perconv", tr.residual_perconv);
  r.trace_csv = t.str();
  r.report = Json{{"mode", to_string(mode)}, {"final_measure", io::to_json(tr.measures.back())},
                  {"final_energy", tr.energies.back()}, {"gaps", tr.gaps}};
}

inline void run_evi(const Node& root, Context& ctx, RunResult& r) {
  const auto f = functional(root.at("functional"), ctx);
  const auto mu0 = measure(root.at("initial"), ctx);
  const Node scheme = root.at("scheme");
  const Node times_node = scheme.at("times");
  const auto times = times_node.numbers();
  if (times.empty()) times_node.fail("expected at least one evaluation time");
  const double h = scheme.at("h").positive();
  FlowOptions opt;
  opt.max_step = scheme.has("max_step") ? scheme.at("max_step").positive() : std::min(opt.max_step, h);
  double prev = 0.0;
  for (double t : times) {
    if (!(t - h > prev)) times_node.fail("times must increase and stay more than h apart (and above h)");
    prev = t + h;
  }
  const auto pr = probes(root, ctx, true);

  // Each evaluation time t gets neighbours t - h and t + h on the grid.
  std::vector<double> grid{0.0};
  std::vector<std::size_t> at;
  for (double t : times) {
    grid.push_back(t - h);
    at.push_back(grid.size());
    grid.push_back(t);
    grid.push_back(t + h);
  }
  const auto tr = guarded(root, [&] { return evi_flow(f, mu0, grid, opt); });

  std::vector<double> evi_col(grid.size(), std::nan(""));
  std::vector<std::vector<double>> probe_cols(pr.size());
  double worst = -kInfinity;
  for (std::size_t i : at) {
    double row = -kInfinity;
    for (const auto& p : pr) {
      if (p.measure.dim() != mu0.dim()) root.at("probes").fail("probe '" + p.name + "' has the wrong dimension");
      row = std::max(row, evi_residual(tr, f, p.measure, i));
    }
    evi_col[i] = row;
    worst = std::max(worst, row);
  }
  for (std::size_t p = 0; p < pr.size(); ++p)
    for (const auto& m : tr.measures) probe_cols[p].push_back(w2(m, pr[p].measure));

  auto& v = r.verdict;
  v.add("evi", "EVI", worst, ctx.tolerance("evi", 1e-3));
  v.add("energy_decrease", "EVI", max_increase(tr.energies), ctx.tolerance("energy_decrease", 1e-9));
  check_final(root, ctx, v, tr.measures.back(), "EVI");

  io::Table t;
  t.add("k", column(grid.size()));
  t.add("t", tr.times);
  t.add("energy", tr.energies);
  for (std::size_t p = 0; p < pr.size(); ++p) t.add("w2_to_probe_" + pr[p].name, probe_cols[p]);
  t.add("evi_residual", evi_col);
  r.trace_csv = t.str();
  r.report = Json{{"evaluation_times", times}, {"h", h}, {"max_step", opt.max_step},
                  {"final_measure", io::to_json(tr.measures.back())}};
}

inline PointMap point_map(const Node& n) {
  const std::string kind = n.at("kind").string();
  return guarded(n, [&]() -> PointMap {
    if (kind == "identity") return identity_map();
    if (kind == "rotation") return rotation_map(n.at("theta").number());
    if (kind == "contraction") return contraction_map(n.at("c").number(), n.at("b").point());
    if (kind == "polytope") {
      std::vector<Halfspace> faces;
      for (const auto& h : n.at("halfspaces").items()) faces.push_back({h.at("normal").point(), h.at("offset").number()});
      return polytope_projection_map(std::move(faces));
    }
    n.at("kind").fail("unknown map '" + kind + "'");
  });
}

inline void run_fixed_point(const Node& root, Context& ctx, RunResult& r) {
  auto map = point_map(root.at("map"));
  const Node scheme = root.at("scheme");
  const double lambda = scheme.number_or("lambda", 1.0);
  map = guarded(scheme, [&] { return km_average(map, lambda); });
  const auto steps = scheme.at("K").uint();
  const auto mu0 = measure(root.at("initial"), ctx);
  const auto pr = probes(root, ctx, false);
  std::vector<DiscreteMeasure> candidates;
  for (const auto& p : pr) candidates.push_back(p.measure);

  MapIterOptions opt;
  opt.expansion_tol = ctx.tolerance("expansion", opt.expansion_tol);
  opt.regularity_tol = ctx.tolerance("regularity", opt.regularity_tol);
  opt.monotone_tol = ctx.tolerance("monotone", opt.monotone_tol);
  const auto tr = guarded(root, [&] { return iterate_map(map, mu0, steps, candidates, opt); });

  auto& v = r.verdict;
  v.add("nonexpansive", "non-expansive", tr.worst_expansion, opt.expansion_tol);
  v.expect("bounded", "bounded orbit", tr.bounded);
  std::optional<bool> want_regular;
  if (auto e = root.opt("expect"); e && e->has("asymptotically_regular")) {
    want_regular = e->at("asymptotically_regular").boolean();
    v.expect("asymptotically_regular", "asymptotic regularity", tr.asymptotically_regular == *want_regular);
  }
  if (want_regular.value_or(false))
    v.add("fixed_point_residual", "fixed point", tr.fixed_point_residual, ctx.tolerance("fixed_point", 1e-4));
  for (std::size_t p = 0; p < pr.size(); ++p)
    v.add("eq18_" + pr[p].name, "Eq.18", tr.candidate_max_increase[p], opt.monotone_tol);

  const std::size_t rows = tr.measures.size();
  auto step = tr.step_w2;
  step.push_back(std::nan(""));
  io::Table t;
  t.add("k", column(rows));
  t.add("step_w2", step);
  for (std::size_t p = 0; p < pr.size(); ++p) t.add("w2_to_probe_" + pr[p].name, tr.candidate_distances[p]);
  r.trace_csv = t.str();
  r.report = Json{{"map", map.name},
                  {"lambda", lambda},
                  {"worst_expansion", tr.worst_expansion},
                  {"asymptotically_regular", tr.asymptotically_regular},
                  {"bounded", tr.bounded},
                  {"fixed_point_residual", tr.fixed_point_residual},
                  {"final_measure", io::to_json(tr.measures.back())}};
}

inline ConvergentSequence sequence(const Node& n, Context& ctx) {
  const std::string c = n.at("construction").string();
  if (c == "explicit") {
    ConvergentSequence s{"explicit", {}, measure(n.at("limit"), ctx)};
    for (const auto& t : n.at("terms").items()) s.terms.push_back(measure(t, ctx));
    if (s.terms.empty()) n.at("terms").fail("expected at least one term");
    return s;
  }
  const auto length = n.at("length").uint();
  if (length == 0) n.at("length").fail("expected a positive length");
  return guarded(n, [&]() -> ConvergentSequence {
    if (c == "equality_family") return opial_equality_family(length);
    if (c == "sw_constant") return sw_constant_sequence(length);
    if (c == "sw_escaping") return sw_escaping_sequence(length);
    if (c == "sw_oscillating") return sw_oscillating_sequence(length);
    const double rho = n.number_or("rho", 0.5);
    if (c == "seeded") return seeded_convergent_sequence(ctx.seed(n.at("seed")), length, rho);
    const auto seed = ctx.seed(n.at("seed"));
    const auto dim = n.at("dim").uint();
    if (c == "dirac_drift") return dirac_drift_sequence(seed, length, dim, rho);
    if (c == "weight_oscillation") return weight_oscillation_sequence(seed, length, dim, rho);
    if (c == "two_atom_splitting") return two_atom_splitting_sequence(seed, length, dim, rho);
    n.at("construction").fail("unknown construction '" + c + "'");
  });
}

inline std::optional<std::size_t> window(const Node& root) {
  if (!root.has("window")) return std::nullopt;
  const auto w = root.at("window").uint();
  if (w == 0) root.at("window").fail("expected a positive window");
  return w;
}

inline void run_opial(const Node& root, Context& ctx, RunResult& r) {
  const auto seq = sequence(root.at("sequence"), ctx);
  const auto pr = probes(root, ctx, true);
  const auto win = window(root);
  const double tol = ctx.tolerance("opial", 1e-7);
  const auto upper = ctx.optional_tolerance("opial_upper");

  auto& v = r.verdict;
  Json reports = Json::object();
  io::Table t;
  t.add("k", column(seq.terms.size(), 1.0));
  for (const auto& p : pr) {
    const auto rep = guarded(root, [&] { return opial_residual(seq.terms, seq.limit, p.measure, win); });
    v.add("opial_" + p.name, "Eq.33", std::max(0.0, -rep.residual), tol);
    if (upper) v.add("opial_upper_" + p.name, "Eq.33", rep.residual, *upper);
    std::vector<double> col;
    for (double x : rep.w2sq_to_probe) col.push_back(std::sqrt(x));
    t.add("w2_to_probe_" + p.name, col);
    reports[p.name] = io::to_json(rep);
  }
  std::vector<double> to_limit;
  for (const auto& m : seq.terms) to_limit.push_back(w2(m, seq.limit));
  t.add("w2_to_limit", to_limit);
  r.trace_csv = t.str();
  r.report = Json{{"construction", seq.construction}, {"limit", io::to_json(seq.limit)}, {"probes", reports}};
}

inline void run_sw_convergence(const Node& root, Context& ctx, RunResult& r) {
  const auto seq = sequence(root.at("sequence"), ctx);
  const auto x_dim = root.at("x_dim").uint();
  const std::size_t dim = seq.limit.dim();
  if (x_dim == 0 || x_dim > dim) root.at("x_dim").fail("must lie in [1, dim]");
  const Json standard = Json{{"kind", "standard"}};
  const Node fam = root.has("family") ? root.at("family") : Node(standard, "family");
  const auto fam_kind = fam.at("kind").string();
  const auto fam_seed = fam.uint_or("seed", 0);
  TestFunctionFamily family = TestFunctionFamily::standard(dim, fam_seed);
  if (fam_kind == "bounded_lipschitz") family = TestFunctionFamily::bounded_lipschitz(dim, fam_seed);
  else if (fam_kind != "standard") fam.at("kind").fail("expected 'standard' or 'bounded_lipschitz'");

  SWConvergenceOptions opt;
  opt.p = root.number_or("p", opt.p);
  opt.q = root.number_or("q", opt.q);
  opt.window = window(root);
  opt.tolerance = ctx.tolerance("sw", opt.tolerance);
  opt.moment_cap = ctx.tolerance("moment_cap", opt.moment_cap);
  const auto rep = guarded(root, [&] { return check_sw_convergence(seq.terms, seq.limit, x_dim, family, opt); });

  bool want = true;
  if (auto e = root.opt("expect"); e && e->has("verdict")) want = e->at("verdict").boolean();
  auto& v = r.verdict;
  if (want) {
    v.add("narrow", "SW(i)", rep.narrow_discrepancy, opt.tolerance);
    v.add("moment_p", "SW(ii)", rep.moment_p_error, opt.tolerance);
    v.add("moment_q", "SW(iii)", rep.moment_q_sup, opt.moment_cap);
  }
  v.expect("verdict", "SW", rep.verdict == want);

  io::Table t;
  t.add("k", column(seq.terms.size(), 1.0));
  t.add("narrow_discrepancy", rep.discrepancies);
  t.add("moment_p_error", rep.moment_p_errors);
  t.add("moment_q", rep.moments_q);
  r.trace_csv = t.str();
  r.report = io::to_json(rep);
  r.report["construction"] = seq.construction;
}

}  // namespace detail

inline Json parse_config_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

inline Json load_config(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IOError("cannot read " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), file.string());
}

/// Runs one experiment in memory. Throws ConfigError for schema problems and
/// SolverError when a scheme does not converge.
inline RunResult run(const Json& config, double tolerance_scale = 1.0) {
  const detail::Node root(config, "");
  if (!config.is_object()) root.fail("config must be a JSON object");
  if (!(tolerance_scale > 0.0) || !std::isfinite(tolerance_scale))
    throw ConfigError("tolerance scale must be a positive number");
  const std::string kind = root.at("kind").string();
  detail::Context ctx;
  ctx.tolerance_scale = tolerance_scale;
  if (auto t = root.opt("tolerances")) {
    if (!t->json().is_object()) t->fail("expected an object");
    ctx.tolerance_config = &t->json();
  }
  RunResult r;
  r.verdict.kind = kind;
  if (kind == "distance") detail::run_distance(root, ctx, r);
  else if (kind == "jko") detail::run_jko(root, ctx, r);
  else if (kind == "evi") detail::run_evi(root, ctx, r);
  else if (kind == "fixed_point") detail::run_fixed_point(root, ctx, r);
  else if (kind == "opial") detail::run_opial(root, ctx, r);
  else if (kind == "sw_convergence") detail::run_sw_convergence(root, ctx, r);
  else root.at("kind").fail("unknown kind '" + kind + "'");

  if (auto s = root.opt("seed")) ctx.seed(*s);
  std::sort(ctx.seeds.begin(), ctx.seeds.end());
  ctx.seeds.erase(std::unique(ctx.seeds.begin(), ctx.seeds.end()), ctx.seeds.end());
  r.manifest = Json{{"tool", "wass_cli"},
                    {"kind", kind},
                    {"prng", Rng::algorithm()},
                    {"seeds", ctx.seeds},
                    {"tolerance_scale", tolerance_scale},
                    {"tolerances", ctx.tolerances},
                    {"config", config},
                    {"report", r.report}};
  return r;
}

inline void write_file(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write " + file.string());
  out << text;
  if (!out.flush()) throw IOError("write failed for " + file.string());
}

inline void write_artifacts(const RunResult& r, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IOError("cannot create " + out_dir.string() + ": " + ec.message());
  write_file(out_dir / "trace.csv", r.trace_csv);
  write_file(out_dir / "manifest.json", r.manifest.dump(2) + "\n");
  write_file(out_dir / "verdict.json", to_json(r.verdict).dump(2) + "\n");
}

struct SuiteEntry {
  std::string file;
  int exit_code;
  std::string message;
};

struct SuiteReport {
  std::vector<SuiteEntry> entries;

  int exit_code() const {
    int code = kPass;
    for (const auto& e : entries) code = std::max(code, e.exit_code);
    return code;
  }
};

inline const char* status_name(int code) {
  return code == kPass ? "pass" : code == kVerdictFailure ? "fail" : "error";
}

inline Json to_json(const SuiteReport& s) {
  Json entries = Json::array();
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& e : s.entries) {
    ++counts[e.exit_code];
    Json j{{"file", e.file}, {"status", status_name(e.exit_code)}, {"exit_code", e.exit_code}};
    if (!e.message.empty()) j["message"] = e.message;
    entries.push_back(std::move(j));
  }
  return Json{{"pass", s.exit_code() == kPass},
              {"total", s.entries.size()},
              {"passed", counts[0]},
              {"failed", counts[1]},
              {"errors", counts[2]},
              {"configs", entries}};
}

/// Loads, runs and writes one config; never throws for config or solver problems.
inline SuiteEntry run_file(const fs::path& config_file, const fs::path& out_dir, double tolerance_scale,
                           const std::optional<std::string>& expected_kind = std::nullopt) {
  SuiteEntry e{config_file.filename().string(), kPass, ""};
  try {
    const auto cfg = load_config(config_file);
    if (expected_kind && cfg.is_object() && cfg.value("kind", std::string()) != *expected_kind)
      throw ConfigError("field 'kind': config is not of kind '" + *expected_kind + "'");
    RunResult r;
    try {
      r = run(cfg, tolerance_scale);
    } catch (const SolverError& err) {
      r.verdict.kind = cfg.value("kind", std::string());
      r.verdict.expect("solver", "solver", false);
      r.manifest = Json{{"tool", "wass_cli"}, {"config", cfg}, {"solver_error", err.what()}};
      e.message = err.what();
    }
    write_artifacts(r, out_dir);
    if (!r.verdict.pass()) {
      e.exit_code = kVerdictFailure;
      if (e.message.empty())
        for (const auto& c : r.verdict.checks)
          if (!c.pass) e.message += (e.message.empty() ? "" : "; ") + c.name;
    }
  } catch (const ConfigError& err) {
    e = {e.file, kConfigError, err.what()};
  } catch (const IOError& err) {
    e = {e.file, kConfigError, err.what()};
  } catch (const InvalidArgument& err) {
    e = {e.file, kConfigError, err.what()};
  }
  return e;
}

/// Every *.json file of the directory, in name order; each gets out/<stem>/.
/// The summary goes to out/summary.json.
inline SuiteReport suite(const fs::path& dir, const fs::path& out_dir, double tolerance_scale = 1.0) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IOError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  if (ec) throw IOError("cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  SuiteReport report;
  for (const auto& f : files) report.entries.push_back(run_file(f, out_dir / f.stem(), tolerance_scale));
  fs::create_directories(out_dir, ec);
  if (ec) throw IOError("cannot create " + out_dir.string() + ": " + ec.message());
  write_file(out_dir / "summary.json", to_json(report).dump(2) + "\n");
  return report;
}

}  // namespace wass::experiment

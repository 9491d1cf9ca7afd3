#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wass/functionals.hpp"
#include "wass/tail.hpp"

namespace wass {

// ---------------------------------------------------------------------------
// Proximal (JKO) steps

enum class JKOMode { lagrangian, eulerian };

inline const char* to_string(JKOMode m) { return m == JKOMode::lagrangian ? "lagrangian" : "eulerian"; }

struct SolverParams {
  double epsilon = 1e-6;
  std::size_t max_iterations = 10000;
  /// Support of the Eulerian unknown. Empty means the grid of a GridEntropy functional.
  std::vector<Point> grid;
};

struct JKOStepResult {
  DiscreteMeasure measure;
  /// Frank-Wolfe gap at termination; 0 for closed-form steps
  double gap = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

// Eulerian step. Writing the unknown as the second marginal of a plan gamma
// whose first marginal is mu, the step minimizes the jointly convex
//   H(gamma) = sum_ij gamma_ij |x_i - g_j|^2 / (2 tau) + F(colsum gamma)
// whose minimum over gamma equals min_w F(w) + W2^2(mu, w) / (2 tau). The row
// constraints decouple, so the linear oracle is a per-row argmin and the
// Frank-Wolfe gap bounds H - min H.
inline JKOStepResult eulerian_step(const Functional& f, const DiscreteMeasure& mu, double tau,
                                   const SolverParams& params) {
  const std::vector<Point>* grid = &params.grid;
  const auto* entropy = f.as<GridEntropy>();
  const auto* pot = f.as<Potential>();
  if (!entropy && !pot) throw InvalidArgument("Eulerian mode needs a potential or a grid entropy");
  if (entropy) {
    if (!grid->empty() && grid->size() != entropy->grid.size())
      throw InvalidArgument("solver grid differs from the entropy grid");
    grid = &entropy->grid;
  }
  if (grid->empty()) throw InvalidArgument("Eulerian mode needs a grid");
  if ((*grid)[0].dim() != mu.dim()) throw InvalidArgument("grid dimension mismatch");
  if (!grid_indices(mu, *grid)) throw InvalidArgument("grid does not contain the support of mu");

  const std::size_t m = mu.size(), n = grid->size();
  std::vector<double> c(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = dist2(mu.point(i), (*grid)[j]) / (2.0 * tau);

  if (pot) {
    // H is linear: each row goes entirely to its cheapest column
    std::vector<double> v(n), w(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) v[j] = pot->value((*grid)[j]);
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < n; ++j)
        if (c[i * n + j] + v[j] < c[i * n + best] + v[best]) best = j;
      w[best] += mu.weight(i);
    }
    return {new_discrete(*grid, w), 0.0, 1};
  }

  std::vector<double> g(m * n), w(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      g[i * n + j] = mu.weight(i) / static_cast<double>(n);
      w[j] += g[i * n + j];
    }
  auto grad = [&](std::size_t i, std::size_t j) {
    return c[i * n + j] + (w[j] > 0.0 ? std::log(w[j]) + 1.0 : -std::numeric_limits<double>::max());
  };
  auto fw_gap = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double lin = 0.0, lo = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        const double d = grad(i, j);
        if (g[i * n + j] > 0.0) lin += g[i * n + j] * d;
        lo = std::min(lo, d);
      }
      total += lin - mu.weight(i) * lo;
    }
    return total;
  };

  double gap = fw_gap();
  std::size_t sweep = 0;
  while (gap > params.epsilon) {
    if (sweep == params.max_iterations)
      throw SolverError("Frank-Wolfe reached the iteration cap with gap " + std::to_string(gap));
    ++sweep;
    for (std::size_t i = 0; i < m; ++i) {
      // pairwise step: move mass in row i from the worst active column to the best
      std::size_t jp = 0, jm = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (grad(i, j) < grad(i, jp)) jp = j;
        if (g[i * n + j] > 0.0 && (jm == n || grad(i, j) > grad(i, jm))) jm = j;
      }
      if (jm == n || jm == jp) continue;
      // exact line search: (w+ + d) = exp(-dc) (w- - d), dc = c+ - c-
      const double r = c[i * n + jm] - c[i * n + jp];
      const double wp = w[jp], wm = w[jm];
      double d = r > 0.0 ? (wm - wp * std::exp(-r)) / (1.0 + std::exp(-r))
                         : (std::exp(r) * wm - wp) / (1.0 + std::exp(r));
      d = std::clamp(d, 0.0, g[i * n + jm]);
      g[i * n + jm] -= d;
      g[i * n + jp] += d;
      w[jm] = std::max(0.0, w[jm] - d);
      w[jp] += d;
    }
    gap = fw_gap();
  }
  return {new_discrete(*grid, w), gap, sweep};
}

}  // namespace detail

/// One proximal step: argmin_nu F(nu) + W2^2(nu, mu) / (2 tau).
inline JKOStepResult jko_step_detailed(const Functional& f, const DiscreteMeasure& mu, double tau, JKOMode mode,
                                       const SolverParams& params = {}) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (mode == JKOMode::eulerian) return detail::eulerian_step(f, mu, tau, params);
  if (const auto* q = f.as<QuadraticToTarget>()) {
    // the minimizer sits on the geodesic from mu to the target, at 2 tau / (1 + 2 tau) of the way
    if (q->target.dim() != mu.dim()) throw InvalidArgument("target dimension mismatch");
    return {interpolate(solve_ot(mu, q->target).plan, 2.0 * tau / (1.0 + 2.0 * tau)), 0.0, 0};
  }
  if (!f.as<Potential>()) throw InvalidArgument("Lagrangian mode needs a potential with a proximal map");
  return {prox_potential(f, tau, mu), 0.0, 0};
}

inline DiscreteMeasure jko_step(const Functional& f, const DiscreteMeasure& mu, double tau, JKOMode mode,
                                const SolverParams& params = {}) {
  return jko_step_detailed(f, mu, tau, mode, params).measure;
}

struct NamedMeasure {
  std::string name;
  DiscreteMeasure measure;
};

struct JKOTrace {
  double tau = 0.0;
  JKOMode mode = JKOMode::lagrangian;
  std::vector<DiscreteMeasure> measures;
  std::vector<double> energies;
  /// entries at k = 0 refer to no step and are 0
  std::vector<double> step_w2;
  /// F(mu^k) + W2^2(mu^k, mu^{k-1}) / tau - F(mu^{k-1})
  std::vector<double> residual_eq60;
  /// same with 1/(2 tau): the bare minimality of the step against staying put
  std::vector<double> residual_minimality;
  /// max over probes; empty when there are no probes
  std::vector<double> residual_perconv;
  std::vector<std::string> probe_names;
  /// w2_to_probe[p][k] = W2(mu^k, probe p)
  std::vector<std::vector<double>> w2_to_probe;
  std::vector<double> gaps;
};

inline JKOTrace jko_run(const Functional& f, const DiscreteMeasure& mu0, double tau, std::size_t steps, JKOMode mode,
                        const std::vector<NamedMeasure>& probes = {}, const SolverParams& params = {}) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (!in_domain(f, mu0)) throw InvalidArgument("initial measure is outside the domain of the functional");
  std::vector<double> probe_energy;
  for (const auto& p : probes) {
    probe_energy.push_back(eval(f, p.measure));
    if (probe_energy.back() == kInfinity) throw InvalidArgument("probe " + p.name + " is outside the domain");
  }
  JKOTrace tr;
  tr.tau = tau;
  tr.mode = mode;
  tr.measures.push_back(mu0);
  tr.energies.push_back(eval(f, mu0));
  tr.step_w2.push_back(0.0);
  tr.residual_eq60.push_back(0.0);
  tr.residual_minimality.push_back(0.0);
  tr.gaps.push_back(0.0);
  for (const auto& p : probes) {
    tr.probe_names.push_back(p.name);
    tr.w2_to_probe.push_back({w2(mu0, p.measure)});
  }
  if (!probes.empty()) tr.residual_perconv.push_back(0.0);

  for (std::size_t k = 1; k <= steps; ++k) {
    const auto& prev = tr.measures.back();
    auto step = jko_step_detailed(f, prev, tau, mode, params);
    const double e = eval(f, step.measure);
    const double d2 = w2_squared(step.measure, prev);
    const double e_prev = tr.energies.back();
    tr.residual_eq60.push_back(e + d2 / tau - e_prev);
    tr.residual_minimality.push_back(e + d2 / (2.0 * tau) - e_prev);
    double worst = -kInfinity;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const double before = tr.w2_to_probe[p].back();
      const double after = w2(step.measure, probes[p].measure);
      tr.w2_to_probe[p].push_back(after);
      worst = std::max(worst, (after * after - before * before) / (2.0 * tau) - probe_energy[p] + e + d2 / (2.0 * tau));
    }
    if (!probes.empty()) tr.residual_perconv.push_back(worst);
    tr.step_w2.push_back(std::sqrt(d2));
    tr.energies.push_back(e);
    tr.gaps.push_back(step.gap);
    tr.measures.push_back(std::move(step.measure));
  }
  return tr;
}

struct ResolventReport {
  std::vector<double> taus;
  std::vector<double> distances;  // W2(mu_tau, mu)
  std::vector<double> energies;   // F(mu_tau)
  double energy = 0.0;            // F(mu)
  bool distances_nonincreasing = true;
  bool energies_nondecreasing = true;
  double final_distance = 0.0;
  double final_energy_gap = 0.0;  // F(mu) - F(mu_tau) at the last tau
};

/// One proximal step from mu for every tau in a decreasing list.
inline ResolventReport resolvent_consistency(const Functional& f, const DiscreteMeasure& mu,
                                             const std::vector<double>& taus, JKOMode mode = JKOMode::lagrangian,
                                             const SolverParams& params = {}, double monotone_tol = 1e-12) {
  if (taus.empty()) throw InvalidArgument("tau list is empty");
  for (std::size_t k = 1; k < taus.size(); ++k)
    if (!(taus[k] < taus[k - 1])) throw InvalidArgument("tau list must be decreasing");
  ResolventReport r;
  r.taus = taus;
  r.energy = eval(f, mu);
  if (r.energy == kInfinity) throw InvalidArgument("mu is outside the domain of the functional");
  for (double tau : taus) {
    const auto m = jko_step(f, mu, tau, mode, params);
    r.distances.push_back(w2(m, mu));
    r.energies.push_back(eval(f, m));
  }
  for (std::size_t k = 1; k < taus.size(); ++k) {
    if (r.distances[k] > r.distances[k - 1] + monotone_tol) r.distances_nonincreasing = false;
    if (r.energies[k] < r.energies[k - 1] - monotone_tol) r.energies_nondecreasing = false;
  }
  r.final_distance = r.distances.back();
  r.final_energy_gap = r.energy - r.energies.back();
  return r;
}

// ---------------------------------------------------------------------------
// Gradient flows

struct FlowTrace {
  std::vector<double> times;
  std::vector<DiscreteMeasure> measures;
  std::vector<double> energies;
};

struct FlowOptions {
  /// upper bound on the integrator step; the characteristic time is one unit
  double max_step = 1e-3;
};

namespace detail {

using Particles = std::vector<Point>;

inline Particles drift(const Functional& f, const Particles& x, const std::vector<double>& w) {
  Particles v;
  v.reserve(x.size());
  if (const auto* p = f.as<Potential>()) {
    for (const auto& xi : x) v.push_back(-1.0 * p->gradient(xi));
  } else {
    // gradient of sum_ij w_i w_j W(x_i - x_j) with respect to x_i, divided by w_i
    const auto& k = *f.as<Interaction>();
    for (std::size_t i = 0; i < x.size(); ++i) {
      Point s = Point::zeros(x[i].dim());
      for (std::size_t j = 0; j < x.size(); ++j)
        if (j != i) s += w[j] * (k.gradient(x[i] - x[j]) - k.gradient(x[j] - x[i]));
      v.push_back(-1.0 * s);
    }
  }
  for (const auto& vi : v)
    if (!vi.finite()) throw SolverError("drift is not finite");
  return v;
}

inline Particles axpy(const Particles& x, double h, const Particles& k) {
  Particles out = x;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += h * k[i];
  return out;
}

inline void rk4(const Functional& f, Particles& x, const std::vector<double>& w, double h) {
  const auto k1 = drift(f, x, w);
  const auto k2 = drift(f, axpy(x, h / 2, k1), w);
  const auto k3 = drift(f, axpy(x, h / 2, k2), w);
  const auto k4 = drift(f, axpy(x, h, k3), w);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace detail

/// Particle flow x_i' = -grad V(x_i), or the interaction analogue, sampled at t_grid.
inline FlowTrace evi_flow(const Functional& f, const DiscreteMeasure& mu0, const std::vector<double>& t_grid,
                          const FlowOptions& opt = {}) {
  const auto* p = f.as<Potential>();
  const auto* k = f.as<Interaction>();
  if (!(p && p->gradient) && !(k && k->gradient)) throw InvalidArgument("flow needs a potential or interaction gradient");
  if (t_grid.empty() || t_grid.front() != 0.0) throw InvalidArgument("time grid must start at 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw InvalidArgument("time grid must be strictly increasing");
  if (!(opt.max_step > 0.0)) throw InvalidArgument("max_step must be positive");

  detail::Particles x = mu0.points();
  const auto& w = mu0.weights();
  FlowTrace tr;
  auto record = [&](double t) {
    tr.times.push_back(t);
    tr.measures.push_back(canonicalize(DiscreteMeasure(x, w)));
    tr.energies.push_back(eval(f, tr.measures.back()));
  };
  record(0.0);
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double span = t_grid[i] - t_grid[i - 1];
    const auto n = static_cast<std::size_t>(std::ceil(span / opt.max_step - 1e-9));
    const double h = span / static_cast<double>(std::max<std::size_t>(n, 1));
    if (!(h > 0.0) || t_grid[i - 1] + h == t_grid[i - 1]) throw SolverError("integrator step underflow");
    for (std::size_t s = 0; s < std::max<std::size_t>(n, 1); ++s) detail::rk4(f, x, w, h);
    record(t_grid[i]);
  }
  return tr;
}

/// Symmetric difference quotient of W2^2(mu_t, sigma) / 2 at an interior sample,
/// minus F(sigma) - F(mu_t). The EVI predicts a value <= O(h^2) for convex F.
inline double evi_residual(const FlowTrace& tr, const Functional& f, const DiscreteMeasure& sigma, std::size_t index) {
  if (index == 0 || index + 1 >= tr.times.size()) throw InvalidArgument("EVI residual needs an interior time index");
  const double up = w2_squared(tr.measures[index + 1], sigma);
  const double down = w2_squared(tr.measures[index - 1], sigma);
  const double deriv = (up - down) / (2.0 * (tr.times[index + 1] - tr.times[index - 1]));
  return deriv - eval(f, sigma) + eval(f, tr.measures[index]);
}

// ---------------------------------------------------------------------------
// Iterated maps

struct PointMap {
  std::string name;
  std::function<Point(const Point&)> apply;
  /// 0 when the map accepts any dimension
  std::size_t dim = 0;
};

inline PointMap identity_map() {
  return {"identity", [](const Point& x) { return x; }, 0};
}

/// x -> c x + b with |c| < 1.
inline PointMap contraction_map(double c, Point b) {
  if (!(std::abs(c) < 1.0)) throw InvalidArgument("contraction factor must satisfy |c| < 1");
  const std::size_t d = b.dim();
  return {"contraction", [c, b](const Point& x) { return c * x + b; }, d};
}

inline PointMap rotation_map(double theta) {
  const double cs = std::cos(theta), sn = std::sin(theta);
  return {"rotation", [cs, sn](const Point& x) { return Point{cs * x[0] - sn * x[1], sn * x[0] + cs * x[1]}; }, 2};
}

struct Halfspace {
  Point normal;
  double offset;  // {x : <normal, x> <= offset}
};

/// Euclidean projection onto an intersection of halfspaces (Dykstra's algorithm).
inline PointMap polytope_projection_map(std::vector<Halfspace> faces, std::size_t max_sweeps = 10000,
                                        double tol = 1e-14) {
  if (faces.empty()) throw InvalidArgument("polytope needs at least one halfspace");
  const std::size_t d = faces[0].normal.dim();
  for (const auto& h : faces)
    if (h.normal.dim() != d || !(norm2(h.normal) > 0.0)) throw InvalidArgument("invalid halfspace normal");
  return {"polytope_projection",
          [faces, max_sweeps, tol](const Point& x0) {
            Point x = x0;
            std::vector<Point> incr(faces.size(), Point::zeros(x0.dim()));
            for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
              double moved = 0.0;
              for (std::size_t f = 0; f < faces.size(); ++f) {
                const Point y = x + incr[f];
                const double excess = dot(faces[f].normal, y) - faces[f].offset;
                const Point p = excess > 0.0 ? y - (excess / norm2(faces[f].normal)) * faces[f].normal : y;
                incr[f] = y - p;
                moved += dist2(p, x);
                x = p;
              }
              if (moved <= tol * tol) break;
            }
            return x;
          },
          d};
}

/// Krasnoselskii-Mann average (1 - lambda) x + lambda T(x).
inline PointMap km_average(PointMap t, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in (0, 1]");
  if (lambda == 1.0) return t;
  auto inner = t.apply;
  return {t.name + "_km", [inner, lambda](const Point& x) { return lerp(x, inner(x), lambda); }, t.dim};
}

inline DiscreteMeasure apply_map(const PointMap& t, const DiscreteMeasure& mu) {
  if (t.dim != 0 && t.dim != mu.dim()) throw InvalidArgument("map dimension does not match the measure");
  return pushforward(mu, t.apply);
}

struct MapIterOptions {
  /// indices sampled for the non-expansiveness check
  std::size_t sample_count = 20;
  double regularity_tol = 1e-3;
  double moment_cap = 1e6;
  double expansion_tol = 1e-9;
  double monotone_tol = 1e-9;
};

struct MapIterTrace {
  std::vector<DiscreteMeasure> measures;
  std::vector<double> step_w2;  // step_w2[k] = W2(mu^{k+1}, mu^k)
  double worst_expansion = 0.0;
  bool nonexpansive = true;
  bool asymptotically_regular = false;
  bool bounded = true;
  /// W2(T mu^K, mu^K) for the last iterate
  double fixed_point_residual = 0.0;
  std::optional<DiscreteMeasure> candidate_fixed_point;
  std::vector<std::vector<double>> candidate_distances;
  std::vector<double> candidate_max_increase;
  std::vector<bool> candidate_monotone;
};

inline MapIterTrace iterate_map(const PointMap& t, const DiscreteMeasure& mu0, std::size_t steps,
                                const std::vector<DiscreteMeasure>& candidates = {}, const MapIterOptions& opt = {}) {
  if (steps == 0) throw InvalidArgument("need at least one iteration");
  MapIterTrace tr;
  tr.measures.push_back(canonicalize(mu0));
  for (std::size_t k = 0; k < steps; ++k) {
    tr.measures.push_back(apply_map(t, tr.measures.back()));
    tr.step_w2.push_back(w2(tr.measures[k + 1], tr.measures[k]));
  }
  for (const auto& m : tr.measures)
    if (!(moment(m, 2) <= opt.moment_cap)) tr.bounded = false;

  // W2(T mu^a, T mu^b) against W2(mu^a, mu^b) on evenly spaced indices
  std::vector<std::size_t> idx;
  const std::size_t count = std::min(opt.sample_count, steps);
  for (std::size_t s = 0; s < count; ++s) idx.push_back(s * (steps - 1) / std::max<std::size_t>(count - 1, 1));
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const double before = w2(tr.measures[idx[a]], tr.measures[idx[b]]);
      const double after = w2(tr.measures[idx[a] + 1], tr.measures[idx[b] + 1]);
      tr.worst_expansion = std::max(tr.worst_expansion, after - before);
    }
  tr.nonexpansive = tr.worst_expansion <= opt.expansion_tol;

  const std::size_t quarter = std::max<std::size_t>(1, tr.step_w2.size() / 4);
  bool decreasing = true;
  for (std::size_t k = tr.step_w2.size() - quarter + 1; k < tr.step_w2.size(); ++k)
    if (tr.step_w2[k] > tr.step_w2[k - 1] + 1e-12) decreasing = false;
  tr.asymptotically_regular = tail_max(tr.step_w2, quarter) < opt.regularity_tol && decreasing;

  tr.fixed_point_residual = w2(apply_map(t, tr.measures.back()), tr.measures.back());
  if (tr.asymptotically_regular && tr.bounded) tr.candidate_fixed_point = tr.measures.back();

  for (const auto& c : candidates) {
    std::vector<double> d;
    double inc = 0.0;
    for (const auto& m : tr.measures) {
      d.push_back(w2(m, c));
      if (d.size() > 1) inc = std::max(inc, d.back() - d[d.size() - 2]);
    }
    tr.candidate_distances.push_back(std::move(d));
    tr.candidate_max_increase.push_back(inc);
    tr.candidate_monotone.push_back(inc <= opt.monotone_tol);
  }
  return tr;
}

}  // namespace wass

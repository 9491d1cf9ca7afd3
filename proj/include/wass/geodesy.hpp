#pragma once

#include <vector>

#include "wass/transport.hpp"

namespace wass {

struct GeodesicSample {
  double s;
  DiscreteMeasure measure;
};

inline std::vector<double> default_s_grid() { return {0.0, 0.25, 0.5, 0.75, 1.0}; }

namespace detail {

inline void check_unit_interval(double s, const char* what) {
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidArgument(std::string(what) + " must lie in [0, 1]");
}

}  // namespace detail

/// Displacement interpolation: the image of `plan` under (x, y) -> (1-s) x + s y.
inline DiscreteMeasure interpolate(const TransportPlan& plan, double s) {
  detail::check_unit_interval(s, "interpolation parameter");
  std::vector<Point> pts;
  std::vector<double> w;
  for (const auto& e : plan.entries()) {
    pts.push_back(lerp(plan.source().point(e.source), plan.target().point(e.target), s));
    w.push_back(e.mass);
  }
  return canonicalize(DiscreteMeasure(std::move(pts), std::move(w)));
}

/// Same interpolation between two slots of a multi-plan.
inline DiscreteMeasure interpolate(const ProductMeasure& g, std::size_t from, std::size_t to, double t) {
  detail::check_unit_interval(t, "interpolation parameter");
  if (from >= g.slots() || to >= g.slots()) throw InvalidArgument("invalid slot index");
  std::vector<Point> pts;
  for (std::size_t a = 0; a < g.size(); ++a) pts.push_back(lerp(g.point(from, a), g.point(to, a), t));
  return canonicalize(DiscreteMeasure(std::move(pts), g.weights()));
}

/// Samples of the geodesic carried by the plan returned by solve_ot.
inline std::vector<GeodesicSample> geodesic(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                                            const std::vector<double>& grid = default_s_grid()) {
  for (double s : grid) detail::check_unit_interval(s, "geodesic grid value");
  const auto plan = solve_ot(mu0, mu1).plan;
  std::vector<GeodesicSample> out;
  out.reserve(grid.size());
  for (double s : grid) out.push_back({s, interpolate(plan, s)});
  return out;
}

/// gamma in Gamma(base, mu0, mu1) whose (0,1) and (0,2) marginals are
/// optimal. The conditionals at each base atom are coupled optimally, so
/// equal endpoints give a plan concentrated on x2 = x3.
inline ProductMeasure generalized_geodesic_plan(const DiscreteMeasure& base, const DiscreteMeasure& mu0,
                                                const DiscreteMeasure& mu1) {
  return glue(solve_ot(base, mu0).plan, solve_ot(base, mu1).plan, GlueRule::optimal_conditionals);
}

inline DiscreteMeasure generalized_geodesic(const DiscreteMeasure& base, const DiscreteMeasure& mu0,
                                            const DiscreteMeasure& mu1, double t) {
  detail::check_unit_interval(t, "interpolation parameter");
  return interpolate(generalized_geodesic_plan(base, mu0, mu1), 1, 2, t);
}

/// Transport cost of the (from, to) marginal of a multi-plan.
inline double coupling_cost(const ProductMeasure& g, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t a = 0; a < g.size(); ++a) s += g.weight(a) * dist2(g.point(from, a), g.point(to, a));
  return s;
}

}  // namespace wass

#pragma once

// Seeded measure sequences with known narrow limits. The perturbations decay
// like rho^n, so a tail window of length 10 sits well inside 1e-7 of the limit
// for rho = 1/2 and moderate lengths.

#include <cmath>
#include <string>
#include <vector>

#include "wass/convergence.hpp"

namespace wass {

struct ConvergentSequence {
  std::string construction;
  MeasureSequence terms;
  DiscreteMeasure limit;
};

namespace detail {

inline Point random_point(Rng& rng, std::size_t d, double radius) {
  Point p = Point::zeros(d);
  for (std::size_t k = 0; k < d; ++k) p[k] = rng.uniform(-radius, radius);
  return p;
}

inline DiscreteMeasure random_limit(Rng& rng, std::size_t atoms, std::size_t d, double radius) {
  std::vector<Point> pts;
  std::vector<double> w;
  for (std::size_t i = 0; i < atoms; ++i) {
    pts.push_back(random_point(rng, d, radius));
    w.push_back(rng.uniform(0.2, 1.0));
  }
  double s = 0.0;
  for (double x : w) s += x;
  for (double& x : w) x /= s;
  return DiscreteMeasure(std::move(pts), std::move(w));
}

}  // namespace detail

/// Every atom of a random limit drifts in along its own direction.
inline ConvergentSequence dirac_drift_sequence(std::uint64_t seed, std::size_t length, std::size_t dim,
                                               double rho = 0.5) {
  Rng rng(seed);
  const auto limit = detail::random_limit(rng, 1 + rng.below(3), dim, 2.0);
  std::vector<Point> dirs;
  for (std::size_t i = 0; i < limit.size(); ++i) dirs.push_back(detail::random_point(rng, dim, 1.0));
  ConvergentSequence s{"dirac_drift", {}, limit};
  for (std::size_t n = 1; n <= length; ++n) {
    const double eps = std::pow(rho, static_cast<double>(n));
    std::vector<Point> pts;
    for (std::size_t i = 0; i < limit.size(); ++i) pts.push_back(limit.point(i) + eps * dirs[i]);
    s.terms.push_back(DiscreteMeasure(std::move(pts), limit.weights()));
  }
  return s;
}

/// Fixed atoms; the weights oscillate around the limit weights with decaying amplitude.
inline ConvergentSequence weight_oscillation_sequence(std::uint64_t seed, std::size_t length,
                                                      const std::vector<Point>& atoms, double rho = 0.5) {
  if (atoms.size() < 2) throw InvalidArgument("weight oscillation needs at least two atoms");
  Rng rng(seed);
  std::vector<double> w, tilt;
  double s = 0.0, mean_tilt = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    w.push_back(rng.uniform(0.2, 1.0));
    s += w.back();
    tilt.push_back(rng.uniform(-1.0, 1.0));
    mean_tilt += tilt.back();
  }
  for (double& x : w) x /= s;
  mean_tilt /= static_cast<double>(atoms.size());
  // zero-sum tilt, scaled so that every weight stays positive
  double scale = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    tilt[i] -= mean_tilt;
    scale = std::max(scale, std::abs(tilt[i]) / w[i]);
  }
  for (double& t : tilt) t /= 2.0 * scale;
  ConvergentSequence out{"weight_oscillation", {}, DiscreteMeasure(atoms, w)};
  for (std::size_t n = 1; n <= length; ++n) {
    const double eps = (n % 2 == 0 ? 1.0 : -1.0) * std::pow(rho, static_cast<double>(n));
    std::vector<double> wn;
    for (std::size_t i = 0; i < atoms.size(); ++i) wn.push_back(w[i] + eps * tilt[i]);
    out.terms.push_back(DiscreteMeasure(atoms, std::move(wn)));
  }
  return out;
}

inline ConvergentSequence weight_oscillation_sequence(std::uint64_t seed, std::size_t length, std::size_t dim,
                                                      double rho = 0.5) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Point> atoms;
  const std::size_t n = 2 + rng.below(3);
  for (std::size_t i = 0; i < n; ++i) atoms.push_back(detail::random_point(rng, dim, 2.0));
  return weight_oscillation_sequence(seed, length, atoms, rho);
}

/// One atom of the limit is split into two half-mass atoms at x +- rho^n v.
inline ConvergentSequence two_atom_splitting_sequence(std::uint64_t seed, std::size_t length, std::size_t dim,
                                                      double rho = 0.5) {
  Rng rng(seed);
  const auto limit = detail::random_limit(rng, 1 + rng.below(3), dim, 2.0);
  const std::size_t split = rng.below(limit.size());
  const Point v = detail::random_point(rng, dim, 1.0);
  ConvergentSequence s{"two_atom_splitting", {}, limit};
  for (std::size_t n = 1; n <= length; ++n) {
    const double eps = std::pow(rho, static_cast<double>(n));
    std::vector<Point> pts;
    std::vector<double> w;
    for (std::size_t i = 0; i < limit.size(); ++i) {
      if (i == split) {
        pts.push_back(limit.point(i) + eps * v);
        pts.push_back(limit.point(i) - eps * v);
        w.push_back(0.5 * limit.weight(i));
        w.push_back(0.5 * limit.weight(i));
      } else {
        pts.push_back(limit.point(i));
        w.push_back(limit.weight(i));
      }
    }
    s.terms.push_back(DiscreteMeasure(std::move(pts), std::move(w)));
  }
  return s;
}

/// Cycles through the three constructions by seed; dimension 1 or 2.
inline ConvergentSequence seeded_convergent_sequence(std::uint64_t seed, std::size_t length, double rho = 0.5) {
  const std::size_t dim = 1 + seed % 2;
  switch (seed % 3) {
    case 0: return dirac_drift_sequence(seed, length, dim, rho);
    case 1: return weight_oscillation_sequence(seed, length, dim, rho);
    default: return two_atom_splitting_sequence(seed, length, dim, rho);
  }
}

/// 1/2 delta_{-1-1/n} + 1/2 delta_{1+1/n}, n = 1..length, towards 1/2 delta_{-1} + 1/2 delta_{1}.
inline ConvergentSequence opial_equality_family(std::size_t length) {
  ConvergentSequence s{"opial_equality", {}, new_discrete({Point{-1.0}, Point{1.0}}, {0.5, 0.5})};
  for (std::size_t n = 1; n <= length; ++n) {
    const double e = 1.0 / static_cast<double>(n);
    s.terms.push_back(new_discrete({Point{-1.0 - e}, Point{1.0 + e}}, {0.5, 0.5}));
  }
  return s;
}

// Canonical sequences on R x R (x first, y second).

inline ConvergentSequence sw_constant_sequence(std::size_t length) {
  const auto m = new_discrete({Point{0.5, -1.0}, Point{-1.0, 2.0}}, {0.3, 0.7});
  return {"constant", MeasureSequence(length, m), m};
}

/// delta_{(0, n)}: the y-moment escapes.
inline ConvergentSequence sw_escaping_sequence(std::size_t length) {
  ConvergentSequence s{"escaping_y", {}, DiscreteMeasure::dirac(Point{0.0, 0.0})};
  for (std::size_t n = 1; n <= length; ++n) s.terms.push_back(DiscreteMeasure::dirac(Point{0.0, double(n)}));
  return s;
}

/// 1/2 delta_{(1/n, 0)} + 1/2 delta_{(0, a_n)} with a_n alternating -1, 1. In
/// a Hilbert space y would play the role of an orthonormal sequence tending
/// weakly to 0, so the proposed limit puts the second atom at the origin.
inline ConvergentSequence sw_oscillating_sequence(std::size_t length) {
  ConvergentSequence s{"oscillating_y", {}, DiscreteMeasure::dirac(Point{0.0, 0.0})};
  for (std::size_t n = 1; n <= length; ++n) {
    const double a = n % 2 == 1 ? -1.0 : 1.0;
    s.terms.push_back(new_discrete({Point{1.0 / double(n), 0.0}, Point{0.0, a}}, {0.5, 0.5}));
  }
  return s;
}

}  // namespace wass

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "wass/point.hpp"

namespace wass {

/// Atoms are identified when their coordinates agree after rounding to this grid.
inline constexpr double kMergeResolution = 1e-12;
/// Raw weight sums inside [1 - w, 1 + w] are renormalized, anything else is rejected.
inline constexpr double kWeightSumWindow = 1e-9;

namespace detail {

using AtomKey = std::vector<double>;

inline void append_key(AtomKey& key, const Point& p) {
  for (double c : p.coords()) {
    double r = std::round(c / kMergeResolution);
    if (r == 0.0) r = 0.0;  // fold -0
    key.push_back(r);
  }
}

inline AtomKey key_of(const Point& p) {
  AtomKey k;
  k.reserve(p.dim());
  append_key(k, p);
  return k;
}

inline double checked_weight_sum(const std::vector<double>& weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw InvalidArgument("non-finite weight");
    if (w < 0.0) throw InvalidArgument("negative weight " + std::to_string(w));
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumWindow)
    throw InvalidArgument("weights sum to " + std::to_string(sum) + ", expected 1");
  return sum;
}

}  // namespace detail

/// Finitely supported probability measure on R^d. Immutable once built.
class DiscreteMeasure {
 public:
  /// Validates and renormalizes. Throws InvalidArgument on empty input,
  /// mixed dimensions, non-finite coordinates, negative weights, or a raw
  /// weight sum outside the renormalization window.
  DiscreteMeasure(std::vector<Point> points, std::vector<double> weights)
      : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.empty()) throw InvalidArgument("measure needs at least one atom");
    if (points_.size() != weights_.size())
      throw InvalidArgument("points and weights differ in length");
    const std::size_t d = points_.front().dim();
    if (d == 0) throw InvalidArgument("points must have dimension >= 1");
    for (const auto& p : points_) {
      if (p.dim() != d) throw InvalidArgument("points of mixed dimension");
      if (!p.finite()) throw InvalidArgument("non-finite coordinate in " + to_string(p));
    }
    const double sum = detail::checked_weight_sum(weights_);
    for (double& w : weights_) w /= sum;
  }

  static DiscreteMeasure dirac(Point p) { return DiscreteMeasure({std::move(p)}, {1.0}); }

  static DiscreteMeasure uniform(std::vector<Point> points) {
    const double w = 1.0 / static_cast<double>(points.size());
    std::vector<double> weights(points.size(), w);
    return DiscreteMeasure(std::move(points), std::move(weights));
  }

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t dim() const noexcept { return points_.front().dim(); }
  const std::vector<Point>& points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const Point& point(std::size_t i) const { return points_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

 private:
  std::vector<Point> points_;
  std::vector<double> weights_;
};

inline DiscreteMeasure new_discrete(std::vector<Point> points, std::vector<double> weights) {
  return DiscreteMeasure(std::move(points), std::move(weights));
}

/// Merges coincident atoms, drops zero-weight atoms and sorts atoms
/// lexicographically by their rounded coordinates.
inline DiscreteMeasure canonicalize(const DiscreteMeasure& mu) {
  std::map<detail::AtomKey, std::pair<Point, double>> merged;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu.weight(i) == 0.0) continue;
    auto [it, inserted] = merged.try_emplace(detail::key_of(mu.point(i)), mu.point(i), 0.0);
    it->second.second += mu.weight(i);
  }
  std::vector<Point> pts;
  std::vector<double> ws;
  pts.reserve(merged.size());
  ws.reserve(merged.size());
  for (auto& [key, atom] : merged) {
    pts.push_back(std::move(atom.first));
    ws.push_back(atom.second);
  }
  return DiscreteMeasure(std::move(pts), std::move(ws));
}

/// Atom-for-atom equality after canonical merge, weights compared within `tol`.
inline bool same_measure(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol = 1e-9) {
  if (a.dim() != b.dim()) return false;
  const auto ca = canonicalize(a);
  const auto cb = canonicalize(b);
  if (ca.size() != cb.size()) return false;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (detail::key_of(ca.point(i)) != detail::key_of(cb.point(i))) return false;
    if (std::abs(ca.weight(i) - cb.weight(i)) > tol) return false;
  }
  return true;
}

/// sum_i w_i |x_i|^p
inline double moment(const DiscreteMeasure& mu, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("moment order must be >= 1");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double r = norm(mu.point(i));
    s += mu.weight(i) * (p == 2.0 ? r * r : std::pow(r, p));
  }
  return s;
}

inline Point mean(const DiscreteMeasure& mu) {
  Point m = Point::zeros(mu.dim());
  for (std::size_t i = 0; i < mu.size(); ++i) m += mu.weight(i) * mu.point(i);
  return m;
}

/// Image measure under a pointwise map. The result is canonicalized, so
/// atoms landing on the same point are merged.
template <class Map>
DiscreteMeasure pushforward(const DiscreteMeasure& mu, Map&& map) {
  std::vector<Point> pts;
  pts.reserve(mu.size());
  for (const auto& p : mu.points()) {
    Point q = map(p);
    if (!pts.empty() && q.dim() != pts.front().dim())
      throw InvalidArgument("map output dimension is inconsistent");
    pts.push_back(std::move(q));
  }
  return canonicalize(DiscreteMeasure(std::move(pts), mu.weights()));
}

/// Finitely supported probability measure on a product X_1 x ... x X_k.
/// Atom a is the tuple (slot(0)[a], ..., slot(k-1)[a]).
class ProductMeasure {
 public:
  ProductMeasure(std::vector<std::vector<Point>> slots, std::vector<double> weights)
      : slots_(std::move(slots)), weights_(std::move(weights)) {
    if (slots_.size() < 2) throw InvalidArgument("product measure needs at least two slots");
    const std::size_t n = weights_.size();
    if (n == 0) throw InvalidArgument("product measure needs at least one atom");
    for (const auto& s : slots_) {
      if (s.size() != n) throw InvalidArgument("slot length differs from weight count");
      const std::size_t d = s.front().dim();
      if (d == 0) throw InvalidArgument("points must have dimension >= 1");
      for (const auto& p : s) {
        if (p.dim() != d) throw InvalidArgument("mixed dimensions within a slot");
        if (!p.finite()) throw InvalidArgument("non-finite coordinate in " + to_string(p));
      }
    }
    const double sum = detail::checked_weight_sum(weights_);
    for (double& w : weights_) w /= sum;
  }

  std::size_t slots() const noexcept { return slots_.size(); }
  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t slot_dim(std::size_t s) const { return slots_.at(s).front().dim(); }
  const Point& point(std::size_t slot, std::size_t atom) const { return slots_[slot][atom]; }
  const std::vector<Point>& slot_points(std::size_t slot) const { return slots_.at(slot); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double weight(std::size_t a) const { return weights_[a]; }

 private:
  std::vector<std::vector<Point>> slots_;
  std::vector<double> weights_;
};

/// Independent coupling mu (x) nu.
inline ProductMeasure product(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<std::vector<Point>> slots(2);
  std::vector<double> w;
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j) {
      slots[0].push_back(mu.point(i));
      slots[1].push_back(nu.point(j));
      w.push_back(mu.weight(i) * nu.weight(j));
    }
  return ProductMeasure(std::move(slots), std::move(w));
}

/// Merges coincident tuples, drops zero weights, sorts lexicographically.
inline ProductMeasure canonicalize(const ProductMeasure& g) {
  std::map<detail::AtomKey, std::pair<std::size_t, double>> merged;
  for (std::size_t a = 0; a < g.size(); ++a) {
    if (g.weight(a) == 0.0) continue;
    detail::AtomKey key;
    for (std::size_t s = 0; s < g.slots(); ++s) detail::append_key(key, g.point(s, a));
    auto [it, inserted] = merged.try_emplace(std::move(key), a, 0.0);
    it->second.second += g.weight(a);
  }
  std::vector<std::vector<Point>> slots(g.slots());
  std::vector<double> w;
  for (const auto& [key, rep] : merged) {
    for (std::size_t s = 0; s < g.slots(); ++s) slots[s].push_back(g.point(s, rep.first));
    w.push_back(rep.second);
  }
  return ProductMeasure(std::move(slots), std::move(w));
}

/// One-slot marginal (0-based slot index).
inline DiscreteMeasure marginal(const ProductMeasure& g, std::size_t slot) {
  if (slot >= g.slots()) throw InvalidArgument("invalid slot index " + std::to_string(slot));
  return canonicalize(DiscreteMeasure(g.slot_points(slot), g.weights()));
}

/// Multi-slot marginal, slots kept in the given order (0-based indices, at least two).
inline ProductMeasure marginal(const ProductMeasure& g, const std::vector<std::size_t>& slots) {
  if (slots.size() < 2) throw InvalidArgument("use the single-slot marginal for one slot");
  std::vector<std::vector<Point>> out;
  for (std::size_t s : slots) {
    if (s >= g.slots()) throw InvalidArgument("invalid slot index " + std::to_string(s));
    out.push_back(g.slot_points(s));
  }
  return canonicalize(ProductMeasure(std::move(out), g.weights()));
}

inline bool same_product(const ProductMeasure& a, const ProductMeasure& b, double tol = 1e-9) {
  if (a.slots() != b.slots()) return false;
  const auto ca = canonicalize(a);
  const auto cb = canonicalize(b);
  if (ca.size() != cb.size()) return false;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    for (std::size_t s = 0; s < ca.slots(); ++s)
      if (detail::key_of(ca.point(s, i)) != detail::key_of(cb.point(s, i))) return false;
    if (std::abs(ca.weight(i) - cb.weight(i)) > tol) return false;
  }
  return true;
}

}  // namespace wass

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "wass/measure.hpp"
#include "wass/network_simplex.hpp"
#include "wass/tail.hpp"

namespace wass {

struct PlanEntry {
  std::size_t source;
  std::size_t target;
  double mass;

  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

/// Coupling between two discrete measures, stored as sparse (i, j, mass)
/// entries sorted lexicographically by (i, j).
class TransportPlan {
 public:
  static constexpr double kMarginalTol = 1e-9;

  TransportPlan(DiscreteMeasure source, DiscreteMeasure target, std::vector<PlanEntry> entries)
      : source_(std::move(source)), target_(std::move(target)), entries_(std::move(entries)) {
    if (source_.dim() != target_.dim())
      throw InvalidArgument("plan marginals have different dimensions");
    std::sort(entries_.begin(), entries_.end(), [](const PlanEntry& a, const PlanEntry& b) {
      return a.source != b.source ? a.source < b.source : a.target < b.target;
    });
    std::vector<double> rows(source_.size(), 0.0), cols(target_.size(), 0.0);
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const auto& e = entries_[k];
      if (e.source >= source_.size() || e.target >= target_.size())
        throw InvalidArgument("plan entry index out of range");
      if (!(e.mass >= 0.0) || !std::isfinite(e.mass))
        throw InvalidArgument("plan entry mass must be finite and nonnegative");
      if (k > 0 && entries_[k - 1].source == e.source && entries_[k - 1].target == e.target)
        throw InvalidArgument("duplicate plan entry");
      rows[e.source] += e.mass;
      cols[e.target] += e.mass;
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (std::abs(rows[i] - source_.weight(i)) > kMarginalTol)
        throw InvalidArgument("plan row sums do not match the source weights");
    for (std::size_t j = 0; j < cols.size(); ++j)
      if (std::abs(cols[j] - target_.weight(j)) > kMarginalTol)
        throw InvalidArgument("plan column sums do not match the target weights");
  }

  /// The coupling (id, id)_# mu.
  static TransportPlan identity(const DiscreteMeasure& mu) {
    std::vector<PlanEntry> e;
    for (std::size_t i = 0; i < mu.size(); ++i) e.push_back({i, i, mu.weight(i)});
    return TransportPlan(mu, mu, std::move(e));
  }

  const DiscreteMeasure& source() const noexcept { return source_; }
  const DiscreteMeasure& target() const noexcept { return target_; }
  const std::vector<PlanEntry>& entries() const noexcept { return entries_; }

  /// sum mass(i,j) |x_i - y_j|^2
  double cost() const {
    double s = 0.0;
    for (const auto& e : entries_)
      s += e.mass * dist2(source_.point(e.source), target_.point(e.target));
    return s;
  }

  ProductMeasure as_product() const {
    std::vector<std::vector<Point>> slots(2);
    std::vector<double> w;
    for (const auto& e : entries_) {
      slots[0].push_back(source_.point(e.source));
      slots[1].push_back(target_.point(e.target));
      w.push_back(e.mass);
    }
    return ProductMeasure(std::move(slots), std::move(w));
  }

 private:
  DiscreteMeasure source_;
  DiscreteMeasure target_;
  std::vector<PlanEntry> entries_;
};

/// Optimal plan for the quadratic cost together with Kantorovich potentials.
/// phi_i + psi_j <= |x_i - y_j|^2 on every pair; psi has zero mean under the
/// target weights.
struct OTSolution {
  TransportPlan plan;
  double squared_cost;
  std::vector<double> phi;
  std::vector<double> psi;
  double duality_gap;

  double w2() const { return std::sqrt(squared_cost); }
};

inline std::vector<double> squared_cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<double> c(mu.size() * nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j) c[i * nu.size() + j] = dist2(mu.point(i), nu.point(j));
  return c;
}

inline OTSolution solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim() != nu.dim()) throw InvalidArgument("solve_ot: dimension mismatch");
  const std::size_t m = mu.size(), n = nu.size();
  const auto cost = squared_cost_matrix(mu, nu);
  auto lp = detail::TransportationSimplex(mu.weights(), nu.weights(), cost).solve();

  // pivoting leaves round-off dust (~1e-17) on cells that should be empty
  constexpr double kFlowDust = 1e-15;
  std::vector<PlanEntry> entries;
  double primal = 0.0;
  for (std::size_t c = 0; c < m * n; ++c) {
    if (lp.flow[c] <= kFlowDust) continue;
    entries.push_back({c / n, c % n, lp.flow[c]});
    primal += lp.flow[c] * cost[c];
  }
  primal = std::max(primal, 0.0);

  // Gauge: psi has zero nu-mean; phi is the c-transform of psi, which makes
  // the pair exactly dual feasible.
  std::vector<double> psi = lp.v;
  double shift = 0.0;
  for (std::size_t j = 0; j < n; ++j) shift += nu.weight(j) * psi[j];
  for (double& p : psi) p -= shift;
  std::vector<double> phi(m, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) phi[i] = std::min(phi[i], cost[i * n + j] - psi[j]);

  double dual = 0.0;
  for (std::size_t i = 0; i < m; ++i) dual += mu.weight(i) * phi[i];
  for (std::size_t j = 0; j < n; ++j) dual += nu.weight(j) * psi[j];

  return OTSolution{TransportPlan(mu, nu, std::move(entries)), primal, std::move(phi),
                    std::move(psi), std::abs(primal - dual)};
}

inline double w2_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return solve_ot(mu, nu).squared_cost;
}

inline double w2(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return std::sqrt(w2_squared(mu, nu));
}

struct CyclicalMonotonicityReport {
  bool monotone = true;
  /// Smallest cycle sum found (0 when the support has a single pair).
  double min_cycle_sum = 0.0;
  /// Plan entry indices of the worst cycle, empty when monotone.
  std::vector<std::size_t> witness;
};

namespace detail {

struct CycleSearch {
  const std::vector<Point>* xs = nullptr;
  const std::vector<Point>* ys = nullptr;
  std::size_t max_len = 0;
  std::vector<std::size_t> current;
  std::vector<bool> used;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_cycle;

  double cycle_sum() const {
    double s = 0.0;
    const std::size_t L = current.size();
    for (std::size_t k = 0; k < L; ++k) {
      const auto& x = (*xs)[current[k]];
      const auto& xprev = (*xs)[current[(k + L - 1) % L]];
      s += dot(x - xprev, (*ys)[current[k]]);
    }
    return s;
  }

  void extend() {
    if (current.size() >= 2) {
      const double s = cycle_sum();
      if (s < best) {
        best = s;
        best_cycle = current;
      }
    }
    if (current.size() == max_len) return;
    // The first element is the smallest index, so each cycle is visited once per rotation class.
    for (std::size_t a = current.front() + 1; a < xs->size(); ++a) {
      if (used[a]) continue;
      used[a] = true;
      current.push_back(a);
      extend();
      current.pop_back();
      used[a] = false;
    }
  }
};

}  // namespace detail

/// Exhaustive search over cycles of support pairs of length 2..max_cycle for
/// sum_k <x^k - x^{k-1}, y^k> < -1e-9.
inline CyclicalMonotonicityReport is_cyclically_monotone(const TransportPlan& plan,
                                                         std::size_t max_cycle = 5,
                                                         double tol = 1e-9) {
  if (max_cycle < 2) throw InvalidArgument("max_cycle must be >= 2");
  std::vector<Point> xs, ys;
  std::vector<std::size_t> entry_index;
  for (std::size_t k = 0; k < plan.entries().size(); ++k) {
    const auto& e = plan.entries()[k];
    if (e.mass <= 1e-12) continue;
    xs.push_back(plan.source().point(e.source));
    ys.push_back(plan.target().point(e.target));
    entry_index.push_back(k);
  }
  detail::CycleSearch search;
  search.xs = &xs;
  search.ys = &ys;
  search.max_len = std::min(max_cycle, xs.size());
  search.used.assign(xs.size(), false);
  for (std::size_t a = 0; a < xs.size(); ++a) {
    search.used[a] = true;
    search.current = {a};
    search.extend();
    search.used[a] = false;
  }
  CyclicalMonotonicityReport r;
  r.min_cycle_sum = std::isfinite(search.best) ? search.best : 0.0;
  if (r.min_cycle_sum < -tol) {
    r.monotone = false;
    for (std::size_t a : search.best_cycle) r.witness.push_back(entry_index[a]);
  }
  return r;
}

enum class GlueRule {
  /// gamma(i,j,k) = g12(i,j) g13(i,k) / w_i
  conditional_independence,
  /// for each first-slot atom, its two conditional laws are coupled optimally
  optimal_conditionals,
};

/// Three-slot plan with prescribed (0,1) and (0,2) marginals.
inline ProductMeasure glue(const TransportPlan& g12, const TransportPlan& g13,
                           GlueRule rule = GlueRule::conditional_independence) {
  const auto& base = g12.source();
  const auto& other = g13.source();
  bool same = base.size() == other.size() && base.dim() == other.dim();
  for (std::size_t i = 0; same && i < base.size(); ++i)
    same = detail::key_of(base.point(i)) == detail::key_of(other.point(i)) &&
           std::abs(base.weight(i) - other.weight(i)) <= 1e-9;
  if (!same) throw InvalidArgument("glue: plans do not share their first marginal");

  std::vector<std::vector<Point>> slots(3);
  std::vector<double> w;
  auto push = [&](std::size_t i, std::size_t j, std::size_t k, double mass) {
    if (mass <= 0.0) return;
    slots[0].push_back(base.point(i));
    slots[1].push_back(g12.target().point(j));
    slots[2].push_back(g13.target().point(k));
    w.push_back(mass);
  };
  auto it13 = g13.entries().begin();
  auto it12 = g12.entries().begin();
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto end12 = std::find_if(it12, g12.entries().end(), [i](const PlanEntry& e) { return e.source != i; });
    auto end13 = std::find_if(it13, g13.entries().end(), [i](const PlanEntry& e) { return e.source != i; });
    const double wi = base.weight(i);
    if (wi > 0.0 && it12 != end12 && it13 != end13) {
      if (rule == GlueRule::conditional_independence) {
        for (auto a = it12; a != end12; ++a)
          for (auto b = it13; b != end13; ++b) push(i, a->target, b->target, a->mass * b->mass / wi);
      } else {
        std::vector<Point> p2, p3;
        std::vector<double> c2, c3;
        for (auto a = it12; a != end12; ++a) {
          p2.push_back(g12.target().point(a->target));
          c2.push_back(a->mass);
        }
        for (auto b = it13; b != end13; ++b) {
          p3.push_back(g13.target().point(b->target));
          c3.push_back(b->mass);
        }
        auto normalize = [](std::vector<double>& c) {
          double s = 0.0;
          for (double x : c) s += x;
          for (double& x : c) x /= s;
        };
        normalize(c2);
        normalize(c3);
        const DiscreteMeasure cond2(std::move(p2), std::move(c2)), cond3(std::move(p3), std::move(c3));
        auto lp = detail::TransportationSimplex(cond2.weights(), cond3.weights(),
                                                squared_cost_matrix(cond2, cond3)).solve();
        const std::size_t n3 = cond3.size();
        for (std::size_t c = 0; c < lp.flow.size(); ++c)
          push(i, (it12 + static_cast<std::ptrdiff_t>(c / n3))->target,
               (it13 + static_cast<std::ptrdiff_t>(c % n3))->target, wi * lp.flow[c]);
      }
    }
    it12 = end12;
    it13 = end13;
  }
  return ProductMeasure(std::move(slots), std::move(w));
}

struct PlanStabilityReport {
  double limit_cost = 0.0;
  double limit_w2_squared = 0.0;
  double tail_min_cost = 0.0;
  std::vector<double> costs;
  bool limit_optimal = false;
  bool cost_lsc = false;

  bool passed() const { return limit_optimal && cost_lsc; }
};

/// Optimality of a proposed limit plan and the liminf inequality for costs,
/// with the liminf replaced by a tail-window minimum.
inline PlanStabilityReport check_plan_stability(const std::vector<OTSolution>& plans,
                                                const TransportPlan& limit_plan,
                                                std::optional<std::size_t> window = std::nullopt,
                                                double tol = 1e-7) {
  if (plans.empty()) throw InvalidArgument("check_plan_stability: empty sequence");
  PlanStabilityReport r;
  for (const auto& s : plans) r.costs.push_back(s.plan.cost());
  r.limit_cost = limit_plan.cost();
  r.limit_w2_squared = w2_squared(limit_plan.source(), limit_plan.target());
  r.tail_min_cost = tail_liminf(r.costs, window.value_or(default_window(r.costs.size())));
  r.limit_optimal = std::abs(r.limit_cost - r.limit_w2_squared) <= tol;
  r.cost_lsc = r.limit_cost <= r.tail_min_cost + tol;
  return r;
}

}  // namespace wass

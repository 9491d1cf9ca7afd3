#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "wass/geodesy.hpp"

namespace wass {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Convexity a functional is known to have. `eulerian` means convex in the
/// weights of measures supported on a fixed grid.
struct Convexity {
  bool geodesic = false;
  bool generalized_geodesic = false;
  bool eulerian = false;
};

/// phi(mu) = sum_i w_i V(x_i)
struct Potential {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
  /// argmin_y |y - x|^2 / (2 tau) + V(y), when available in closed form
  std::function<Point(double, const Point&)> prox;
};

/// phi(mu) = sum_ij w_i w_j W(x_i - x_j)
struct Interaction {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
};

/// phi(mu) = W2^2(mu, target)
struct QuadraticToTarget {
  DiscreteMeasure target;
};

/// phi(mu) = sum w log w over grid atoms; +infinity off the grid.
struct GridEntropy {
  std::vector<Point> grid;
};

class Functional {
 public:
  using Kind = std::variant<Potential, Interaction, QuadraticToTarget, GridEntropy>;

  Functional(std::string name, Kind kind, Convexity convexity)
      : name_(std::move(name)), kind_(std::move(kind)), convexity_(convexity) {}

  const std::string& name() const noexcept { return name_; }
  const Kind& kind() const noexcept { return kind_; }
  const Convexity& convexity() const noexcept { return convexity_; }

  template <class T>
  const T* as() const noexcept {
    return std::get_if<T>(&kind_);
  }

 private:
  std::string name_;
  Kind kind_;
  Convexity convexity_;
};

namespace detail {

inline Point offset(const Point& x, const Point& a) { return a.dim() == 0 ? x : x - a; }

inline void check_param_dim(const Point& param, const Point& x) {
  if (param.dim() != 0 && param.dim() != x.dim())
    throw InvalidArgument("functional parameter dimension does not match the measure");
}

}  // namespace detail

/// A potential energy from user callables; `prox` may be empty.
inline Functional potential(std::string name, std::function<double(const Point&)> value,
                            std::function<Point(const Point&)> gradient,
                            std::function<Point(double, const Point&)> prox, Convexity convexity) {
  if (!value) throw InvalidArgument("potential needs a value function");
  return Functional(std::move(name), Potential{std::move(value), std::move(gradient), std::move(prox)}, convexity);
}

inline Functional zero_potential() {
  return potential(
      "potential:zero", [](const Point&) { return 0.0; }, [](const Point& x) { return Point::zeros(x.dim()); },
      [](double, const Point& x) { return x; }, {true, true, true});
}

/// |x - a|^2 / 2; an empty `a` means the origin.
inline Functional quadratic_potential(Point a = {}) {
  Potential v;
  v.value = [a](const Point& x) {
    detail::check_param_dim(a, x);
    return 0.5 * norm2(detail::offset(x, a));
  };
  v.gradient = [a](const Point& x) { return detail::offset(x, a); };
  v.prox = [a](double tau, const Point& x) {
    detail::check_param_dim(a, x);
    return a.dim() == 0 ? (1.0 / (1.0 + tau)) * x : (1.0 / (1.0 + tau)) * (x + tau * a);
  };
  return Functional("potential:quadratic", std::move(v), {true, true, true});
}

/// |x - a|
inline Functional abs_potential(Point a = {}) {
  Potential v;
  v.value = [a](const Point& x) {
    detail::check_param_dim(a, x);
    return norm(detail::offset(x, a));
  };
  v.gradient = [a](const Point& x) {
    const Point r = detail::offset(x, a);
    const double n = norm(r);
    return n > 0.0 ? (1.0 / n) * r : Point::zeros(x.dim());
  };
  // block soft-thresholding towards a
  v.prox = [a](double tau, const Point& x) {
    detail::check_param_dim(a, x);
    const Point r = detail::offset(x, a);
    const double n = norm(r);
    const double shrink = n > tau ? 1.0 - tau / n : 0.0;
    Point y = shrink * r;
    return a.dim() == 0 ? y : y + a;
  };
  return Functional("potential:abs", std::move(v), {true, true, true});
}

/// <c, x>
inline Functional linear_potential(Point c) {
  Potential v;
  v.value = [c](const Point& x) { return dot(c, x); };
  v.gradient = [c](const Point&) { return c; };
  v.prox = [c](double tau, const Point& x) { return x - tau * c; };
  return Functional("potential:linear", std::move(v), {true, true, true});
}

/// -|x|^2, concave; no proximal map.
inline Functional concave_test_potential() {
  Potential v;
  v.value = [](const Point& x) { return -norm2(x); };
  v.gradient = [](const Point& x) { return -2.0 * x; };
  return Functional("potential:concave_test", std::move(v), {false, false, false});
}

/// scale * |z|^2 as interaction kernel.
inline Functional quadratic_interaction(double scale = 1.0) {
  if (!(scale >= 0.0)) throw InvalidArgument("interaction scale must be nonnegative");
  Interaction k;
  k.value = [scale](const Point& z) { return scale * norm2(z); };
  k.gradient = [scale](const Point& z) { return (2.0 * scale) * z; };
  return Functional("interaction:quadratic", std::move(k), {true, true, false});
}

/// W2^2(., target). Convex along geodesics and generalized geodesics on the
/// line only; in higher dimension it is merely semiconcave along geodesics.
inline Functional quadratic_to_target(DiscreteMeasure target) {
  const bool flat = target.dim() == 1;
  return Functional("quadratic_to_target", QuadraticToTarget{std::move(target)}, {flat, flat, true});
}

inline Functional grid_entropy(std::vector<Point> grid) {
  if (grid.empty()) throw InvalidArgument("entropy grid is empty");
  return Functional("grid_entropy", GridEntropy{std::move(grid)}, {false, false, true});
}

namespace detail {

/// Index of each canonical atom of mu in `grid`, or nullopt if some atom is off-grid.
inline std::optional<std::vector<std::size_t>> grid_indices(const DiscreteMeasure& mu,
                                                            const std::vector<Point>& grid) {
  std::map<AtomKey, std::size_t> index;
  for (std::size_t g = 0; g < grid.size(); ++g) index.emplace(key_of(grid[g]), g);
  std::vector<std::size_t> out;
  for (const auto& p : mu.points()) {
    auto it = index.find(key_of(p));
    if (it == index.end()) return std::nullopt;
    out.push_back(it->second);
  }
  return out;
}

}  // namespace detail

/// Extended-real evaluation; +infinity marks measures outside the domain.
inline double eval(const Functional& f, const DiscreteMeasure& mu) {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Potential>) {
          double s = 0.0;
          for (std::size_t i = 0; i < mu.size(); ++i)
            if (mu.weight(i) > 0.0) s += mu.weight(i) * k.value(mu.point(i));
          return s;
        } else if constexpr (std::is_same_v<K, Interaction>) {
          double s = 0.0;
          for (std::size_t i = 0; i < mu.size(); ++i)
            for (std::size_t j = 0; j < mu.size(); ++j)
              s += mu.weight(i) * mu.weight(j) * k.value(mu.point(i) - mu.point(j));
          return s;
        } else if constexpr (std::is_same_v<K, QuadraticToTarget>) {
          return w2_squared(mu, k.target);
        } else {
          if (k.grid.front().dim() != mu.dim()) throw InvalidArgument("grid dimension mismatch");
          const auto c = canonicalize(mu);
          if (!detail::grid_indices(c, k.grid)) return kInfinity;
          double s = 0.0;
          for (double w : c.weights())
            if (w > 0.0) s += w * std::log(w);
          return s;
        }
      },
      f.kind());
}

inline bool in_domain(const Functional& f, const DiscreteMeasure& mu) { return eval(f, mu) < kInfinity; }

struct ConvexityReport {
  bool satisfied = true;
  double worst_violation = 0.0;
  /// interpolation parameter and curve point where the worst violation occurs
  double witness_t = 0.0;
  std::optional<DiscreteMeasure> witness_measure;
  /// only filled by check_generalized_convexity
  double worst_plain = 0.0;
  double worst_strengthened = 0.0;
};

inline std::vector<double> default_t_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 10; ++k) g.push_back(k / 10.0);
  return g;
}

/// max over t of F(mu_t) - (1-t) F(mu0) - t F(mu1) along the geodesic
/// carried by the plan returned by solve_ot.
inline ConvexityReport check_geodesic_convexity(const Functional& f, const DiscreteMeasure& mu0,
                                                const DiscreteMeasure& mu1,
                                                const std::vector<double>& t_grid = default_t_grid(),
                                                double tol = 1e-9) {
  const double f0 = eval(f, mu0), f1 = eval(f, mu1);
  if (f0 == kInfinity || f1 == kInfinity)
    throw InvalidArgument("geodesic convexity check needs both endpoints in the domain");
  const auto plan = solve_ot(mu0, mu1).plan;
  ConvexityReport r;
  r.worst_violation = -kInfinity;
  for (double t : t_grid) {
    auto mt = interpolate(plan, t);
    const double v = eval(f, mt) - (1.0 - t) * f0 - t * f1;
    if (v > r.worst_violation) {
      r.worst_violation = v;
      r.witness_t = t;
      r.witness_measure = std::move(mt);
    }
  }
  r.satisfied = r.worst_violation <= tol;
  return r;
}

/// Checks, along the generalized geodesic with the given base,
///   F(mu_t) <= (1-t) F(mu0) + t F(mu1)
/// and, with Phi(nu) = F(nu) + W2^2(nu, base) / (2 tau),
///   Phi(mu_t) <= (1-t) Phi(mu0) + t Phi(mu1) - t (1-t) C / (2 tau)
/// where C is the cost of the (1,2)-slot coupling of the glued plan.
inline ConvexityReport check_generalized_convexity(const Functional& f, const DiscreteMeasure& base,
                                                   const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                                                   double tau,
                                                   const std::vector<double>& t_grid = default_t_grid(),
                                                   double tol = 1e-7) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  const double f0 = eval(f, mu0), f1 = eval(f, mu1);
  if (f0 == kInfinity || f1 == kInfinity || eval(f, base) == kInfinity)
    throw InvalidArgument("generalized convexity check needs all three measures in the domain");
  const auto gamma = generalized_geodesic_plan(base, mu0, mu1);
  const double modulus = coupling_cost(gamma, 1, 2);
  const double phi0 = f0 + w2_squared(mu0, base) / (2.0 * tau);
  const double phi1 = f1 + w2_squared(mu1, base) / (2.0 * tau);
  ConvexityReport r;
  r.worst_violation = r.worst_plain = r.worst_strengthened = -kInfinity;
  for (double t : t_grid) {
    auto mt = interpolate(gamma, 1, 2, t);
    const double ft = eval(f, mt);
    const double plain = ft - (1.0 - t) * f0 - t * f1;
    const double strong = ft + w2_squared(mt, base) / (2.0 * tau) - (1.0 - t) * phi0 - t * phi1 +
                          t * (1.0 - t) * modulus / (2.0 * tau);
    r.worst_plain = std::max(r.worst_plain, plain);
    r.worst_strengthened = std::max(r.worst_strengthened, strong);
    const double v = std::max(plain, strong);
    if (v > r.worst_violation) {
      r.worst_violation = v;
      r.witness_t = t;
      r.witness_measure = std::move(mt);
    }
  }
  r.satisfied = r.worst_violation <= tol;
  return r;
}

/// Image of mu under the proximal map of the potential.
inline DiscreteMeasure prox_potential(const Functional& f, double tau, const DiscreteMeasure& mu) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  const auto* v = f.as<Potential>();
  if (!v) throw InvalidArgument("prox_potential needs a potential energy");
  if (!v->prox) throw SolverError("no proximal map available for " + f.name());
  return pushforward(mu, [&](const Point& x) { return v->prox(tau, x); });
}

}  // namespace wass

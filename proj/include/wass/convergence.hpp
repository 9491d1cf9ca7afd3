#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wass/random.hpp"
#include "wass/tail.hpp"
#include "wass/transport.hpp"

namespace wass {

using MeasureSequence = std::vector<DiscreteMeasure>;

namespace detail {

inline std::size_t check_sequence(const MeasureSequence& seq, const DiscreteMeasure& limit) {
  if (seq.empty()) throw InvalidArgument("measure sequence is empty");
  for (const auto& m : seq)
    if (m.dim() != limit.dim()) throw InvalidArgument("sequence and limit dimensions differ");
  return seq.size();
}

inline std::size_t resolve_window(std::optional<std::size_t> window, std::size_t len) {
  return window ? *window : default_window(len);
}

/// The second window reported next to the requested one.
inline std::size_t companion_window(std::size_t window, std::size_t len) {
  return std::min(len, 2 * window);
}

}  // namespace detail

enum class Growth { bounded_lipschitz, subquadratic };

/// |f(x)| <= constant * (1 + |x|)^exponent
struct TestFunction {
  std::string name;
  std::function<double(const Point&)> f;
  double constant = 1.0;
  double exponent = 0.0;
};

class TestFunctionFamily {
 public:
  TestFunctionFamily(std::string name, Growth growth, std::size_t dim, std::vector<TestFunction> members)
      : name_(std::move(name)), growth_(growth), dim_(dim), members_(std::move(members)) {
    if (members_.empty()) throw InvalidArgument("test function family is empty");
    for (const auto& m : members_)
      if (!(m.exponent < 2.0)) throw InvalidArgument("test functions must grow slower than |x|^2");
  }

  /// 20 seeded cos(<k,x> + b) (1 + |x|^2)^(alpha/2), alpha alternating 0 and 1/2,
  /// plus the coordinate ramps clipped at radius 100.
  static TestFunctionFamily standard(std::size_t dim, std::uint64_t seed = 0) {
    Rng rng(seed);
    std::vector<TestFunction> out;
    for (int j = 0; j < 20; ++j) {
      Point k = Point::zeros(dim);
      for (std::size_t c = 0; c < dim; ++c) k[c] = rng.uniform(-2.0, 2.0);
      const double b = rng.uniform(0.0, 6.283185307179586);
      const double alpha = j % 2 == 0 ? 0.0 : 0.5;
      out.push_back({"wave" + std::to_string(j),
                     [k, b, alpha](const Point& x) {
                       return std::cos(dot(k, x) + b) * std::pow(1.0 + norm2(x), alpha / 2.0);
                     },
                     1.0, alpha});
    }
    append_ramps(out, dim, 100.0);
    return TestFunctionFamily("standard", Growth::subquadratic, dim, std::move(out));
  }

  /// Waves with |k| <= 1 and ramps clipped at 1: bounded and 1-Lipschitz.
  static TestFunctionFamily bounded_lipschitz(std::size_t dim, std::uint64_t seed = 0) {
    Rng rng(seed);
    std::vector<TestFunction> out;
    for (int j = 0; j < 20; ++j) {
      Point k = Point::zeros(dim);
      for (std::size_t c = 0; c < dim; ++c) k[c] = rng.uniform(-1.0, 1.0);
      const double n = norm(k);
      if (n > 1.0) k *= 1.0 / n;
      const double b = rng.uniform(0.0, 6.283185307179586);
      out.push_back({"wave" + std::to_string(j), [k, b](const Point& x) { return std::cos(dot(k, x) + b); }, 1.0,
                     0.0});
    }
    append_ramps(out, dim, 1.0);
    return TestFunctionFamily("bounded_lipschitz", Growth::bounded_lipschitz, dim, std::move(out));
  }

  const std::string& name() const noexcept { return name_; }
  Growth growth() const noexcept { return growth_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<TestFunction>& members() const noexcept { return members_; }

  TestFunctionFamily with(TestFunction extra) const {
    auto m = members_;
    m.push_back(std::move(extra));
    return TestFunctionFamily(name_, growth_, dim_, std::move(m));
  }

  TestFunctionFamily reversed() const {
    return TestFunctionFamily(name_, growth_, dim_, {members_.rbegin(), members_.rend()});
  }

  /// Checks every member's declared growth bound on the given points.
  bool respects_growth(const std::vector<Point>& samples) const {
    for (const auto& m : members_)
      for (const auto& x : samples)
        if (std::abs(m.f(x)) > m.constant * std::pow(1.0 + norm(x), m.exponent) * (1.0 + 1e-12)) return false;
    return true;
  }

 private:
  static void append_ramps(std::vector<TestFunction>& out, std::size_t dim, double radius) {
    for (std::size_t c = 0; c < dim; ++c)
      out.push_back({"ramp" + std::to_string(c),
                     [c, radius](const Point& x) { return std::clamp(x[c], -radius, radius); },
                     radius <= 1.0 ? radius : 1.0, radius <= 1.0 ? 0.0 : 1.0});
  }

  std::string name_;
  Growth growth_;
  std::size_t dim_;
  std::vector<TestFunction> members_;
};

inline double integrate(const std::function<double(const Point&)>& f, const DiscreteMeasure& mu) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += mu.weight(i) * f(mu.point(i));
  return s;
}

/// Per term, the sup over the family of |int f dmu_n - int f dmu|.
inline std::vector<double> narrow_discrepancy(const MeasureSequence& seq, const DiscreteMeasure& limit,
                                              const TestFunctionFamily& family) {
  detail::check_sequence(seq, limit);
  if (family.dim() != limit.dim()) throw InvalidArgument("test family dimension differs from the measures");
  std::vector<double> lim;
  for (const auto& m : family.members()) lim.push_back(integrate(m.f, limit));
  std::vector<double> out;
  out.reserve(seq.size());
  for (const auto& mu : seq) {
    double worst = 0.0;
    for (std::size_t j = 0; j < lim.size(); ++j)
      worst = std::max(worst, std::abs(integrate(family.members()[j].f, mu) - lim[j]));
    out.push_back(worst);
  }
  return out;
}

struct SWConvergenceOptions {
  double p = 2.0;
  double q = 2.0;
  std::optional<std::size_t> window = std::nullopt;
  double tolerance = 1e-3;
  double moment_cap = 1e6;
};

struct ConvergenceReport {
  std::size_t window = 0;
  std::vector<double> discrepancies;
  /// |p-moment of the x-marginal of mu_n - that of the limit|
  std::vector<double> moment_p_errors;
  /// q-moment of the y-marginal of mu_n
  std::vector<double> moments_q;
  double narrow_discrepancy = 0.0;  // tail max
  double moment_p_error = 0.0;      // tail max
  double moment_q_sup = 0.0;
  bool narrow_converged = false;
  bool moment_p_converged = false;
  bool moment_q_bounded = false;
  bool verdict = false;
};

namespace detail {

inline double split_moment(const DiscreteMeasure& mu, std::size_t begin, std::size_t end, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double r2 = 0.0;
    for (std::size_t c = begin; c < end; ++c) r2 += mu.point(i)[c] * mu.point(i)[c];
    s += mu.weight(i) * std::pow(std::sqrt(r2), p);
  }
  return s;
}

}  // namespace detail

/// Measures live on R^x_dim x R^(d - x_dim). The verdict is the conjunction of
/// (i) narrow discrepancy tail <= tolerance, (ii) x-marginal p-moment tail error
/// <= tolerance, (iii) y-marginal q-moments bounded by moment_cap.
inline ConvergenceReport check_sw_convergence(const MeasureSequence& seq, const DiscreteMeasure& limit,
                                              std::size_t x_dim, const TestFunctionFamily& family,
                                              const SWConvergenceOptions& opt = {}) {
  const std::size_t len = detail::check_sequence(seq, limit);
  if (!(opt.p >= 1.0)) throw InvalidArgument("p must be >= 1");
  if (!(opt.q > 1.0)) throw InvalidArgument("q must be > 1");
  if (x_dim > limit.dim()) throw InvalidArgument("x dimension exceeds the measure dimension");
  const std::size_t d = limit.dim();
  ConvergenceReport r;
  r.window = detail::resolve_window(opt.window, len);
  r.discrepancies = narrow_discrepancy(seq, limit, family);
  const double lim_p = detail::split_moment(limit, 0, x_dim, opt.p);
  for (const auto& mu : seq) {
    r.moment_p_errors.push_back(std::abs(detail::split_moment(mu, 0, x_dim, opt.p) - lim_p));
    r.moments_q.push_back(detail::split_moment(mu, x_dim, d, opt.q));
  }
  r.narrow_discrepancy = tail_max(r.discrepancies, r.window);
  r.moment_p_error = tail_max(r.moment_p_errors, r.window);
  r.moment_q_sup = *std::max_element(r.moments_q.begin(), r.moments_q.end());
  r.narrow_converged = r.narrow_discrepancy <= opt.tolerance;
  r.moment_p_converged = r.moment_p_error <= opt.tolerance;
  r.moment_q_bounded = r.moment_q_sup <= opt.moment_cap;
  r.verdict = r.narrow_converged && r.moment_p_converged && r.moment_q_bounded;
  return r;
}

struct OpialReport {
  std::size_t window = 0;
  double residual = 0.0;
  std::size_t companion_window = 0;
  double companion_residual = 0.0;
  std::vector<double> w2sq_to_probe;
  std::vector<double> w2sq_to_limit;
  double probe_to_limit = 0.0;  // squared
};

/// tail_liminf W2^2(mu_n, probe) - W2^2(probe, limit) - tail_liminf W2^2(mu_n, limit),
/// at the requested window and at twice that window.
inline OpialReport opial_residual(const MeasureSequence& seq, const DiscreteMeasure& limit,
                                  const DiscreteMeasure& probe, std::optional<std::size_t> window = {}) {
  const std::size_t len = detail::check_sequence(seq, limit);
  if (probe.dim() != limit.dim()) throw InvalidArgument("probe dimension differs from the limit");
  OpialReport r;
  r.window = detail::resolve_window(window, len);
  r.companion_window = detail::companion_window(r.window, len);
  for (const auto& mu : seq) {
    r.w2sq_to_probe.push_back(w2_squared(mu, probe));
    r.w2sq_to_limit.push_back(w2_squared(mu, limit));
  }
  r.probe_to_limit = w2_squared(probe, limit);
  auto at = [&](std::size_t w) {
    return tail_liminf(r.w2sq_to_probe, w) - r.probe_to_limit - tail_liminf(r.w2sq_to_limit, w);
  };
  r.residual = at(r.window);
  r.companion_residual = at(r.companion_window);
  return r;
}

struct TimedMeasure {
  double t;
  DiscreteMeasure measure;
};

struct CandidateReport {
  std::vector<double> distances;
  /// largest increase of t -> W2(mu(t), candidate) between consecutive samples
  double max_increase = 0.0;
  bool monotone = false;
  /// tail minimum of the distances
  double limit_value = 0.0;
  bool is_limit_point = false;
};

struct LimitSetReport {
  std::size_t window = 0;
  std::vector<CandidateReport> candidates;
  /// all candidates that are monotone limit points lie within `tolerance` of each other
  bool unique_limit = true;
};

inline LimitSetReport limit_set_probe(const std::vector<TimedMeasure>& trace,
                                      const std::vector<DiscreteMeasure>& candidates,
                                      std::optional<std::size_t> window = {}, double tolerance = 1e-3,
                                      double monotone_tol = 1e-7) {
  if (trace.empty()) throw InvalidArgument("trace is empty");
  for (std::size_t k = 1; k < trace.size(); ++k)
    if (!(trace[k].t > trace[k - 1].t)) throw InvalidArgument("trace times must increase");
  LimitSetReport r;
  r.window = detail::resolve_window(window, trace.size());
  std::vector<std::size_t> passing;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    CandidateReport cr;
    for (const auto& s : trace) cr.distances.push_back(w2(s.measure, candidates[c]));
    for (std::size_t k = 1; k < cr.distances.size(); ++k)
      cr.max_increase = std::max(cr.max_increase, cr.distances[k] - cr.distances[k - 1]);
    cr.monotone = cr.max_increase <= monotone_tol;
    cr.limit_value = tail_liminf(cr.distances, r.window);
    cr.is_limit_point = cr.limit_value <= tolerance;
    if (cr.monotone && cr.is_limit_point) passing.push_back(c);
    r.candidates.push_back(std::move(cr));
  }
  for (std::size_t a = 0; a < passing.size(); ++a)
    for (std::size_t b = a + 1; b < passing.size(); ++b)
      if (w2(candidates[passing[a]], candidates[passing[b]]) > tolerance) r.unique_limit = false;
  return r;
}

}  // namespace wass

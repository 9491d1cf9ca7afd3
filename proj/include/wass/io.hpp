#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wass/convergence.hpp"
#include "wass/schemes.hpp"

namespace wass::io {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal form; empty for NaN so CSV cells stay blank.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// JSON has no infinities; they are written as the strings "inf" and "-inf".
inline Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

inline Json to_json(const Point& p) { return Json(p.vec()); }

inline Json to_json(const DiscreteMeasure& mu) {
  Json pts = Json::array();
  for (const auto& p : mu.points()) pts.push_back(to_json(p));
  return Json{{"points", pts}, {"weights", mu.weights()}};
}

inline Json to_json(const TransportPlan& plan) {
  Json e = Json::array();
  for (const auto& x : plan.entries()) e.push_back(Json{{"source", x.source}, {"target", x.target}, {"mass", x.mass}});
  return e;
}

inline Json to_json(const ConvexityReport& r) {
  Json j{{"satisfied", r.satisfied}, {"worst_violation", number(r.worst_violation)}, {"witness_t", r.witness_t}};
  if (r.witness_measure) j["witness_measure"] = to_json(*r.witness_measure);
  return j;
}

inline Json to_json(const ConvergenceReport& r) {
  return Json{{"window", r.window},
              {"narrow_discrepancy", r.narrow_discrepancy},
              {"moment_p_error", r.moment_p_error},
              {"moment_q_sup", r.moment_q_sup},
              {"narrow_converged", r.narrow_converged},
              {"moment_p_converged", r.moment_p_converged},
              {"moment_q_bounded", r.moment_q_bounded},
              {"verdict", r.verdict},
              {"discrepancies", r.discrepancies},
              {"moment_p_errors", r.moment_p_errors},
              {"moments_q", r.moments_q}};
}

inline Json to_json(const OpialReport& r) {
  return Json{{"window", r.window},
              {"residual", r.residual},
              {"companion_window", r.companion_window},
              {"companion_residual", r.companion_residual},
              {"probe_to_limit", r.probe_to_limit},
              {"w2sq_to_probe", r.w2sq_to_probe},
              {"w2sq_to_limit", r.w2sq_to_limit}};
}

/// Column-oriented CSV: every column has one value per row.
class Table {
 public:
  void add(std::string name, std::vector<double> values) {
    names_.push_back(std::move(name));
    cols_.push_back(std::move(values));
  }

  std::string str() const {
    std::string out;
    for (std::size_t c = 0; c < names_.size(); ++c) out += (c ? "," : "") + names_[c];
    out += '\n';
    const std::size_t rows = cols_.empty() ? 0 : cols_[0].size();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols_.size(); ++c) {
        if (c) out += ',';
        if (r < cols_[c].size()) out += format_double(cols_[c][r]);
      }
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> cols_;
};

}  // namespace wass::io

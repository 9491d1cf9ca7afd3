#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "wass/point.hpp"

namespace wass::detail {

/// Result of a dense transportation problem.
struct TransportLp {
  std::vector<double> flow;  // row-major m x n
  std::vector<double> u;     // row potentials
  std::vector<double> v;     // column potentials
  std::size_t pivots = 0;
};

// Primal simplex on the bipartite transportation graph. The basis is kept as
// a spanning tree of m + n - 1 cells (degenerate zero-flow cells included).
// Pivoting follows Bland's rule: the entering cell is the first eligible one
// in row-major order and ties in the ratio test leave by smallest cell index.
class TransportationSimplex {
 public:
  TransportationSimplex(std::vector<double> supply, std::vector<double> demand,
                        std::vector<double> cost)
      : m_(supply.size()), n_(demand.size()), supply_(std::move(supply)),
        demand_(std::move(demand)), cost_(std::move(cost)) {
    if (m_ == 0 || n_ == 0) throw InvalidArgument("empty transportation problem");
    if (cost_.size() != m_ * n_) throw InvalidArgument("cost matrix has wrong size");
    double cmax = 0.0;
    for (double c : cost_) cmax = std::max(cmax, std::abs(c));
    eps_ = 1e-12 * std::max(1.0, cmax);
  }

  TransportLp solve(std::size_t max_pivots = 0) {
    if (max_pivots == 0) max_pivots = 100000 + 50 * m_ * n_;
    initial_basis();
    TransportLp out;
    for (;;) {
      compute_potentials();
      std::size_t enter = npos;
      for (std::size_t c = 0; c < m_ * n_ && enter == npos; ++c) {
        if (in_basis_[c]) continue;
        const std::size_t i = c / n_, j = c % n_;
        if (cost_[c] - u_[i] - v_[j] < -eps_) enter = c;
      }
      if (enter == npos) break;
      if (out.pivots++ >= max_pivots)
        throw SolverError("transportation simplex exceeded " + std::to_string(max_pivots) +
                          " pivots");
      pivot(enter);
    }
    out.flow = flow_;
    out.u = u_;
    out.v = v_;
    return out;
  }

 private:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  // North-west corner rule; advancing exactly one index per cell yields a
  // staircase spanning tree with m + n - 1 cells.
  void initial_basis() {
    flow_.assign(m_ * n_, 0.0);
    in_basis_.assign(m_ * n_, false);
    basis_.clear();
    std::vector<double> r = supply_, s = demand_;
    std::size_t i = 0, j = 0;
    for (;;) {
      double x;
      if (j == n_ - 1)
        x = r[i];
      else if (i == m_ - 1)
        x = s[j];
      else
        x = std::min(r[i], s[j]);
      x = std::max(x, 0.0);
      const std::size_t c = i * n_ + j;
      flow_[c] = x;
      in_basis_[c] = true;
      basis_.push_back(c);
      if (x == r[i]) r[i] = 0.0; else r[i] -= x;
      if (x == s[j]) s[j] = 0.0; else s[j] -= x;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (j == n_ - 1)
        ++i;
      else if (i == m_ - 1)
        ++j;
      else if (r[i] == 0.0)
        ++i;
      else
        ++j;
    }
  }

  void build_adjacency() {
    adj_.assign(m_ + n_, {});
    for (std::size_t c : basis_) {
      const std::size_t i = c / n_, j = c % n_;
      adj_[i].push_back(c);
      adj_[m_ + j].push_back(c);
    }
  }

  void compute_potentials() {
    build_adjacency();
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    std::vector<bool> seen(m_ + n_, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t c : adj_[node]) {
        const std::size_t i = c / n_, j = c % n_;
        const std::size_t other = node < m_ ? m_ + j : i;
        if (seen[other]) continue;
        seen[other] = true;
        if (other >= m_)
          v_[j] = cost_[c] - u_[i];
        else
          u_[i] = cost_[c] - v_[j];
        stack.push_back(other);
      }
    }
    for (bool b : seen)
      if (!b) throw SolverError("transportation basis is not a spanning tree");
  }

  void pivot(std::size_t enter) {
    const std::size_t ei = enter / n_, ej = enter % n_;
    // Tree path from column node ej to row node ei.
    std::vector<std::size_t> parent_cell(m_ + n_, npos);
    std::vector<bool> seen(m_ + n_, false);
    std::vector<std::size_t> queue{m_ + ej};
    seen[m_ + ej] = true;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t node = queue[q];
      if (node == ei) break;
      for (std::size_t c : adj_[node]) {
        const std::size_t i = c / n_, j = c % n_;
        const std::size_t other = node < m_ ? m_ + j : i;
        if (seen[other]) continue;
        seen[other] = true;
        parent_cell[other] = c;
        queue.push_back(other);
      }
    }
    std::vector<std::size_t> path;  // cells ordered from row ei back to column ej
    for (std::size_t node = ei; node != m_ + ej;) {
      const std::size_t c = parent_cell[node];
      if (c == npos) throw SolverError("entering cell does not close a cycle");
      path.push_back(c);
      const std::size_t i = c / n_, j = c % n_;
      node = node < m_ ? m_ + j : i;
    }
    std::reverse(path.begin(), path.end());  // now from column ej to row ei
    // Along the cycle, path cells alternate -, +, -, ... starting at column ej.
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = npos;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const std::size_t c = path[k];
      if (flow_[c] < theta || (flow_[c] == theta && c < leave)) {
        theta = flow_[c];
        leave = c;
      }
    }
    flow_[enter] = theta;
    for (std::size_t k = 0; k < path.size(); ++k) {
      const std::size_t c = path[k];
      if (k % 2 == 0)
        flow_[c] = c == leave ? 0.0 : std::max(0.0, flow_[c] - theta);
      else
        flow_[c] += theta;
    }
    in_basis_[leave] = false;
    in_basis_[enter] = true;
    *std::find(basis_.begin(), basis_.end(), leave) = enter;
  }

  std::size_t m_, n_;
  std::vector<double> supply_, demand_, cost_;
  double eps_;
  std::vector<double> flow_, u_, v_;
  std::vector<bool> in_basis_;
  std::vector<std::size_t> basis_;
  std::vector<std::vector<std::size_t>> adj_;
};

}  // namespace wass::detail

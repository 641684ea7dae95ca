#include "ace/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ace::matching {

WeightedBipartiteGraph::WeightedBipartiteGraph(std::vector<std::vector<double>> weights) {
  left_ = weights.size();
  right_ = left_ ? weights[0].size() : 0;
  w_.reserve(left_ * right_);
  for (const auto& row : weights) {
    if (row.size() != right_) throw std::invalid_argument("weight matrix is not rectangular");
    for (double x : row) {
      if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("edge weight outside [0, 1]: " + std::to_string(x));
      w_.push_back(x);
    }
  }
}

WeightedBipartiteGraph::WeightedBipartiteGraph(std::size_t left, std::size_t right)
    : left_(left), right_(right), w_(left * right, 0.0) {}

void WeightedBipartiteGraph::set_weight(std::size_t l, std::size_t r, double value) {
  if (l >= left_ || r >= right_) throw std::out_of_range("edge index out of range");
  if (!(value >= 0.0 && value <= 1.0)) throw std::invalid_argument("edge weight outside [0, 1]");
  w_[l * right_ + r] = value;
}

void finalize_report(MatchReport& r, double left, double right) {
  r.fp = left - r.tp;
  r.fn = right - r.tp;
  r.precision = left > 0.0 ? r.tp / left : 0.0;
  r.recall = right > 0.0 ? r.tp / right : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
}

namespace {

// Min-cost assignment for an n x m cost matrix with n <= m (1-indexed
// potentials). Returns the minimal total cost.
double hungarian_min_cost(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return 0.0;
  const std::size_t m = cost[0].size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j]) total += cost[p[j] - 1][j - 1];
  return total;
}

}  // namespace

double max_assignment_value(const std::vector<std::vector<double>>& weights) {
  const std::size_t rows = weights.size();
  const std::size_t cols = rows ? weights[0].size() : 0;
  if (rows == 0 || cols == 0) return 0.0;
  // Weights are non-negative, so a maximum assignment never needs padding
  // beyond min(rows, cols) matched edges; orient so rows <= cols.
  std::vector<std::vector<double>> cost;
  if (rows <= cols) {
    cost.assign(rows, std::vector<double>(cols));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) cost[i][j] = -weights[i][j];
  } else {
    cost.assign(cols, std::vector<double>(rows));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) cost[j][i] = -weights[i][j];
  }
  return -hungarian_min_cost(cost);
}

MatchReport max_weight_match(const WeightedBipartiteGraph& g) {
  MatchReport report;
  const std::size_t L = g.left_count(), R = g.right_count();
  if (L == 0 || R == 0) {
    finalize_report(report, static_cast<double>(L), static_cast<double>(R));
    return report;
  }

  auto sub_value = [&](std::size_t from_row, const std::vector<char>& col_free) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < R; ++j)
      if (col_free[j]) cols.push_back(j);
    if (from_row >= L || cols.empty()) return 0.0;
    std::vector<std::vector<double>> w(L - from_row, std::vector<double>(cols.size()));
    for (std::size_t i = from_row; i < L; ++i)
      for (std::size_t k = 0; k < cols.size(); ++k) w[i - from_row][k] = g.weight(i, cols[k]);
    return max_assignment_value(w);
  };

  std::vector<char> open_cols(R, 1);
  const double target = sub_value(0, open_cols);
  const double tol = 1e-9 * std::max(1.0, target);
  double acc = 0.0;

  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < R; ++j) {
      const double w = g.weight(i, j);
      if (!open_cols[j] || w <= 0.0) continue;
      open_cols[j] = 0;
      if (acc + w + sub_value(i + 1, open_cols) >= target - tol) {
        acc += w;
        report.pairs.emplace_back(i, j);
        break;
      }
      open_cols[j] = 1;
    }
  }

  for (const auto& [l, r] : report.pairs) report.tp += g.weight(l, r);
  finalize_report(report, static_cast<double>(L), static_cast<double>(R));
  return report;
}

}  // namespace ace::matching

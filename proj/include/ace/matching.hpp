#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace ace::matching {

/// Complete bipartite graph between generated (left) and reference (right)
/// utterances. Weights are row-major and must lie in [0, 1].
class WeightedBipartiteGraph {
 public:
  WeightedBipartiteGraph() = default;
  /// Throws std::invalid_argument if weights is not rectangular or holds a
  /// value outside [0, 1].
  explicit WeightedBipartiteGraph(std::vector<std::vector<double>> weights);
  WeightedBipartiteGraph(std::size_t left, std::size_t right);

  std::size_t left_count() const noexcept { return left_; }
  std::size_t right_count() const noexcept { return right_; }
  double weight(std::size_t l, std::size_t r) const { return w_[l * right_ + r]; }
  void set_weight(std::size_t l, std::size_t r, double value);

 private:
  std::size_t left_ = 0;
  std::size_t right_ = 0;
  std::vector<double> w_;
};

struct MatchReport {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (left, right), ascending left
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Fills fp/fn/precision/recall/f1 from tp and the side sizes.
void finalize_report(MatchReport& report, double left_count, double right_count);

/// Exact maximum-weight matching (Hungarian algorithm on the zero-padded square
/// matrix). Only positive-weight edges are reported. Among optimal matchings
/// the result is the lexicographically smallest: rows are fixed in ascending
/// order, each to the smallest column that still admits an optimal completion,
/// and a row stays unmatched only when no positive-weight column does.
MatchReport max_weight_match(const WeightedBipartiteGraph& graph);

/// Value of a maximum-weight assignment of a dense rows x cols matrix
/// (rows/cols may differ). Exposed for tests and for the tie-break search.
double max_assignment_value(const std::vector<std::vector<double>>& weights);

}  // namespace ace::matching

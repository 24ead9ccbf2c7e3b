#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pgt {

/// One incoming link of node i: weight w_ij applied to data received from j.
struct InLink {
  int from;
  double weight;
};

/// Weight-balanced directed communication graph among n vehicles.
///
/// A stored entry (i, j) -> w_ij means node i weighs information received
/// from node j by w_ij > 0, i.e. j is an in-neighbour of i. Construction
/// validates positivity, weight balance (sum_j w_ij == sum_j w_ji per node)
/// and connectivity; a graph that fails any of them is never created.
class CommGraph {
 public:
  using WeightMap = std::map<std::pair<int, int>, double>;

  CommGraph(int n, WeightMap weights);

  int size() const noexcept { return n_; }
  const WeightMap& weights() const noexcept { return weights_; }
  double weight(int i, int j) const;

  /// In-neighbours of node i in ascending index order.
  const std::vector<InLink>& in_links(int i) const { return in_links_[static_cast<std::size_t>(i)]; }

  double row_sum(int i) const;
  double column_sum(int i) const;

  /// max_i |sum_j w_ij - sum_j w_ji|
  double balance_defect() const;

 private:
  int n_;
  WeightMap weights_;
  std::vector<std::vector<InLink>> in_links_;
};

struct LaplacianSpectrum {
  /// Real parts, sorted descending. The first entry is the zero eigenvalue.
  Eigen::VectorXd eigenvalues;
  /// |second largest eigenvalue|, the algebraic connectivity.
  double lambda2_abs = 0.0;
};

/// Undirected cycle 0-1-...-(n-1)-0, each edge stored in both directions with weight w.
CommGraph build_cycle(int n, double w);

/// W-bar: off-diagonal w_ij, diagonal -sum_j w_ij, so every row sums to zero.
Eigen::MatrixXd laplacian(const CommGraph& g);

LaplacianSpectrum spectrum(const CommGraph& g);

/// Sufficient step rate |lambda_2| / eta for gradient tracking.
double step_bound(const CommGraph& g, double eta);
double step_bound(double lambda2_abs, double eta);

/// sum_i sum_{j in N_i} w_ij (m_j - m_i) for per-node messages stacked as columns.
/// Vanishes on weight-balanced graphs for any choice of messages.
Eigen::VectorXd consensus_increment_sum(const CommGraph& g, const Eigen::MatrixXd& messages);

}  // namespace pgt

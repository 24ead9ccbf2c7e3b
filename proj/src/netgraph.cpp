#include "pgt/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "pgt/errors.hpp"

namespace pgt {

namespace {

constexpr double kBalanceTol = 1e-12;
constexpr double kZeroEigenTol = 1e-9;
constexpr double kImagTruncation = 1e-9;

struct SortedEigen {
  std::vector<std::complex<double>> values;
};

SortedEigen sorted_eigenvalues(const Eigen::MatrixXd& lap) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(lap, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("Laplacian eigendecomposition failed");
  }
  SortedEigen out;
  const auto& ev = solver.eigenvalues();
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    std::complex<double> z = ev(k);
    if (std::abs(z.imag()) < kImagTruncation) z = {z.real(), 0.0};
    out.values.push_back(z);
  }
  std::stable_sort(out.values.begin(), out.values.end(),
                   [](const auto& a, const auto& b) { return a.real() > b.real(); });
  return out;
}

double zero_tolerance(const CommGraph& g) {
  double max_degree = 1.0;
  for (int i = 0; i < g.size(); ++i) max_degree = std::max(max_degree, g.row_sum(i));
  return kZeroEigenTol * max_degree;
}

std::size_t count_zero_eigenvalues(const SortedEigen& e, double tol) {
  return static_cast<std::size_t>(std::count_if(e.values.begin(), e.values.end(),
                                                [tol](const auto& z) { return std::abs(z) <= tol; }));
}

}  // namespace

CommGraph::CommGraph(int n, WeightMap weights) : n_(n), weights_(std::move(weights)) {
  if (n_ < 1) throw InvalidParameter("graph needs at least one node, got n=" + std::to_string(n_));
  in_links_.resize(static_cast<std::size_t>(n_));
  for (const auto& [edge, w] : weights_) {
    const auto [i, j] = edge;
    if (i < 0 || i >= n_ || j < 0 || j >= n_) {
      throw InvalidParameter("edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of range for n=" +
                             std::to_string(n_));
    }
    if (i == j) throw InvalidParameter("self-loop at node " + std::to_string(i));
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw InvalidParameter("weight of edge (" + std::to_string(i) + "," + std::to_string(j) +
                             ") must be positive, got " + std::to_string(w));
    }
    in_links_[static_cast<std::size_t>(i)].push_back({j, w});
  }

  for (int i = 0; i < n_; ++i) {
    const double out = row_sum(i);
    const double in = column_sum(i);
    if (std::abs(out - in) > kBalanceTol * std::max(1.0, std::max(out, in))) {
      throw InvalidParameter("graph is not weight-balanced at node " + std::to_string(i) + ": sum_j w_ij=" +
                             std::to_string(out) + " vs sum_j w_ji=" + std::to_string(in));
    }
  }

  if (n_ > 1) {
    const auto eig = sorted_eigenvalues(laplacian(*this));
    if (count_zero_eigenvalues(eig, zero_tolerance(*this)) != 1) {
      throw ConnectivityError("communication graph is not connected");
    }
  }
}

double CommGraph::weight(int i, int j) const {
  const auto it = weights_.find({i, j});
  return it == weights_.end() ? 0.0 : it->second;
}

double CommGraph::row_sum(int i) const {
  double s = 0.0;
  for (const auto& link : in_links(i)) s += link.weight;
  return s;
}

double CommGraph::column_sum(int i) const {
  double s = 0.0;
  for (const auto& [edge, w] : weights_) {
    if (edge.second == i) s += w;
  }
  return s;
}

double CommGraph::balance_defect() const {
  double worst = 0.0;
  for (int i = 0; i < n_; ++i) worst = std::max(worst, std::abs(row_sum(i) - column_sum(i)));
  return worst;
}

CommGraph build_cycle(int n, double w) {
  if (n < 3) throw InvalidParameter("cycle needs n >= 3, got " + std::to_string(n));
  if (!(w > 0.0) || !std::isfinite(w)) throw InvalidParameter("cycle weight must be positive");
  CommGraph::WeightMap weights;
  for (int i = 0; i < n; ++i) {
    const int next = (i + 1) % n;
    weights[{i, next}] = w;
    weights[{next, i}] = w;
  }
  return CommGraph(n, std::move(weights));
}

Eigen::MatrixXd laplacian(const CommGraph& g) {
  const int n = g.size();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (const auto& link : g.in_links(i)) {
      lap(i, link.from) = link.weight;
      diag += link.weight;
    }
    lap(i, i) = -diag;
  }
  return lap;
}

LaplacianSpectrum spectrum(const CommGraph& g) {
  LaplacianSpectrum out;
  if (g.size() == 1) {
    out.eigenvalues = Eigen::VectorXd::Zero(1);
    return out;
  }
  const auto eig = sorted_eigenvalues(laplacian(g));
  if (count_zero_eigenvalues(eig, zero_tolerance(g)) != 1) {
    throw ConnectivityError("Laplacian has more than one zero eigenvalue");
  }
  out.eigenvalues.resize(static_cast<Eigen::Index>(eig.values.size()));
  for (std::size_t k = 0; k < eig.values.size(); ++k) {
    out.eigenvalues(static_cast<Eigen::Index>(k)) = eig.values[k].real();
  }
  out.eigenvalues(0) = 0.0;
  out.lambda2_abs = std::abs(eig.values[1]);
  return out;
}

double step_bound(double lambda2_abs, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw InvalidParameter("Lipschitz bound eta must be positive, got " + std::to_string(eta));
  }
  return lambda2_abs / eta;
}

double step_bound(const CommGraph& g, double eta) {
  if (!(eta > 0.0)) throw InvalidParameter("Lipschitz bound eta must be positive, got " + std::to_string(eta));
  return step_bound(spectrum(g).lambda2_abs, eta);
}

Eigen::VectorXd consensus_increment_sum(const CommGraph& g, const Eigen::MatrixXd& messages) {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(messages.rows());
  for (int i = 0; i < g.size(); ++i) {
    for (const auto& link : g.in_links(i)) {
      total.noalias() += link.weight * (messages.col(link.from) - messages.col(i));
    }
  }
  return total;
}

}  // namespace pgt

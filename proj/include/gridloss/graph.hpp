#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gridloss/errors.hpp"

namespace gridloss {

struct WeightedEdge {
  int u = 0;
  int v = 0;
  double weight = 1.0;
};

/// Undirected simple graph with strictly positive edge weights.
/// Missing edges are absent from the edge list, never stored as zero weights.
class WeightedGraph {
 public:
  WeightedGraph(int node_count, std::vector<WeightedEdge> edges)
      : n_(node_count), edges_(std::move(edges)) {
    validate();
  }

  int node_count() const { return n_; }
  const std::vector<WeightedEdge>& edges() const { return edges_; }

  /// True when every node is reachable from node 0.
  bool is_connected() const {
    std::vector<std::vector<int>> adj(n_);
    for (const auto& e : edges_) {
      adj[e.u].push_back(e.v);
      adj[e.v].push_back(e.u);
    }
    std::vector<char> seen(n_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      for (int y : adj[x]) {
        if (!seen[y]) {
          seen[y] = 1;
          ++count;
          stack.push_back(y);
        }
      }
    }
    return count == n_;
  }

  /// Copy with the weight of (u, v) increased by beta; the edge is created if absent.
  WeightedGraph with_added_weight(int u, int v, double beta) const {
    if (u < 0 || u >= n_ || v < 0 || v >= n_) {
      throw IndexOutOfRange("edge endpoint out of range");
    }
    std::vector<WeightedEdge> edges = edges_;
    auto it = std::find_if(edges.begin(), edges.end(), [&](const WeightedEdge& e) {
      return (e.u == u && e.v == v) || (e.u == v && e.v == u);
    });
    if (it != edges.end()) {
      it->weight += beta;
    } else {
      edges.push_back({u, v, beta});
    }
    return WeightedGraph(n_, std::move(edges));
  }

 private:
  void validate() const {
    if (n_ < 2) throw InvalidGraph("graph needs at least 2 nodes");
    std::set<std::pair<int, int>> seen;
    for (const auto& e : edges_) {
      if (e.u < 0 || e.u >= n_ || e.v < 0 || e.v >= n_) {
        throw InvalidGraph("edge endpoint out of range: (" + std::to_string(e.u) + ", " +
                           std::to_string(e.v) + ")");
      }
      if (e.u == e.v) throw InvalidGraph("self-loop at node " + std::to_string(e.u));
      if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
        throw InvalidGraph("edge weight must be a positive finite number");
      }
      if (!seen.insert(std::minmax(e.u, e.v)).second) {
        throw InvalidGraph("duplicate edge (" + std::to_string(e.u) + ", " +
                           std::to_string(e.v) + ")");
      }
    }
  }

  int n_;
  std::vector<WeightedEdge> edges_;
};

/// Weighted Laplacian together with its Moore-Penrose pseudoinverse and
/// spectral data. eigenvalues are nondecreasing; eigenvectors holds the
/// matching orthonormal eigenvectors as columns. Immutable by convention.
struct LaplacianPair {
  Eigen::MatrixXd laplacian;
  Eigen::MatrixXd pinv;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  int node_count() const { return static_cast<int>(laplacian.rows()); }
};

/// Rank-one Laplacian perturbation: increase (or create) edge (i, j) by beta > 0.
struct EdgePerturbation {
  EdgePerturbation(int node_count, int i_, int j_, double beta_)
      : i(i_), j(j_), beta(beta_), incidence(Eigen::VectorXd::Zero(node_count)) {
    if (i < 0 || i >= node_count || j < 0 || j >= node_count) {
      throw IndexOutOfRange("perturbation endpoint out of range");
    }
    if (i == j) throw InvalidParameter("perturbation endpoints must differ");
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw InvalidParameter("perturbation weight must be positive");
    }
    incidence(i) = 1.0;
    incidence(j) = -1.0;
  }

  int i;
  int j;
  double beta;
  Eigen::VectorXd incidence;  // e_i - e_j
};

/// Builds the weighted Laplacian and its pseudoinverse (L + J/n)^-1 - J/n.
/// Connectivity is checked twice: by traversal (friendly message) and
/// spectrally via lambda_2 against a numerical-rank threshold.
inline LaplacianPair build_laplacian(const WeightedGraph& g) {
  if (!g.is_connected()) {
    throw DisconnectedGraph("graph is not connected: some nodes are unreachable from node 0");
  }
  const int n = g.node_count();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges()) {
    lap(e.u, e.u) += e.weight;
    lap(e.v, e.v) += e.weight;
    lap(e.u, e.v) -= e.weight;
    lap(e.v, e.u) -= e.weight;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
  if (es.info() != Eigen::Success) {
    throw Error("eigendecomposition of the Laplacian failed");
  }
  const Eigen::VectorXd evals = es.eigenvalues();
  if (evals(1) <= 1e-9 * evals(n - 1)) {
    throw DisconnectedGraph("graph is numerically disconnected (lambda_2 below rank threshold)");
  }

  const Eigen::MatrixXd ones_over_n = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::MatrixXd pinv =
      (lap + ones_over_n).ldlt().solve(Eigen::MatrixXd::Identity(n, n)) - ones_over_n;
  pinv = 0.5 * (pinv + pinv.transpose().eval());  // kill roundoff asymmetry

  return {std::move(lap), std::move(pinv), evals, es.eigenvectors()};
}

/// Effective resistance (e_i - e_j)^T L+ (e_i - e_j).
inline double effective_resistance(const LaplacianPair& lp, int i, int j) {
  const int n = lp.node_count();
  if (i < 0 || i >= n || j < 0 || j >= n) {
    throw IndexOutOfRange("node index out of range");
  }
  const double r = lp.pinv(i, i) + lp.pinv(j, j) - 2.0 * lp.pinv(i, j);
  return std::max(r, 0.0);
}

/// Kirchhoff index: half the sum of all pairwise resistances, equal to n tr(L+).
inline double total_effective_resistance(const LaplacianPair& lp) {
  return lp.node_count() * lp.pinv.trace();
}

/// Applies L' = L + beta m m^T and updates the pseudoinverse by the
/// Sherman-Morrison rank-one formula: L'^+ = L^+ - (L^+ m)(L^+ m)^T / (1/beta + m^T L^+ m).
/// Adding weight cannot disconnect the graph, so the update is always valid.
inline LaplacianPair perturb_edge(const LaplacianPair& lp, const EdgePerturbation& pert) {
  const int n = lp.node_count();
  if (pert.incidence.size() != n) {
    throw DimensionMismatch("perturbation size does not match Laplacian size");
  }
  Eigen::MatrixXd lap =
      lp.laplacian + pert.beta * (pert.incidence * pert.incidence.transpose());
  const Eigen::VectorXd u = lp.pinv * pert.incidence;
  const double denom = 1.0 / pert.beta + pert.incidence.dot(u);
  Eigen::MatrixXd pinv = lp.pinv - (u * u.transpose()) / denom;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
  if (es.info() != Eigen::Success) {
    throw Error("eigendecomposition of the perturbed Laplacian failed");
  }
  return {std::move(lap), std::move(pinv), es.eigenvalues(), es.eigenvectors()};
}

}  // namespace gridloss

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <random>
#include <vector>

#include "gridloss/covariance.hpp"
#include "gridloss/graph.hpp"
#include "gridloss/loss.hpp"

namespace gridloss::testing {

inline WeightedGraph path3() { return WeightedGraph(3, {{0, 1, 1.0}, {1, 2, 1.0}}); }

inline WeightedGraph path4() {
  return WeightedGraph(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
}

inline WeightedGraph cycle4() {
  return WeightedGraph(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 0, 1.0}});
}

inline WeightedGraph triangle() {
  return WeightedGraph(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}});
}

inline WeightedGraph k2() { return WeightedGraph(2, {{0, 1, 1.0}}); }

inline WeightedGraph complete4() {
  return WeightedGraph(
      4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {1, 2, 1.0}, {1, 3, 1.0}, {2, 3, 1.0}});
}

/// Star with center 0 and four leaves, unit weights.
inline WeightedGraph star5() {
  return WeightedGraph(5, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {0, 4, 1.0}});
}

/// Erdos-Renyi draw with uniform weights in [0.5, 2], retried until connected.
inline WeightedGraph random_connected_graph(std::mt19937_64& rng, int n, double edge_prob = 0.4,
                                            bool random_weights = true) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> weight(0.5, 2.0);
  for (;;) {
    std::vector<WeightedEdge> edges;
    for (int u = 0; u < n; ++u) {
      for (int v = u + 1; v < n; ++v) {
        if (coin(rng) < edge_prob) {
          edges.push_back({u, v, random_weights ? weight(rng) : 1.0});
        }
      }
    }
    if (edges.empty()) continue;
    WeightedGraph g(n, std::move(edges));
    if (g.is_connected()) return g;
  }
}

/// Random PSD covariance G G^T / n, optionally with whole rows/columns zeroed
/// (nodes without fluctuations). Retried until the total variance is solidly
/// positive.
inline CovarianceModel random_psd_covariance(std::mt19937_64& rng, int n,
                                             const std::vector<int>& zero_nodes = {}) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Eigen::MatrixXd g(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) g(r, c) = normal(rng);
    }
    Eigen::MatrixXd sigma = g * g.transpose() / n;
    for (int v : zero_nodes) {
      sigma.row(v).setZero();
      sigma.col(v).setZero();
    }
    if (sigma.sum() < 0.1) continue;
    return validate_covariance(sigma);
  }
}

inline LoadProfile random_balanced_mu(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd mu(n);
  for (int i = 0; i < n; ++i) mu(i) = normal(rng);
  mu.array() -= mu.mean();
  return LoadProfile(mu);
}

/// k distinct nodes of {0,..,n-1}, sorted.
inline std::vector<int> random_subset(std::mt19937_64& rng, int n, int k) {
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  std::vector<int> subset(pool.begin(), pool.begin() + k);
  std::sort(subset.begin(), subset.end());
  return subset;
}

/// Random vector on `support` rescaled to sum to one (resampled while the raw
/// sum is too close to zero for a stable rescale).
inline ControlVector random_feasible_control(std::mt19937_64& rng, int n,
                                             const std::vector<int>& support) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Eigen::VectorXd raw(support.size());
    for (int i = 0; i < raw.size(); ++i) raw(i) = normal(rng);
    const double s = raw.sum();
    if (std::abs(s) < 0.3) continue;
    return ControlVector::embed(raw / s, support, n);
  }
}

inline ControlVector random_full_control(std::mt19937_64& rng, int n) {
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  return random_feasible_control(rng, n, all);
}

/// The anticorrelated 4-node covariance: three independent unit-variance nodes
/// each negatively correlated with the fourth. PD, row sums (.5,.5,.5,-.5),
/// total variance 1.
inline CovarianceModel anticorrelated4() {
  Eigen::MatrixXd sigma(4, 4);
  sigma << 1, 0, 0, -0.5,  //
      0, 1, 0, -0.5,       //
      0, 0, 1, -0.5,       //
      -0.5, -0.5, -0.5, 1;
  return validate_covariance(sigma);
}

}  // namespace gridloss::testing

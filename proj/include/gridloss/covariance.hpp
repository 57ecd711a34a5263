#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gridloss/errors.hpp"

namespace gridloss {

/// Covariance model of the load fluctuations. The stochastic set S is derived
/// from the matrix itself: a node belongs to S iff its row is not identically
/// zero. Nodes outside S fluctuate by exactly zero.
class CovarianceModel {
 public:
  const Eigen::MatrixXd& matrix() const { return sigma_; }
  const std::vector<int>& stochastic_nodes() const { return stochastic_; }
  double total_variance() const { return total_variance_; }  // sigma^2 = 1' Sigma 1
  int size() const { return static_cast<int>(sigma_.rows()); }

  /// Row sums Sigma 1; entry i is Var(w_i) + sum_{j != i} Cov(w_i, w_j).
  Eigen::VectorXd row_sums() const { return sigma_ * Eigen::VectorXd::Ones(size()); }

  bool is_stochastic(int node) const {
    return std::binary_search(stochastic_.begin(), stochastic_.end(), node);
  }

  friend CovarianceModel validate_covariance(const Eigen::MatrixXd& raw);
  friend CovarianceModel iid_covariance(int n, double variance);

 private:
  CovarianceModel(Eigen::MatrixXd sigma, std::vector<int> stochastic, double total_variance)
      : sigma_(std::move(sigma)), stochastic_(std::move(stochastic)),
        total_variance_(total_variance) {}

  Eigen::MatrixXd sigma_;
  std::vector<int> stochastic_;
  double total_variance_;
};

/// Validates a raw matrix as a covariance model: symmetric, PSD, and with at
/// least one stochastic node (sigma^2 > 0). No repair is attempted; invalid
/// input is rejected.
inline CovarianceModel validate_covariance(const Eigen::MatrixXd& raw) {
  if (raw.rows() != raw.cols()) {
    throw DimensionMismatch("covariance matrix must be square");
  }
  const int n = static_cast<int>(raw.rows());
  const double scale = raw.cwiseAbs().maxCoeff();
  if ((raw - raw.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0)) {
    throw NotSymmetric("covariance matrix is not symmetric");
  }
  Eigen::MatrixXd sigma = 0.5 * (raw + raw.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
  const double max_eig = es.eigenvalues().maxCoeff();
  if (es.eigenvalues().minCoeff() < -1e-9 * std::max(max_eig, 0.0)) {
    throw NotPSD("covariance matrix is not positive semi-definite");
  }

  std::vector<int> stochastic;
  for (int i = 0; i < n; ++i) {
    if ((sigma.row(i).array() != 0.0).any()) stochastic.push_back(i);
  }
  const double total_variance = sigma.sum();  // = 1' Sigma 1 = tr(Sigma J)
  if (stochastic.empty() || !(total_variance > 0.0)) {
    throw DegenerateNoise("covariance has no stochastic nodes or sigma^2 <= 0");
  }
  return CovarianceModel(std::move(sigma), std::move(stochastic), total_variance);
}

/// Sigma = variance * I; every node fluctuates independently.
inline CovarianceModel iid_covariance(int n, double variance) {
  if (n < 2) throw InvalidParameter("need at least 2 nodes");
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw InvalidParameter("iid variance must be positive");
  }
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  return CovarianceModel(variance * Eigen::MatrixXd::Identity(n, n), std::move(all),
                         n * variance);
}

/// Nominal load profile. Must be balanced: 1' mu = 0 (up to roundoff).
class LoadProfile {
 public:
  explicit LoadProfile(Eigen::VectorXd mu) : mu_(std::move(mu)) {
    const double imbalance = std::abs(mu_.sum());
    if (imbalance > 1e-9 * (1.0 + mu_.cwiseAbs().sum())) {
      throw InvalidParameter("load profile is not balanced: |1'mu| = " +
                             std::to_string(imbalance));
    }
  }

  static LoadProfile zero(int n) { return LoadProfile(Eigen::VectorXd::Zero(n)); }

  const Eigen::VectorXd& values() const { return mu_; }
  int size() const { return static_cast<int>(mu_.size()); }

 private:
  Eigen::VectorXd mu_;
};

/// One realization of the zero-mean fluctuations; entries of nodes outside S
/// are exactly zero.
struct FluctuationSample {
  Eigen::VectorXd omega;
};

namespace detail {

// splitmix64; used to derive independent per-sample substreams from (seed, index).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ mix64(index + 0x51ed2701u));
}

}  // namespace detail

/// Draws zero-mean Gaussian fluctuations with covariance Sigma via the
/// symmetric factorization Sigma = F F^T (eigendecomposition, so PSD matrices
/// with zero rows are handled). Sample i depends only on (seed, i), so
/// parallel and serial generation agree.
class GaussianSampler {
 public:
  GaussianSampler(const CovarianceModel& cov, std::uint64_t seed)
      : seed_(seed), factor_(build_factor(cov)) {}

  FluctuationSample draw(std::uint64_t index) const {
    const int n = static_cast<int>(factor_.rows());
    std::mt19937_64 rng(detail::substream_seed(seed_, index));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = gauss(rng);
    return {factor_ * z};
  }

  /// F with Sigma = F F^T; rows of non-stochastic nodes are exactly zero.
  const Eigen::MatrixXd& factor() const { return factor_; }

 private:
  static Eigen::MatrixXd build_factor(const CovarianceModel& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.matrix());
    const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd factor = es.eigenvectors() * clipped.cwiseSqrt().asDiagonal();
    for (int i = 0; i < cov.size(); ++i) {
      if (!cov.is_stochastic(i)) factor.row(i).setZero();
    }
    return factor;
  }

  std::uint64_t seed_;
  Eigen::MatrixXd factor_;
};

/// Deterministic batch of fluctuation samples; see GaussianSampler.
inline std::vector<FluctuationSample> sample_fluctuations(const CovarianceModel& cov,
                                                          std::uint64_t seed, int count) {
  GaussianSampler sampler(cov, seed);
  std::vector<FluctuationSample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(sampler.draw(i));
  return out;
}

}  // namespace gridloss

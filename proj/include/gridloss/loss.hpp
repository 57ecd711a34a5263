#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gridloss/covariance.hpp"
#include "gridloss/errors.hpp"
#include "gridloss/graph.hpp"

namespace gridloss {

/// Load-sharing vector alpha with support B. Entries sum to 1 and are exactly
/// zero outside B; inside B they may be negative.
class ControlVector {
 public:
  ControlVector(Eigen::VectorXd alpha, std::vector<int> support)
      : alpha_(std::move(alpha)), support_(std::move(support)) {
    const int n = static_cast<int>(alpha_.size());
    std::sort(support_.begin(), support_.end());
    if (support_.empty()) throw InvalidParameter("control support must be nonempty");
    if (std::adjacent_find(support_.begin(), support_.end()) != support_.end()) {
      throw InvalidParameter("control support has duplicate nodes");
    }
    if (support_.front() < 0 || support_.back() >= n) {
      throw IndexOutOfRange("control support node out of range");
    }
    std::vector<char> in_support(n, 0);
    for (int v : support_) in_support[v] = 1;
    for (int v = 0; v < n; ++v) {
      if (!in_support[v] && alpha_(v) != 0.0) {
        throw InvalidParameter("alpha must be exactly zero outside the support");
      }
    }
    if (std::abs(alpha_.sum() - 1.0) > 1e-10) {
      throw InvalidParameter("load-sharing coefficients must sum to 1, got " +
                             std::to_string(alpha_.sum()));
    }
  }

  /// alpha with support everywhere.
  static ControlVector full(Eigen::VectorXd alpha) {
    std::vector<int> all(alpha.size());
    for (int i = 0; i < static_cast<int>(all.size()); ++i) all[i] = i;
    return ControlVector(std::move(alpha), std::move(all));
  }

  /// 1/|B| on every node of B, zero elsewhere.
  static ControlVector equal_share(int n, const std::vector<int>& nodes) {
    if (nodes.empty()) throw InvalidParameter("equal-share set must be nonempty");
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    for (int v : nodes) {
      if (v < 0 || v >= n) throw IndexOutOfRange("equal-share node out of range");
      alpha(v) = 1.0 / nodes.size();
    }
    return ControlVector(std::move(alpha), nodes);
  }

  /// Embeds a |B|-dimensional vector into R^n on the nodes of B (same order).
  static ControlVector embed(const Eigen::VectorXd& alpha_b, const std::vector<int>& nodes,
                             int n) {
    if (static_cast<int>(nodes.size()) != alpha_b.size()) {
      throw DimensionMismatch("embed: coefficient count does not match node count");
    }
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    for (int idx = 0; idx < alpha_b.size(); ++idx) {
      if (nodes[idx] < 0 || nodes[idx] >= n) throw IndexOutOfRange("embed node out of range");
      alpha(nodes[idx]) = alpha_b(idx);
    }
    return ControlVector(std::move(alpha), nodes);
  }

  const Eigen::VectorXd& values() const { return alpha_; }
  const std::vector<int>& support() const { return support_; }
  int size() const { return static_cast<int>(alpha_.size()); }

 private:
  Eigen::VectorXd alpha_;
  std::vector<int> support_;  // sorted ascending
};

/// Coefficients of the expected-loss quadratic form
/// E H(alpha) = (sigma^2/2) alpha' A alpha - b' alpha + c.
struct LossCoefficients {
  Eigen::MatrixXd a;  // = L+
  Eigen::VectorXd b;  // = L+ Sigma 1
  double c = 0.0;     // = tr(Sigma L+)/2 + mu' L+ mu / 2
  double sigma2 = 0.0;
};

struct LossReport {
  double expected_stochastic_loss = 0.0;
  double deterministic_loss = 0.0;
  double expected_total = 0.0;
};

namespace detail {

inline void require_size(int got, int want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": size " + std::to_string(got) +
                            " does not match graph size " + std::to_string(want));
  }
}

}  // namespace detail

/// Total loss (1/2) p(alpha)' L+ p(alpha) for one realization, where the net
/// profile is p(alpha) = mu + omega - alpha (1' omega). The control acts as a
/// rank-one correction; the matrix I - alpha 1' is never formed.
inline double realized_loss(const LaplacianPair& lp, const LoadProfile& mu,
                            const FluctuationSample& omega, const ControlVector& alpha) {
  const int n = lp.node_count();
  detail::require_size(mu.size(), n, "load profile");
  detail::require_size(static_cast<int>(omega.omega.size()), n, "fluctuation sample");
  detail::require_size(alpha.size(), n, "control vector");

  const double mismatch = omega.omega.sum();
  const Eigen::VectorXd net = mu.values() + omega.omega - mismatch * alpha.values();
  return 0.5 * net.dot(lp.pinv * net);
}

/// Expected total loss split into its stochastic part
/// (sigma^2/2) alpha' L+ alpha - 1' Sigma L+ alpha + tr(Sigma L+)/2
/// and the control-independent deterministic part mu' L+ mu / 2.
inline LossReport expected_loss(const LaplacianPair& lp, const CovarianceModel& cov,
                                const LoadProfile& mu, const ControlVector& alpha) {
  const int n = lp.node_count();
  detail::require_size(cov.size(), n, "covariance");
  detail::require_size(mu.size(), n, "load profile");
  detail::require_size(alpha.size(), n, "control vector");

  const Eigen::VectorXd pinv_alpha = lp.pinv * alpha.values();
  const double quad = alpha.values().dot(pinv_alpha);
  const double cross = cov.row_sums().dot(pinv_alpha);  // 1' Sigma L+ alpha
  // tr(Sigma L+) as an elementwise sum; both matrices are symmetric
  const double trace_term = 0.5 * cov.matrix().cwiseProduct(lp.pinv).sum();

  LossReport report;
  report.expected_stochastic_loss = 0.5 * cov.total_variance() * quad - cross + trace_term;
  report.deterministic_loss = 0.5 * mu.values().dot(lp.pinv * mu.values());
  report.expected_total = report.expected_stochastic_loss + report.deterministic_loss;
  if (report.expected_stochastic_loss < -1e-12) {
    throw Error("internal: expected stochastic loss fell below zero");
  }
  return report;
}

/// The canonical quadratic-form coefficients of the expected loss.
inline LossCoefficients loss_coefficients(const LaplacianPair& lp, const CovarianceModel& cov,
                                          const LoadProfile& mu) {
  const int n = lp.node_count();
  detail::require_size(cov.size(), n, "covariance");
  detail::require_size(mu.size(), n, "load profile");

  LossCoefficients coeffs;
  coeffs.a = lp.pinv;
  coeffs.b = lp.pinv * cov.row_sums();
  coeffs.c = 0.5 * cov.matrix().cwiseProduct(lp.pinv).sum() +
             0.5 * mu.values().dot(lp.pinv * mu.values());
  coeffs.sigma2 = cov.total_variance();
  return coeffs;
}

}  // namespace gridloss

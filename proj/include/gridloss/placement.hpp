#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gridloss/covariance.hpp"
#include "gridloss/errors.hpp"
#include "gridloss/graph.hpp"
#include "gridloss/loss.hpp"

namespace gridloss {

namespace detail {

/// Binomial coefficient, or nullopt once the running value exceeds `cap`.
inline std::optional<std::uint64_t> binomial_capped(int n, int k, std::uint64_t cap) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t value = 1;
  for (int i = 1; i <= k; ++i) {
    // value fits well below 2^64 / n while value <= cap, so no overflow here.
    value = value * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    if (value > cap) return std::nullopt;
  }
  return value;
}

/// Advances `c` to the next k-subset of {0,..,n-1} in lexicographic order.
inline bool next_combination(std::vector<int>& c, int n) {
  const int k = static_cast<int>(c.size());
  for (int i = k - 1; i >= 0; --i) {
    if (c[i] < n - k + i) {
      ++c[i];
      for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

/// Expected stochastic loss of the equal-share control on support `c`,
/// expanded in precomputed terms: quadratic through the pseudoinverse,
/// linear through b = L+ Sigma 1, plus the control-free constant.
inline double equal_share_loss(const Eigen::MatrixXd& pinv, const Eigen::VectorXd& b,
                               double sigma2, double constant, const std::vector<int>& c) {
  const int k = static_cast<int>(c.size());
  double quad = 0.0;
  double lin = 0.0;
  for (int r = 0; r < k; ++r) {
    lin += b(c[r]);
    for (int s = 0; s < k; ++s) quad += pinv(c[r], c[s]);
  }
  return 0.5 * sigma2 * quad / (static_cast<double>(k) * k) - lin / k + constant;
}

}  // namespace detail

/// Average over all k-node placements of the expected stochastic loss under
/// equal sharing. The closed form is exact:
///   H_k = C1 + C2 / k,
///   C1 = tr(Sigma L+)/2 - sigma^2 tr(L+) / (2 n (n-1)),
///   C2 = sigma^2 tr(L+) / (2 (n-1)).
/// `enumerated` holds the brute-force average when the number of placements
/// does not exceed the enumeration cap.
struct PlacementAverage {
  int k = 0;
  double c1 = 0.0;
  double c2 = 0.0;
  double closed_form = 0.0;
  std::optional<double> enumerated;
};

inline std::pair<double, double> placement_coefficients(const LaplacianPair& lp,
                                                        const CovarianceModel& cov) {
  const int n = lp.node_count();
  detail::require_size(cov.size(), n, "covariance");
  const double cross_trace = cov.matrix().cwiseProduct(lp.pinv).sum();
  const double pinv_trace = lp.pinv.trace();
  const double sigma2 = cov.total_variance();
  const double c1 = 0.5 * cross_trace - sigma2 * pinv_trace / (2.0 * n * (n - 1.0));
  const double c2 = sigma2 * pinv_trace / (2.0 * (n - 1.0));
  return {c1, c2};
}

inline PlacementAverage average_loss_k(const LaplacianPair& lp, const CovarianceModel& cov,
                                       int k, std::uint64_t enumeration_cap = 1000000) {
  const int n = lp.node_count();
  if (k < 1 || k > n) {
    throw InvalidK("placement size must lie in [1, " + std::to_string(n) + "], got " +
                   std::to_string(k));
  }
  auto [c1, c2] = placement_coefficients(lp, cov);

  PlacementAverage result;
  result.k = k;
  result.c1 = c1;
  result.c2 = c2;
  result.closed_form = c1 + c2 / k;

  if (detail::binomial_capped(n, k, enumeration_cap)) {
    const Eigen::VectorXd b = lp.pinv * cov.row_sums();
    const double constant = 0.5 * cov.matrix().cwiseProduct(lp.pinv).sum();
    const double sigma2 = cov.total_variance();

    std::vector<int> c(k);
    for (int i = 0; i < k; ++i) c[i] = i;
    long double acc = 0.0;
    std::uint64_t count = 0;
    do {
      acc += detail::equal_share_loss(lp.pinv, b, sigma2, constant, c);
      ++count;
    } while (detail::next_combination(c, n));
    result.enumerated = static_cast<double>(acc / count);
  }
  return result;
}

/// One random nested placement chain B_1 ⊂ B_2 ⊂ ... ⊂ B_n: a seeded shuffle
/// of the nodes, where B_k is the first k entries under equal-share control.
struct TracePoint {
  int k = 0;
  double loss = 0.0;
};

inline std::vector<TracePoint> empirical_random_placement_trace(const LaplacianPair& lp,
                                                                const CovarianceModel& cov,
                                                                std::uint64_t seed) {
  const int n = lp.node_count();
  detail::require_size(cov.size(), n, "covariance");

  std::mt19937_64 rng(seed);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = 0; i < n - 1; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }

  const LoadProfile mu = LoadProfile::zero(n);
  std::vector<TracePoint> trace;
  trace.reserve(n);
  for (int k = 1; k <= n; ++k) {
    const std::vector<int> prefix(order.begin(), order.begin() + k);
    const ControlVector alpha = ControlVector::equal_share(n, prefix);
    trace.push_back({k, expected_loss(lp, cov, mu, alpha).expected_stochastic_loss});
  }
  return trace;
}

/// Loss-reduction curve H_k / H_1 for k = 1..k_max together with its large-n
/// limit. gamma = (n-1) tr(Sigma L+) / (sigma^2 tr(L+)) fixes the limit curve
/// asymptote_offset + asymptote_slope / k with offset 1/(1 + 1/gamma) and
/// slope 1/(1 + gamma).
struct ScalingCurve {
  std::vector<int> k_values;
  std::vector<double> ratios;      // exact H_k / H_1 at this size
  std::vector<double> asymptotic;  // limit-curve value at each k
  double gamma = 0.0;
  double asymptote_offset = 0.0;
  double asymptote_slope = 0.0;
  double h1 = 0.0;
};

inline ScalingCurve scaling_curve(const LaplacianPair& lp, const CovarianceModel& cov,
                                  int k_max) {
  const int n = lp.node_count();
  if (k_max < 1 || k_max > n) {
    throw InvalidK("k_max must lie in [1, " + std::to_string(n) + "], got " +
                   std::to_string(k_max));
  }

  auto [c1, c2] = placement_coefficients(lp, cov);
  const double cross_trace = cov.matrix().cwiseProduct(lp.pinv).sum();
  const double gamma =
      (n - 1.0) * cross_trace / (cov.total_variance() * lp.pinv.trace());

  ScalingCurve curve;
  curve.gamma = gamma;
  curve.asymptote_offset = 1.0 / (1.0 + 1.0 / gamma);
  curve.asymptote_slope = 1.0 / (1.0 + gamma);
  curve.h1 = c1 + c2;
  curve.k_values.reserve(k_max);
  curve.ratios.reserve(k_max);
  curve.asymptotic.reserve(k_max);
  for (int k = 1; k <= k_max; ++k) {
    curve.k_values.push_back(k);
    curve.ratios.push_back((c1 + c2 / k) / curve.h1);
    curve.asymptotic.push_back(curve.asymptote_offset + curve.asymptote_slope / k);
  }
  return curve;
}

}  // namespace gridloss

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gridloss/covariance.hpp"
#include "gridloss/errors.hpp"
#include "gridloss/graph.hpp"
#include "gridloss/loss.hpp"

namespace gridloss {

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n_samples = 0;
  std::uint64_t seed = 0;
};

namespace detail {

/// Fixed-order pairwise summation; the reduction tree depends only on the
/// buffer length, so results are identical for any thread count.
inline double pairwise_sum(const double* data, std::size_t count) {
  if (count <= 32) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += data[i];
    return s;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, count - half);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return v.empty() ? 0.0 : pairwise_sum(v.data(), v.size());
}

/// Runs fn(i) for i in [0, count) across contiguous index chunks. Each call
/// touches only its own index, so chunking never changes any result.
template <typename F>
inline void parallel_for(int count, int threads, F&& fn) {
  threads = std::clamp(threads, 1, std::max(1, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const int base = count / threads;
  const int extra = count % threads;
  int begin = 0;
  for (int t = 0; t < threads; ++t) {
    const int end = begin + base + (t < extra ? 1 : 0);
    pool.emplace_back([&fn, begin, end] {
      for (int i = begin; i < end; ++i) fn(i);
    });
    begin = end;
  }
  for (auto& th : pool) th.join();
}

inline MCEstimate summarize(const std::vector<double>& values, std::uint64_t seed) {
  const int n = static_cast<int>(values.size());
  const double mean = pairwise_sum(values) / n;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    sq[i] = d * d;
  }
  const double variance = pairwise_sum(sq) / (n - 1.0);
  return {mean, std::sqrt(variance / n), n, seed};
}

}  // namespace detail

/// Monte Carlo estimate of the expected total loss of a fixed control. Sample
/// i is generated from substream (seed, i), so the estimate is independent of
/// evaluation order and thread count.
inline MCEstimate estimate_expected_loss(const LaplacianPair& lp, const CovarianceModel& cov,
                                         const LoadProfile& mu, const ControlVector& alpha,
                                         int n_samples, std::uint64_t seed, int threads = 1) {
  const int n = lp.node_count();
  detail::require_size(cov.size(), n, "covariance");
  detail::require_size(mu.size(), n, "load profile");
  detail::require_size(alpha.size(), n, "control vector");
  if (n_samples < 2) throw InvalidParameter("sample count must be at least 2");
  if (threads < 1) throw InvalidParameter("thread count must be positive");

  const GaussianSampler sampler(cov, seed);
  std::vector<double> losses(n_samples);
  detail::parallel_for(n_samples, threads, [&](int i) {
    losses[i] = realized_loss(lp, mu, sampler.draw(i), alpha);
  });
  return detail::summarize(losses, seed);
}

/// Side-by-side estimates for several controls on common random numbers: each
/// sample reuses one fluctuation draw for every control, so the difference
/// estimates have far lower variance than independent runs would give.
struct ControlComparison {
  struct Difference {
    int first = 0;   // index into `controls` / `estimates`
    int second = 0;
    double mean = 0.0;       // estimate of E[loss(first) - loss(second)]
    double std_error = 0.0;
  };

  std::vector<MCEstimate> estimates;
  std::vector<Difference> differences;  // all pairs, lexicographic
};

inline ControlComparison compare_controls(const LaplacianPair& lp, const CovarianceModel& cov,
                                          const LoadProfile& mu,
                                          const std::vector<ControlVector>& controls,
                                          int n_samples, std::uint64_t seed, int threads = 1) {
  const int n = lp.node_count();
  detail::require_size(cov.size(), n, "covariance");
  detail::require_size(mu.size(), n, "load profile");
  if (controls.size() < 2) throw InvalidParameter("comparison needs at least two controls");
  for (const ControlVector& c : controls) detail::require_size(c.size(), n, "control vector");
  if (n_samples < 2) throw InvalidParameter("sample count must be at least 2");
  if (threads < 1) throw InvalidParameter("thread count must be positive");

  const int m = static_cast<int>(controls.size());
  const GaussianSampler sampler(cov, seed);
  std::vector<std::vector<double>> losses(m, std::vector<double>(n_samples));
  detail::parallel_for(n_samples, threads, [&](int i) {
    const FluctuationSample omega = sampler.draw(i);
    for (int c = 0; c < m; ++c) losses[c][i] = realized_loss(lp, mu, omega, controls[c]);
  });

  ControlComparison result;
  result.estimates.reserve(m);
  for (int c = 0; c < m; ++c) result.estimates.push_back(detail::summarize(losses[c], seed));

  std::vector<double> diff(n_samples);
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      for (int i = 0; i < n_samples; ++i) diff[i] = losses[a][i] - losses[b][i];
      const MCEstimate est = detail::summarize(diff, seed);
      result.differences.push_back({a, b, est.mean, est.std_error});
    }
  }
  return result;
}

}  // namespace gridloss

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "gridloss/covariance.hpp"
#include "gridloss/graph.hpp"
#include "gridloss/loss.hpp"
#include "gridloss/montecarlo.hpp"
#include "gridloss/optimize.hpp"
#include "support/fixtures.hpp"

using namespace gridloss;
using testing::cycle4;
using testing::random_balanced_mu;
using testing::random_connected_graph;
using testing::random_feasible_control;
using testing::random_psd_covariance;
using testing::random_subset;
using testing::star5;

TEST_SUITE("montecarlo") {

TEST_CASE("pairwise summation matches an extended-precision reference") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  for (std::size_t count : {std::size_t{0}, std::size_t{1}, std::size_t{32}, std::size_t{33},
                            std::size_t{1000}, std::size_t{4097}}) {
    std::vector<double> values(count);
    long double reference = 0.0L;
    for (std::size_t i = 0; i < count; ++i) {
      values[i] = uniform(rng) * std::pow(10.0, static_cast<int>(i % 7) - 3);
      reference += values[i];
    }
    const double sum = detail::pairwise_sum(values);
    CHECK(std::abs(sum - static_cast<double>(reference)) <=
          1e-12 * (1.0 + std::abs(static_cast<double>(reference))));
  }
}

TEST_CASE("estimates are bitwise reproducible across runs and thread counts") {
  std::mt19937_64 rng(7);
  const int n = 6;
  const LaplacianPair lp = build_laplacian(random_connected_graph(rng, n));
  const CovarianceModel cov = random_psd_covariance(rng, n);
  const LoadProfile mu = random_balanced_mu(rng, n);
  const ControlVector alpha = ControlVector::equal_share(n, {0, 3});

  const MCEstimate one = estimate_expected_loss(lp, cov, mu, alpha, 5000, 99, 1);
  const MCEstimate again = estimate_expected_loss(lp, cov, mu, alpha, 5000, 99, 1);
  const MCEstimate four = estimate_expected_loss(lp, cov, mu, alpha, 5000, 99, 4);
  const MCEstimate many = estimate_expected_loss(lp, cov, mu, alpha, 5000, 99, 7);

  CHECK(one.mean == again.mean);
  CHECK(one.std_error == again.std_error);
  CHECK(one.mean == four.mean);
  CHECK(one.std_error == four.std_error);
  CHECK(one.mean == many.mean);
  CHECK(one.n_samples == 5000);
  CHECK(one.seed == 99);

  // a different seed must actually change the estimate
  const MCEstimate other = estimate_expected_loss(lp, cov, mu, alpha, 5000, 100, 1);
  CHECK(other.mean != one.mean);
}

TEST_CASE("sampled losses agree with the analytic expectation") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 6);
    const LaplacianPair lp = build_laplacian(random_connected_graph(rng, n));
    const CovarianceModel cov = random_psd_covariance(rng, n);
    const LoadProfile mu = random_balanced_mu(rng, n);
    const ControlVector alpha =
        random_feasible_control(rng, n, random_subset(rng, n, 1 + static_cast<int>(rng() % n)));

    const double analytic = expected_loss(lp, cov, mu, alpha).expected_total;
    const MCEstimate estimate =
        estimate_expected_loss(lp, cov, mu, alpha, 40000, 7000 + trial, 4);
    CHECK(std::abs(estimate.mean - analytic) <= 4.0 * estimate.std_error);
    CHECK(estimate.std_error > 0.0);
  }
}

TEST_CASE("the 4-cycle with uniform sharing lands on its known expectation") {
  const LaplacianPair lp = build_laplacian(cycle4());
  const CovarianceModel cov = iid_covariance(4, 1.0);
  const ControlVector alpha = ControlVector::equal_share(4, {0, 1, 2, 3});

  const MCEstimate estimate =
      estimate_expected_loss(lp, cov, LoadProfile::zero(4), alpha, 100000, 11, 4);
  CHECK(std::abs(estimate.mean - 0.625) <= 4.0 * estimate.std_error);
  CHECK(estimate.std_error <= 0.01);
}

TEST_CASE("the standard error follows the square-root sampling law") {
  std::mt19937_64 rng(3030);
  const int n = 6;
  const LaplacianPair lp = build_laplacian(random_connected_graph(rng, n));
  const CovarianceModel cov = random_psd_covariance(rng, n);
  const LoadProfile mu = LoadProfile::zero(n);
  const ControlVector alpha = ControlVector::equal_share(n, {1, 4});

  // quadrupling the sample count must cut the standard error in half; the
  // per-sample variance estimates concentrate tightly at these sizes
  const MCEstimate small = estimate_expected_loss(lp, cov, mu, alpha, 20000, 5, 4);
  const MCEstimate large = estimate_expected_loss(lp, cov, mu, alpha, 80000, 5, 4);
  CHECK(large.std_error / small.std_error == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("silent-node profile changes shift only the deterministic offset") {
  std::mt19937_64 rng(9);
  const int n = 7;
  const LaplacianPair lp = build_laplacian(random_connected_graph(rng, n));
  // nodes 5 and 6 carry no fluctuations at all
  const CovarianceModel cov = random_psd_covariance(rng, n, {5, 6});
  const ControlVector alpha = ControlVector::equal_share(n, {0, 2});

  Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd mu2 = Eigen::VectorXd::Zero(n);
  mu2(5) = 0.8;  // rebalance between the two silent nodes only
  mu2(6) = -0.8;

  const MCEstimate a = estimate_expected_loss(lp, cov, LoadProfile(mu1), alpha, 60000, 17, 4);
  const MCEstimate b = estimate_expected_loss(lp, cov, LoadProfile(mu2), alpha, 60000, 18, 4);
  const double det1 = expected_loss(lp, cov, LoadProfile(mu1), alpha).deterministic_loss;
  const double det2 = expected_loss(lp, cov, LoadProfile(mu2), alpha).deterministic_loss;

  CHECK(det2 > det1);  // the rebalanced profile pays a real transport cost
  CHECK(std::abs((a.mean - det1) - (b.mean - det2)) <= 4.0 * (a.std_error + b.std_error));
}

TEST_CASE("common-random-number comparisons sharpen control differences") {
  const LaplacianPair lp = build_laplacian(star5());
  const CovarianceModel cov = iid_covariance(5, 1.0);
  const LoadProfile mu = LoadProfile::zero(5);
  const std::vector<ControlVector> controls = {
      ControlVector::equal_share(5, {0}),
      ControlVector::equal_share(5, {0, 1}),
      ControlVector::equal_share(5, {0}),
  };

  const ControlComparison cmp = compare_controls(lp, cov, mu, controls, 60000, 4242, 4);
  REQUIRE(cmp.estimates.size() == 3);
  REQUIRE(cmp.differences.size() == 3);

  // center alone costs 2, center plus one leaf costs 2.125: spreading the
  // response onto a leaf genuinely hurts here
  CHECK(std::abs(cmp.estimates[0].mean - 2.0) <= 4.0 * cmp.estimates[0].std_error);
  CHECK(std::abs(cmp.estimates[1].mean - 2.125) <= 4.0 * cmp.estimates[1].std_error);

  const auto& d01 = cmp.differences[0];
  CHECK(d01.first == 0);
  CHECK(d01.second == 1);
  CHECK(std::abs(d01.mean - (-0.125)) <= 4.0 * d01.std_error);
  CHECK(d01.mean < 0.0);

  // shared draws make the paired estimator far tighter than independent runs
  const double independent =
      std::sqrt(cmp.estimates[0].std_error * cmp.estimates[0].std_error +
                cmp.estimates[1].std_error * cmp.estimates[1].std_error);
  CHECK(d01.std_error < independent);

  // identical controls differ by exactly zero on every shared sample
  const auto& d02 = cmp.differences[1];
  CHECK(d02.first == 0);
  CHECK(d02.second == 2);
  CHECK(d02.mean == 0.0);
  CHECK(d02.std_error == 0.0);
}

TEST_CASE("comparisons and estimates agree control by control") {
  std::mt19937_64 rng(808);
  const int n = 5;
  const LaplacianPair lp = build_laplacian(random_connected_graph(rng, n));
  const CovarianceModel cov = random_psd_covariance(rng, n);
  const LoadProfile mu = random_balanced_mu(rng, n);
  const std::vector<ControlVector> controls = {
      ControlVector::equal_share(n, {0, 1}),
      ControlVector::equal_share(n, {2, 3, 4}),
  };

  const ControlComparison cmp = compare_controls(lp, cov, mu, controls, 4000, 31, 3);
  for (int c = 0; c < 2; ++c) {
    const MCEstimate solo =
        estimate_expected_loss(lp, cov, mu, controls[c], 4000, 31, 1);
    CHECK(cmp.estimates[c].mean == solo.mean);
    CHECK(cmp.estimates[c].std_error == solo.std_error);
  }
  CHECK(cmp.differences[0].mean ==
        doctest::Approx(cmp.estimates[0].mean - cmp.estimates[1].mean).epsilon(1e-12));
}

TEST_CASE("degenerate sampling requests are rejected") {
  const LaplacianPair lp = build_laplacian(cycle4());
  const CovarianceModel cov = iid_covariance(4, 1.0);
  const LoadProfile mu = LoadProfile::zero(4);
  const ControlVector alpha = ControlVector::equal_share(4, {0});

  CHECK_THROWS_AS(estimate_expected_loss(lp, cov, mu, alpha, 1, 0), InvalidParameter);
  CHECK_THROWS_AS(estimate_expected_loss(lp, cov, mu, alpha, 10, 0, 0), InvalidParameter);
  CHECK_THROWS_AS(compare_controls(lp, cov, mu, {alpha}, 10, 0), InvalidParameter);
  CHECK_THROWS_AS(
      estimate_expected_loss(lp, iid_covariance(5, 1.0), mu, alpha, 10, 0),
      DimensionMismatch);
}

}  // TEST_SUITE("montecarlo")

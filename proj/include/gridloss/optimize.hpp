#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridloss/covariance.hpp"
#include "gridloss/errors.hpp"
#include "gridloss/graph.hpp"
#include "gridloss/loss.hpp"

namespace gridloss {

/// Ordered subset B of nodes whose loads are controllable. Indices are kept
/// sorted ascending; the selection map P_B is implicit in the index list.
class ControllableSet {
 public:
  ControllableSet(std::vector<int> nodes, int graph_size) : nodes_(std::move(nodes)) {
    std::sort(nodes_.begin(), nodes_.end());
    if (nodes_.empty()) throw InvalidParameter("controllable set must be nonempty");
    if (std::adjacent_find(nodes_.begin(), nodes_.end()) != nodes_.end()) {
      throw InvalidParameter("controllable set has duplicate nodes");
    }
    if (nodes_.front() < 0 || nodes_.back() >= graph_size) {
      throw IndexOutOfRange("controllable node out of range");
    }
    graph_size_ = graph_size;
  }

  static ControllableSet all(int graph_size) {
    std::vector<int> nodes(graph_size);
    for (int i = 0; i < graph_size; ++i) nodes[i] = i;
    return ControllableSet(std::move(nodes), graph_size);
  }

  const std::vector<int>& nodes() const { return nodes_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int graph_size() const { return graph_size_; }
  bool is_full() const { return size() == graph_size_; }

 private:
  std::vector<int> nodes_;
  int graph_size_;
};

/// Quadratic-plus-linear usage penalty xi (alpha' P alpha + q' alpha) with
/// P diagonal positive and q nonnegative.
struct PenaltyModel {
  PenaltyModel(Eigen::VectorXd p_diag_, Eigen::VectorXd q_, double xi_)
      : p_diag(std::move(p_diag_)), q(std::move(q_)), xi(xi_) {
    if (p_diag.size() != q.size()) {
      throw DimensionMismatch("penalty vectors differ in length");
    }
    if ((p_diag.array() <= 0.0).any()) {
      throw InvalidPenalty("penalty diagonal entries must be positive");
    }
    if ((q.array() < 0.0).any()) {
      throw InvalidPenalty("penalty linear coefficients must be nonnegative");
    }
    if (!(xi >= 0.0) || !std::isfinite(xi)) {
      throw InvalidPenalty("penalty weight must be a nonnegative number");
    }
  }

  static PenaltyModel identity(int n, double xi) {
    return PenaltyModel(Eigen::VectorXd::Ones(n), Eigen::VectorXd::Zero(n), xi);
  }

  Eigen::VectorXd p_diag;
  Eigen::VectorXd q;
  double xi = 0.0;
};

struct OptimalControl {
  ControlVector alpha;
  double lagrange_multiplier = 0.0;
  double objective_value = 0.0;  // expected stochastic loss at the optimum
};

namespace detail {

inline Eigen::MatrixXd principal_submatrix(const Eigen::MatrixXd& m,
                                           const std::vector<int>& nodes) {
  const int k = static_cast<int>(nodes.size());
  Eigen::MatrixXd sub(k, k);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) sub(r, c) = m(nodes[r], nodes[c]);
  }
  return sub;
}

inline Eigen::VectorXd subvector(const Eigen::VectorXd& v, const std::vector<int>& nodes) {
  Eigen::VectorXd sub(nodes.size());
  for (int r = 0; r < static_cast<int>(nodes.size()); ++r) sub(r) = v(nodes[r]);
  return sub;
}

}  // namespace detail

/// Closed-form optimal load sharing over a strict subset B of size k < n:
///   alpha~* = (1/t_B)(L+_B)^-1 1 + (I - (1/t_B)(L+_B)^-1 J)(L+_B)^-1 P_B' L+ Sigma 1 / sigma^2
/// with L+_B the k x k principal submatrix of L+ and t_B = 1'(L+_B)^-1 1.
/// L+_B is positive definite for any connected graph, so the factorization
/// cannot fail; that is asserted, not handled.
inline OptimalControl optimize_subset(const LaplacianPair& lp, const CovarianceModel& cov,
                                      const ControllableSet& controllables) {
  const int n = lp.node_count();
  detail::require_size(cov.size(), n, "covariance");
  detail::require_size(controllables.graph_size(), n, "controllable set");
  if (controllables.is_full()) {
    throw FullSetRequested("all nodes controllable: use optimize_full");
  }

  const std::vector<int>& nodes = controllables.nodes();
  const int k = controllables.size();
  const Eigen::MatrixXd sub = detail::principal_submatrix(lp.pinv, nodes);
  Eigen::LLT<Eigen::MatrixXd> llt(sub);
  assert(llt.info() == Eigen::Success && "L+_B must be positive definite on a connected graph");

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);
  const Eigen::VectorXd inv_ones = llt.solve(ones);  // (L+_B)^-1 1
  const double t = ones.dot(inv_ones);

  // b~ = P_B' L+ Sigma 1, then z = (L+_B)^-1 b~ / sigma^2
  const Eigen::VectorXd b_full = lp.pinv * cov.row_sums();
  const Eigen::VectorXd b_sub = detail::subvector(b_full, nodes);
  const Eigen::VectorXd z = llt.solve(b_sub) / cov.total_variance();

  const Eigen::VectorXd alpha_b = inv_ones / t + z - inv_ones * (ones.dot(z) / t);
  const double gamma = cov.total_variance() * (1.0 - ones.dot(z)) / t;

  ControlVector alpha = ControlVector::embed(alpha_b, nodes, n);
  const double objective =
      expected_loss(lp, cov, LoadProfile::zero(n), alpha).expected_stochastic_loss;
  return {std::move(alpha), gamma, objective};
}

/// Optimal load sharing when every node is controllable: alpha* = Sigma 1 / sigma^2,
/// independent of the graph structure. The constraint multiplier is zero.
inline OptimalControl optimize_full(const LaplacianPair& lp, const CovarianceModel& cov) {
  const int n = lp.node_count();
  detail::require_size(cov.size(), n, "covariance");

  ControlVector alpha = ControlVector::full(cov.row_sums() / cov.total_variance());
  const double objective =
      expected_loss(lp, cov, LoadProfile::zero(n), alpha).expected_stochastic_loss;
  return {std::move(alpha), 0.0, objective};
}

namespace detail {

// Assembles and solves the equality-constrained KKT system
//   [ H  -1 ] [alpha]   [ g ]
//   [ 1'  0 ] [gamma] = [ 1 ]
// over the support B, where H = sigma^2 A_B + 2 xi P_B and g = b_B - xi q_B.
struct KktSolution {
  Eigen::VectorXd alpha_b;
  double gamma;
};

inline KktSolution solve_reduced_kkt(const Eigen::MatrixXd& hessian,
                                     const Eigen::VectorXd& linear) {
  const int k = static_cast<int>(hessian.rows());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
  kkt.topLeftCorner(k, k) = hessian;
  kkt.topRightCorner(k, 1).setConstant(-1.0);
  kkt.bottomLeftCorner(1, k).setConstant(1.0);
  Eigen::VectorXd rhs(k + 1);
  rhs.head(k) = linear;
  rhs(k) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) {
    throw SingularKKT("KKT system is singular; upstream invariants are violated");
  }
  const Eigen::VectorXd sol = lu.solve(rhs);
  return {sol.head(k), sol(k)};
}

}  // namespace detail

/// Penalized optimum via a direct KKT solve (the normative route; no closed
/// form is trusted here). With xi = 0 this reproduces the unpenalized optima.
inline OptimalControl optimize_penalized(const LaplacianPair& lp, const CovarianceModel& cov,
                                         const PenaltyModel& penalty,
                                         const ControllableSet& controllables) {
  const int n = lp.node_count();
  detail::require_size(cov.size(), n, "covariance");
  detail::require_size(static_cast<int>(penalty.p_diag.size()), n, "penalty");
  detail::require_size(controllables.graph_size(), n, "controllable set");

  const std::vector<int>& nodes = controllables.nodes();
  const Eigen::MatrixXd a_sub = detail::principal_submatrix(lp.pinv, nodes);
  const Eigen::VectorXd b_sub = detail::subvector(lp.pinv * cov.row_sums(), nodes);
  const Eigen::VectorXd p_sub = detail::subvector(penalty.p_diag, nodes);
  const Eigen::VectorXd q_sub = detail::subvector(penalty.q, nodes);

  Eigen::MatrixXd hessian = cov.total_variance() * a_sub;
  hessian.diagonal() += 2.0 * penalty.xi * p_sub;
  const Eigen::VectorXd linear = b_sub - penalty.xi * q_sub;

  auto sol = detail::solve_reduced_kkt(hessian, linear);
  ControlVector alpha = ControlVector::embed(sol.alpha_b, nodes, n);
  const double objective =
      expected_loss(lp, cov, LoadProfile::zero(n), alpha).expected_stochastic_loss;
  return {std::move(alpha), sol.gamma, objective};
}

/// Independent optimality oracle: solves the constrained quadratic program
/// directly from the loss coefficients, without any of the closed forms above.
inline ControlVector kkt_oracle(const LossCoefficients& coeffs,
                                const std::optional<PenaltyModel>& penalty,
                                const ControllableSet& controllables) {
  const int n = static_cast<int>(coeffs.a.rows());
  detail::require_size(controllables.graph_size(), n, "controllable set");

  const std::vector<int>& nodes = controllables.nodes();
  Eigen::MatrixXd hessian =
      coeffs.sigma2 * detail::principal_submatrix(coeffs.a, nodes);
  Eigen::VectorXd linear = detail::subvector(coeffs.b, nodes);
  if (penalty) {
    detail::require_size(static_cast<int>(penalty->p_diag.size()), n, "penalty");
    hessian.diagonal() += 2.0 * penalty->xi * detail::subvector(penalty->p_diag, nodes);
    linear -= penalty->xi * detail::subvector(penalty->q, nodes);
  }
  auto sol = detail::solve_reduced_kkt(hessian, linear);
  return ControlVector::embed(sol.alpha_b, nodes, n);
}

/// Relative contribution of each node to the variance of the total mismatch:
/// (Sigma 1) / sigma^2. Entries sum to 1.
inline Eigen::VectorXd interpretation_weights(const CovarianceModel& cov) {
  if (!(cov.total_variance() > 0.0)) {
    throw DegenerateNoise("total variance must be positive");
  }
  return cov.row_sums() / cov.total_variance();
}

}  // namespace gridloss

#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "blockgibbs/errors.hpp"
#include "blockgibbs/symmat.hpp"

namespace blockgibbs {

// Components are indexed 0..K-1 throughout the in-process API; file formats
// (traces, label files) carry 1-based labels.

/// Conjugate prior for the collapsed mixture: Gaussian-Inverse-Wishart
/// (m0, kappa0, nu0, s0) on each component plus a symmetric Dirichlet(beta)
/// on the weights.
class Hyperparameters {
public:
  Hyperparameters(int k, Eigen::VectorXd m0, double kappa0, double nu0,
                  SpdMatrix s0, double beta);

  int k() const { return k_; }
  int dim() const { return static_cast<int>(m0_.size()); }
  const Eigen::VectorXd& m0() const { return m0_; }
  double kappa0() const { return kappa0_; }
  double nu0() const { return nu0_; }
  const SpdMatrix& s0() const { return s0_; }
  const DetFactorization& s0_fact() const { return s0_fact_; }
  double beta() const { return beta_; }

private:
  int k_;
  Eigen::VectorXd m0_;
  double kappa0_;
  double nu0_;
  SpdMatrix s0_;
  DetFactorization s0_fact_;
  double beta_;
};

/// Immutable N x D observation matrix.
class Dataset {
public:
  explicit Dataset(Eigen::MatrixXd y);

  int n() const { return static_cast<int>(y_.rows()); }
  int dim() const { return static_cast<int>(y_.cols()); }
  Eigen::VectorXd row(int i) const { return y_.row(i).transpose(); }
  const Eigen::MatrixXd& matrix() const { return y_; }

private:
  Eigen::MatrixXd y_;
};

/// Running sufficient statistics of one component: count, sum, centered sum
/// of squares, and the factorized posterior scatter
///   S = s0 + scatter + kappa0*n/(kappa0+n) * (mean - m0)(mean - m0)^T,
/// maintained under single-observation insertions and removals by rank-one
/// updates.
class ComponentStats {
public:
  explicit ComponentStats(const Hyperparameters& hp);

  int count() const { return count_; }
  const Eigen::VectorXd& sum() const { return sum_; }
  Eigen::VectorXd mean() const { return sum_ / count_; }
  const Eigen::MatrixXd& scatter() const { return scatter_; }
  const DetFactorization& posterior_scatter_fact() const { return post_; }

  void add(const Eigen::VectorXd& y, const Hyperparameters& hp);
  void remove(const Eigen::VectorXd& y, const Hyperparameters& hp);

private:
  int count_;
  Eigen::VectorXd sum_;
  Eigen::MatrixXd scatter_;
  DetFactorization post_;
};

/// Ordered set of observation indices updated jointly.
class BlockSet {
public:
  explicit BlockSet(std::vector<int> indices);

  int size() const { return static_cast<int>(indices_.size()); }
  const std::vector<int>& indices() const { return indices_; }
  bool contains(int i) const;

private:
  std::vector<int> indices_;  // sorted, distinct
};

/// Current latent assignment plus per-component cached statistics. Label -1
/// marks an observation held out of the statistics entirely. Single-writer;
/// read-only snapshots may be shared across threads.
class AllocationState {
public:
  /// assignment entries in 0..K-1 or -1 (held out).
  AllocationState(const Dataset& data, const Hyperparameters& hp,
                  std::vector<int> assignment);

  int n() const { return static_cast<int>(assignment_.size()); }
  int k() const { return hp_->k(); }
  int label(int i) const { return assignment_[i]; }
  const std::vector<int>& assignment() const { return assignment_; }
  const ComponentStats& stats(int k) const { return stats_[k]; }
  const Dataset& dataset() const { return *data_; }
  const Hyperparameters& hp() const { return *hp_; }

  void add_observation(int i, int k);
  void remove_observation(int i);

private:
  const Dataset* data_;
  const Hyperparameters* hp_;
  std::vector<int> assignment_;
  std::vector<ComponentStats> stats_;
};

/// Per-component factor of the collapsed marginal allocation density, in log
/// space:
///   lgamma(beta + n) + sum_d lgamma(nu0 + n + 1 - d)
///     - (nu0 + n)/2 * log|S| - D/2 * log(kappa0 + n).
double log_component_term(const ComponentStats& cs, const Hyperparameters& hp);

/// Log of the unnormalized marginal allocation density f(C | beta, theta0, Y),
/// up to an additive constant fixed for a given dataset and prior. Values for
/// two allocations are comparable by subtraction. With kappa0 = 0 an empty
/// component yields +infinity (the flat-mean prior is improper there).
double log_marginal_allocation(const AllocationState& state,
                               const Hyperparameters& hp);

/// Change in log_component_term if y were added to cs, computed without
/// mutating anything (determinant lemma against the cached factorization).
/// This is the single-site collapsed Gibbs predictive up to a constant.
double log_add_delta(const ComponentStats& cs, const Eigen::VectorXd& y,
                     const Hyperparameters& hp);

/// Evaluates the block conditional f(C_b | C_complement, beta, theta0, Y) in
/// log space, up to one additive constant shared by all K^B assignments, for
/// a state whose block observations are held out. Reusable scratch makes the
/// K^B enumeration loop allocation-free after the first call.
class BlockConditionalEvaluator {
public:
  BlockConditionalEvaluator(const AllocationState& held_out_state,
                            const BlockSet& block);

  double log_conditional(std::span<const int> labels);

private:
  const AllocationState* state_;
  const BlockSet* block_;
  std::vector<ComponentStats> scratch_;
};

/// One-shot form of the evaluator above. Requires all block indices held
/// out of the state's statistics; the state is not modified.
double log_block_conditional(const AllocationState& state, const BlockSet& block,
                             std::span<const int> block_assignment,
                             const Hyperparameters& hp);

/// The three right-hand-side terms of the sum-of-squares split for component
/// k of a fully assigned state: centered sum of squares without the block
/// members, the scaled between-means outer product, and the within-block
/// scatter. Their sum reproduces the component's full centered sum of squares.
struct SsDecomposition {
  Eigen::MatrixXd base;
  Eigen::MatrixXd between;
  Eigen::MatrixXd within;
};

SsDecomposition sum_of_squares_decomposition(const AllocationState& state,
                                             const BlockSet& block, int k);

}  // namespace blockgibbs

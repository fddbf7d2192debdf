#include "blockgibbs/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace blockgibbs {

Hyperparameters::Hyperparameters(int k, Eigen::VectorXd m0, double kappa0,
                                 double nu0, SpdMatrix s0, double beta)
    : k_(k),
      m0_(std::move(m0)),
      kappa0_(kappa0),
      nu0_(nu0),
      s0_(std::move(s0)),
      s0_fact_(factorize(s0_)),
      beta_(beta) {
  const int d = s0_.dim();
  if (k_ < 1) {
    throw ConfigError("hyperparameters", "component count must be >= 1");
  }
  if (m0_.size() != d) {
    throw ConfigError("hyperparameters", "m0 dimension does not match s0");
  }
  if (kappa0_ < 0.0) {
    throw ConfigError("hyperparameters", "kappa0 must be >= 0");
  }
  // nu0 > D - 1 keeps every Gamma(nu0 + n + 1 - i) argument positive for
  // n >= 0, so the density is well defined for empty components too.
  if (!(nu0_ > d - 1)) {
    throw ConfigError("hyperparameters", "nu0 must exceed dim - 1");
  }
  if (!(beta_ > 0.0)) {
    throw ConfigError("hyperparameters", "beta must be > 0");
  }
}

Dataset::Dataset(Eigen::MatrixXd y) : y_(std::move(y)) {
  if (y_.rows() < 1 || y_.cols() < 1) {
    throw ConfigError("dataset", "dataset must have at least one row and column");
  }
  if (!y_.allFinite()) {
    throw ConfigError("dataset", "dataset contains non-finite values");
  }
}

ComponentStats::ComponentStats(const Hyperparameters& hp)
    : count_(0),
      sum_(Eigen::VectorXd::Zero(hp.dim())),
      scatter_(Eigen::MatrixXd::Zero(hp.dim(), hp.dim())),
      post_(hp.s0_fact()) {}

void ComponentStats::add(const Eigen::VectorXd& y, const Hyperparameters& hp) {
  const double kappa_n = hp.kappa0() + count_;
  if (kappa_n > 0.0) {
    // S_{n+1} = S_n + kappa_n/(kappa_n+1) (y - m_n)(y - m_n)^T with m_n the
    // posterior mean; a single rank-one update covers both the centered
    // sum of squares and the mean-shrinkage term.
    const Eigen::VectorXd m_n = (hp.kappa0() * hp.m0() + sum_) / kappa_n;
    post_ = rank_one_update(post_, y - m_n, kappa_n / (kappa_n + 1.0));
  }
  if (count_ > 0) {
    const Eigen::VectorXd delta = y - mean();
    scatter_ += (static_cast<double>(count_) / (count_ + 1.0)) * delta * delta.transpose();
  }
  sum_ += y;
  ++count_;
}

void ComponentStats::remove(const Eigen::VectorXd& y, const Hyperparameters& hp) {
  const int n_after = count_ - 1;
  if (n_after == 0) {
    // exact reset avoids drift accumulating in transiently empty components
    count_ = 0;
    sum_.setZero();
    scatter_.setZero();
    post_ = hp.s0_fact();
    return;
  }
  sum_ -= y;
  count_ = n_after;
  const Eigen::VectorXd delta = y - mean();
  scatter_ -= (static_cast<double>(n_after) / (n_after + 1.0)) * delta * delta.transpose();
  const double kappa_after = hp.kappa0() + n_after;
  if (kappa_after > 0.0) {
    const Eigen::VectorXd m_after = (hp.kappa0() * hp.m0() + sum_) / kappa_after;
    post_ = rank_one_update(post_, y - m_after, -kappa_after / (kappa_after + 1.0));
  }
}

BlockSet::BlockSet(std::vector<int> indices) : indices_(std::move(indices)) {
  if (indices_.empty()) {
    throw ConfigError("block", "blocking set must contain at least one index");
  }
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw ConfigError("block", "blocking set indices must be distinct");
  }
  if (indices_.front() < 0) {
    throw ConfigError("block", "blocking set indices must be nonnegative");
  }
}

bool BlockSet::contains(int i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

AllocationState::AllocationState(const Dataset& data, const Hyperparameters& hp,
                                 std::vector<int> assignment)
    : data_(&data), hp_(&hp), assignment_(std::move(assignment)) {
  if (static_cast<int>(assignment_.size()) != data.n()) {
    throw ConfigError("allocation", "assignment length does not match dataset");
  }
  if (data.dim() != hp.dim()) {
    throw ConfigError("allocation", "dataset dimension does not match prior");
  }
  if (data.n() < hp.k()) {
    std::cerr << "warning: fewer observations (" << data.n()
              << ") than components (" << hp.k() << "); fit is degenerate\n";
  }
  stats_.assign(hp.k(), ComponentStats(hp));
  for (int i = 0; i < data.n(); ++i) {
    const int c = assignment_[i];
    if (c == -1) continue;
    if (c < 0 || c >= hp.k()) {
      throw ConfigError("allocation", "assignment label out of range");
    }
    stats_[c].add(data.row(i), hp);
  }
}

void AllocationState::add_observation(int i, int k) {
  if (assignment_[i] != -1) {
    throw IndexAlreadyAssigned("observation " + std::to_string(i) + " is already assigned");
  }
  stats_[k].add(data_->row(i), *hp_);
  assignment_[i] = k;
}

void AllocationState::remove_observation(int i) {
  const int c = assignment_[i];
  if (c == -1) {
    throw IndexNotAssigned("observation " + std::to_string(i) + " is not assigned");
  }
  stats_[c].remove(data_->row(i), *hp_);
  assignment_[i] = -1;
}

double log_component_term(const ComponentStats& cs, const Hyperparameters& hp) {
  const int d = hp.dim();
  const double n = cs.count();
  double term = std::lgamma(hp.beta() + n);
  for (int i = 1; i <= d; ++i) {
    term += std::lgamma(hp.nu0() + n + 1.0 - i);
  }
  term -= 0.5 * (hp.nu0() + n) * cs.posterior_scatter_fact().log_det();
  term -= 0.5 * d * std::log(hp.kappa0() + n);
  return term;
}

double log_marginal_allocation(const AllocationState& state,
                               const Hyperparameters& hp) {
  double total = 0.0;
  for (int k = 0; k < hp.k(); ++k) {
    total += log_component_term(state.stats(k), hp);
  }
  return total;
}

double log_add_delta(const ComponentStats& cs, const Eigen::VectorXd& y,
                     const Hyperparameters& hp) {
  const int d = hp.dim();
  const double n = cs.count();
  const double kappa_n = hp.kappa0() + n;
  double dlogdet = 0.0;
  if (kappa_n > 0.0) {
    const Eigen::VectorXd m_n = (hp.kappa0() * hp.m0() + cs.sum()) / kappa_n;
    const double w = kappa_n / (kappa_n + 1.0);
    dlogdet = std::log1p(w * cs.posterior_scatter_fact().inverse_quadratic_form(y - m_n));
  }
  double delta = std::log(hp.beta() + n);
  for (int i = 1; i <= d; ++i) {
    delta += std::log(hp.nu0() + n + 1.0 - i);
  }
  delta -= 0.5 * (hp.nu0() + n + 1.0) * dlogdet;
  delta -= 0.5 * cs.posterior_scatter_fact().log_det();
  delta -= 0.5 * d * std::log((hp.kappa0() + n + 1.0) / kappa_n);
  return delta;
}

BlockConditionalEvaluator::BlockConditionalEvaluator(
    const AllocationState& held_out_state, const BlockSet& block)
    : state_(&held_out_state), block_(&block) {
  for (int i : block.indices()) {
    if (held_out_state.label(i) != -1) {
      throw IndexAlreadyAssigned("block observation " + std::to_string(i) +
                                 " must be held out before evaluating the block conditional");
    }
  }
  scratch_.assign(held_out_state.k(), ComponentStats(held_out_state.hp()));
}

double BlockConditionalEvaluator::log_conditional(std::span<const int> labels) {
  const Hyperparameters& hp = state_->hp();
  for (int k = 0; k < state_->k(); ++k) {
    scratch_[k] = state_->stats(k);
  }
  const auto& idx = block_->indices();
  for (std::size_t t = 0; t < idx.size(); ++t) {
    scratch_[labels[t]].add(state_->dataset().row(idx[t]), hp);
  }
  double total = 0.0;
  for (int k = 0; k < state_->k(); ++k) {
    total += log_component_term(scratch_[k], hp);
  }
  return total;
}

double log_block_conditional(const AllocationState& state, const BlockSet& block,
                             std::span<const int> block_assignment,
                             const Hyperparameters& hp) {
  (void)hp;
  BlockConditionalEvaluator eval(state, block);
  return eval.log_conditional(block_assignment);
}

SsDecomposition sum_of_squares_decomposition(const AllocationState& state,
                                             const BlockSet& block, int k) {
  const Dataset& data = state.dataset();
  const int d = data.dim();

  std::vector<int> complement_members;
  std::vector<int> block_members;
  for (int i = 0; i < state.n(); ++i) {
    if (state.label(i) != k) continue;
    if (block.contains(i)) {
      block_members.push_back(i);
    } else {
      complement_members.push_back(i);
    }
  }

  auto centered_ss = [&](const std::vector<int>& members, Eigen::VectorXd& mean_out) {
    Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(d, d);
    mean_out = Eigen::VectorXd::Zero(d);
    if (members.empty()) return ss;
    for (int i : members) mean_out += data.row(i);
    mean_out /= static_cast<double>(members.size());
    for (int i : members) {
      const Eigen::VectorXd delta = data.row(i) - mean_out;
      ss += delta * delta.transpose();
    }
    return ss;
  };

  SsDecomposition out;
  Eigen::VectorXd mean_complement;
  out.base = centered_ss(complement_members, mean_complement);
  out.between = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd mean_block;
  out.within = centered_ss(block_members, mean_block);
  if (!block_members.empty() && !complement_members.empty()) {
    const double m = static_cast<double>(block_members.size());
    const double n_kb = static_cast<double>(complement_members.size());
    const Eigen::VectorXd delta = mean_complement - mean_block;
    out.between = m * n_kb / (m + n_kb) * delta * delta.transpose();
  }
  return out;
}

}  // namespace blockgibbs

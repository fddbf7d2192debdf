#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "blockgibbs/model.hpp"
#include "blockgibbs/rng.hpp"
#include "oracles.hpp"

using namespace blockgibbs;

namespace {

Hyperparameters default_hp(int k, int d, double kappa0 = 0.1) {
  return Hyperparameters(k, Eigen::VectorXd::Zero(d), kappa0,
                         static_cast<double>(d) - 1.0 + 1.5,
                         SpdMatrix(Eigen::MatrixXd::Identity(d, d)), 1.0);
}

Eigen::MatrixXd make_data(int n, int d, Rng& rng, double spread = 1.0) {
  Eigen::MatrixXd y(n, d);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) y(r, c) = spread * rng.normal();
  }
  return y;
}

void check_stats_match_batch(const AllocationState& state,
                             const Hyperparameters& hp, double tol) {
  const Eigen::MatrixXd& y = state.dataset().matrix();
  for (int k = 0; k < hp.k(); ++k) {
    std::vector<int> members;
    for (int i = 0; i < state.n(); ++i) {
      if (state.label(i) == k) members.push_back(i);
    }
    const ComponentStats& cs = state.stats(k);
    REQUIRE(cs.count() == static_cast<int>(members.size()));
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(y.cols());
    for (int i : members) sum += y.row(i).transpose();
    CHECK((cs.sum() - sum).cwiseAbs().maxCoeff() < tol);
    CHECK((cs.scatter() - oracles::batch_scatter(y, members)).cwiseAbs().maxCoeff() < tol);

    // posterior scatter invariant, rebuilt densely
    Eigen::MatrixXd expected = hp.s0().entries() + oracles::batch_scatter(y, members);
    const double n = static_cast<double>(members.size());
    if (n > 0 && hp.kappa0() + n > 0) {
      const Eigen::VectorXd mean = sum / n;
      const Eigen::VectorXd gap = mean - hp.m0();
      expected += hp.kappa0() * n / (hp.kappa0() + n) * gap * gap.transpose();
    }
    CHECK((cs.posterior_scatter_fact().matrix() - expected).cwiseAbs().maxCoeff() < tol);
  }
}

}  // namespace

TEST_CASE("hyperparameter validation") {
  CHECK_THROWS_AS(default_hp(2, 2, -0.5), ConfigError);
  // nu0 must exceed dim - 1 so every Gamma argument stays positive
  CHECK_THROWS_AS(Hyperparameters(2, Eigen::VectorXd::Zero(3), 0.1, 1.5,
                                  SpdMatrix(Eigen::MatrixXd::Identity(3, 3)), 1.0),
                  ConfigError);
  CHECK_THROWS_AS(Hyperparameters(2, Eigen::VectorXd::Zero(2), 0.1, 2.5,
                                  SpdMatrix(Eigen::MatrixXd::Identity(2, 2)), 0.0),
                  ConfigError);
}

TEST_CASE("add first observation gives zero scatter") {
  const auto hp = default_hp(2, 2);
  Rng rng(1);
  Dataset data(make_data(4, 2, rng));
  AllocationState state(data, hp, {-1, -1, -1, -1});
  state.add_observation(0, 1);
  CHECK(state.stats(1).count() == 1);
  CHECK(state.stats(1).scatter().cwiseAbs().maxCoeff() == 0.0);
  CHECK(state.stats(0).count() == 0);
}

TEST_CASE("add then remove restores the state") {
  const auto hp = default_hp(2, 2);
  Rng rng(2);
  Dataset data(make_data(6, 2, rng));
  AllocationState state(data, hp, {0, 0, 1, 1, -1, -1});
  const Eigen::MatrixXd scatter_before = state.stats(0).scatter();
  const Eigen::VectorXd sum_before = state.stats(0).sum();
  const double logdet_before = state.stats(0).posterior_scatter_fact().log_det();
  state.add_observation(4, 0);
  state.remove_observation(4);
  CHECK((state.stats(0).scatter() - scatter_before).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((state.stats(0).sum() - sum_before).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(std::abs(state.stats(0).posterior_scatter_fact().log_det() - logdet_before) < 1e-9);
}

TEST_CASE("incremental statistics equal batch recomputation") {
  const auto hp = default_hp(1, 3);
  Rng rng(3);
  Dataset data(make_data(5, 3, rng));
  AllocationState state(data, hp, std::vector<int>(5, -1));
  for (int i = 0; i < 5; ++i) state.add_observation(i, 0);
  check_stats_match_batch(state, hp, 1e-9);
}

TEST_CASE("add/remove errors") {
  const auto hp = default_hp(2, 2);
  Rng rng(4);
  Dataset data(make_data(3, 2, rng));
  AllocationState state(data, hp, {0, -1, 1});
  CHECK_THROWS_AS(state.add_observation(0, 1), IndexAlreadyAssigned);
  CHECK_THROWS_AS(state.remove_observation(1), IndexNotAssigned);
}

TEST_CASE("cache coherence over 10^4 random operations") {
  const auto hp = default_hp(3, 3, 0.25);
  Rng rng(5);
  Dataset data(make_data(40, 3, rng, 2.0));
  std::vector<int> assignment(40);
  for (int i = 0; i < 40; ++i) assignment[i] = static_cast<int>(rng.uniform_int(3));
  AllocationState state(data, hp, assignment);
  for (int step = 0; step < 10000; ++step) {
    const int i = static_cast<int>(rng.uniform_int(40));
    if (state.label(i) == -1) {
      state.add_observation(i, static_cast<int>(rng.uniform_int(3)));
    } else {
      state.remove_observation(i);
    }
  }
  check_stats_match_batch(state, hp, 1e-8);
}

TEST_CASE("log_marginal_allocation is exchangeable in component labels") {
  const auto hp = default_hp(3, 2);
  Rng rng(6);
  Dataset data(make_data(9, 2, rng));
  std::vector<int> assignment = {0, 0, 1, 1, 1, 2, 2, 0, 1};
  std::vector<int> relabeled = assignment;
  for (int& a : relabeled) a = (a + 1) % 3;  // cyclic label permutation
  AllocationState s1(data, hp, assignment);
  AllocationState s2(data, hp, relabeled);
  CHECK(std::abs(log_marginal_allocation(s1, hp) - log_marginal_allocation(s2, hp)) < 1e-9);
}

TEST_CASE("log_marginal_allocation matches the term-by-term oracle") {
  // K=2, N=4, D=1 toy data: pairwise differences of the log density equal
  // the direct evaluation with log-Gamma
  Eigen::MatrixXd y(4, 1);
  y << -1.2, -0.8, 0.9, 1.4;
  Dataset data(y);
  const auto hp = default_hp(2, 1, 0.3);
  const std::vector<std::vector<int>> allocations = {
      {0, 0, 1, 1}, {0, 1, 0, 1}, {1, 1, 1, 1}, {0, 0, 0, 1}};
  std::vector<double> ours, oracle;
  for (const auto& a : allocations) {
    AllocationState state(data, hp, a);
    ours.push_back(log_marginal_allocation(state, hp));
    oracle.push_back(oracles::log_marginal_oracle(
        y, a, 2, hp.m0(), hp.kappa0(), hp.nu0(), hp.s0().entries(), hp.beta()));
  }
  for (std::size_t i = 1; i < ours.size(); ++i) {
    CHECK(std::abs((ours[i] - ours[0]) - (oracle[i] - oracle[0])) < 1e-9);
  }
}

TEST_CASE("moving an outlier to a singleton component moves density as the oracle says") {
  Eigen::MatrixXd y(6, 1);
  y << 0.0, 0.1, -0.1, 0.05, -0.05, 8.0;  // tight cluster plus a far outlier
  Dataset data(y);
  const auto hp = default_hp(2, 1, 0.3);
  const std::vector<int> together = {0, 0, 0, 0, 0, 0};
  const std::vector<int> split = {0, 0, 0, 0, 0, 1};
  AllocationState s_together(data, hp, together);
  AllocationState s_split(data, hp, split);
  const double diff =
      log_marginal_allocation(s_split, hp) - log_marginal_allocation(s_together, hp);
  const double oracle_diff =
      oracles::log_marginal_oracle(y, split, 2, hp.m0(), hp.kappa0(), hp.nu0(),
                                   hp.s0().entries(), hp.beta()) -
      oracles::log_marginal_oracle(y, together, 2, hp.m0(), hp.kappa0(), hp.nu0(),
                                   hp.s0().entries(), hp.beta());
  CHECK(std::abs(diff - oracle_diff) < 1e-9);
  CHECK(diff * oracle_diff > 0.0);  // same direction
}

TEST_CASE("B=1 block conditional equals the single-site predictive") {
  const auto hp = default_hp(3, 2, 0.2);
  Rng rng(8);
  Dataset data(make_data(8, 2, rng));
  std::vector<int> assignment = {0, 1, 2, 0, 1, 2, 0, -1};
  AllocationState state(data, hp, assignment);

  BlockSet block({7});
  std::vector<double> via_block(3), via_delta(3);
  for (int k = 0; k < 3; ++k) {
    const int labels[1] = {k};
    via_block[k] = log_block_conditional(state, block, labels, hp);
    via_delta[k] = log_add_delta(state.stats(k), data.row(7), hp);
  }
  log_normalize(via_block);
  log_normalize(via_delta);
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(via_block[k] - via_delta[k]) < 1e-9);
  }
}

TEST_CASE("block conditional normalizes to one over K^B assignments") {
  const auto hp = default_hp(2, 2, 0.15);
  Rng rng(9);
  Dataset data(make_data(10, 2, rng));
  std::vector<int> assignment = {0, 0, 1, 1, 0, 1, 0, 1, -1, -1};
  AllocationState state(data, hp, assignment);
  BlockSet block({8, 9});
  BlockConditionalEvaluator eval(state, block);
  std::vector<double> logs;
  for (int l = 0; l < 2; ++l) {
    for (int m = 0; m < 2; ++m) {
      const int labels[2] = {l, m};
      logs.push_back(eval.log_conditional(labels));
    }
  }
  log_normalize(logs);
  double total = 0.0;
  for (double p : logs) total += p;
  CHECK(std::abs(total - 1.0) < 1e-10);
}

TEST_CASE("mirror-symmetric components give a symmetric pair conditional") {
  // two identical observations at the origin, components mirrored about it
  Eigen::MatrixXd y(10, 1);
  y << -3.0, -2.8, -3.2, -2.9, 3.0, 2.8, 3.2, 2.9, 0.0, 0.0;
  Dataset data(y);
  const auto hp = default_hp(2, 1, 0.0);
  std::vector<int> assignment = {0, 0, 0, 0, 1, 1, 1, 1, -1, -1};
  // mirror symmetry requires the complement statistics to match exactly:
  // y was built so component 2 = -(component 1)
  AllocationState state(data, hp, assignment);
  BlockSet block({8, 9});
  BlockConditionalEvaluator eval(state, block);
  Eigen::Matrix2d logs;
  for (int l = 0; l < 2; ++l) {
    for (int m = 0; m < 2; ++m) {
      const int labels[2] = {l, m};
      logs(l, m) = eval.log_conditional(labels);
    }
  }
  CHECK(std::abs(logs(0, 0) - logs(1, 1)) < 1e-9);
  CHECK(std::abs(logs(0, 1) - logs(1, 0)) < 1e-9);
}

TEST_CASE("pair conditional factors into sequential single-site conditionals") {
  // chain-rule consistency of the held-out convention: the joint over
  // (C_i, C_j) conditioned on C_j = m, renormalized, equals the single-site
  // conditional of C_i with j assigned to m
  const auto hp = default_hp(2, 2, 0.2);
  Rng rng(10);
  Dataset data(make_data(9, 2, rng));
  std::vector<int> assignment = {0, 1, 0, 1, 0, 1, 0, -1, -1};
  AllocationState state(data, hp, assignment);
  BlockSet block({7, 8});
  BlockConditionalEvaluator eval(state, block);
  Eigen::Matrix2d logs;
  for (int l = 0; l < 2; ++l) {
    for (int m = 0; m < 2; ++m) {
      const int labels[2] = {l, m};
      logs(l, m) = eval.log_conditional(labels);
    }
  }
  for (int m = 0; m < 2; ++m) {
    // single-site conditional of site 7 with site 8 assigned to m
    AllocationState with_j(data, hp, assignment);
    with_j.add_observation(8, m);
    BlockSet single({7});
    std::vector<double> expected(2);
    for (int l = 0; l < 2; ++l) {
      const int labels[1] = {l};
      expected[l] = log_block_conditional(with_j, single, labels, hp);
    }
    log_normalize(expected);
    std::vector<double> conditional = {logs(0, m), logs(1, m)};
    log_normalize(conditional);
    CHECK(std::abs(conditional[0] - expected[0]) < 1e-9);
    CHECK(std::abs(conditional[1] - expected[1]) < 1e-9);
  }
}

TEST_CASE("sum of squares decomposition identities") {
  const auto hp = default_hp(2, 1, 0.1);

  SUBCASE("empty block intersection") {
    Eigen::MatrixXd y(5, 1);
    y << 1.0, 2.0, 3.0, -1.0, -2.0;
    Dataset data(y);
    AllocationState state(data, hp, {0, 0, 0, 1, 1});
    BlockSet block({3, 4});  // block members all in component 1
    const auto dec = sum_of_squares_decomposition(state, block, 0);
    CHECK((dec.base - state.stats(0).scatter()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(dec.between.cwiseAbs().maxCoeff() == 0.0);
    CHECK(dec.within.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("single blocked point has zero within-scatter") {
    Eigen::MatrixXd y(4, 1);
    y << 1.0, 2.0, 3.0, 10.0;
    Dataset data(y);
    AllocationState state(data, hp, {0, 0, 0, 0});
    BlockSet block({3});
    const auto dec = sum_of_squares_decomposition(state, block, 0);
    CHECK(dec.within.cwiseAbs().maxCoeff() == 0.0);
    CHECK((dec.base + dec.between + dec.within - state.stats(0).scatter())
              .cwiseAbs()
              .maxCoeff() < 1e-9);
  }

  SUBCASE("two blocked points reproduce the batch scatter") {
    Rng rng(11);
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(7, 1);
    for (int i = 0; i < 7; ++i) y(i, 0) = rng.normal() * 2.0;
    Dataset data(y);
    AllocationState state(data, hp, {0, 0, 0, 0, 0, 1, 1});
    BlockSet block({0, 1});
    const auto dec = sum_of_squares_decomposition(state, block, 0);
    CHECK((dec.base + dec.between + dec.within - state.stats(0).scatter())
              .cwiseAbs()
              .maxCoeff() < 1e-9);
  }
}

TEST_CASE("decomposition holds over random datasets and block sizes") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform_int(4));
    const int k = 2 + static_cast<int>(rng.uniform_int(2));
    const int n = 8 + static_cast<int>(rng.uniform_int(8));
    const auto hp = default_hp(k, d, 0.1);
    Dataset data(make_data(n, d, rng, 1.5));
    std::vector<int> assignment(n);
    for (int i = 0; i < n; ++i) assignment[i] = static_cast<int>(rng.uniform_int(k));
    AllocationState state(data, hp, assignment);
    const int b = 1 + static_cast<int>(rng.uniform_int(5));
    std::vector<int> block_indices;
    for (int i = 0; i < n && static_cast<int>(block_indices.size()) < b; ++i) {
      block_indices.push_back(i);
    }
    BlockSet block(block_indices);
    for (int c = 0; c < k; ++c) {
      const auto dec = sum_of_squares_decomposition(state, block, c);
      CHECK((dec.base + dec.between + dec.within - state.stats(c).scatter())
                .cwiseAbs()
                .maxCoeff() < 1e-9);
    }
  }
}

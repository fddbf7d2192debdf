#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "blockgibbs/model.hpp"

namespace blockgibbs {

/// Sufficient statistics of one component's complement members: count
/// n_{k\b}, mean, and centered sum of squares. Everything in this module is
/// driven by these summaries; raw-data entry points construct them first.
struct ComponentSummary {
  double count = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;
};

/// Batch (two-pass) summaries from a complement allocation; label -1 marks
/// indices excluded from the complement (the pair / block under study).
std::vector<ComponentSummary> complement_summaries(
    const Dataset& data, std::span<const int> complement_allocation, int k);

/// Normalized K x K joint distribution of a latent-variable pair given the
/// complement; entry (l, m) is P(C_i = l, C_j = m | complement).
struct JointAllocationTable {
  int k = 0;
  Eigen::MatrixXd probs;
  std::string conditioning;
};

/// Unnormalized log cell values of the pair joint: cell (l, m) is the K-term
/// product density with y_i joining component l and y_j joining component m,
/// each component's posterior scatter rebuilt densely from its summary.
Eigen::MatrixXd pair_table_log_cells(std::span<const ComponentSummary> summaries,
                                     const Eigen::VectorXd& y_i,
                                     const Eigen::VectorXd& y_j,
                                     const Hyperparameters& hp);

JointAllocationTable pair_table_from_summaries(
    std::span<const ComponentSummary> summaries, const Eigen::VectorXd& y_i,
    const Eigen::VectorXd& y_j, const Hyperparameters& hp);

/// Joint distribution of (C_i, C_j) given a complement allocation covering
/// every index except i and j.
JointAllocationTable pair_table(const Dataset& data,
                                std::span<const int> complement_allocation,
                                int i, int j, const Hyperparameters& hp);

/// Joint distribution of (C_i, C_j) with the remaining block members
/// marginalized out by summing their K^(B-2) allocations (with multiplicity
/// weights over multisets when all block values are bitwise identical).
JointAllocationTable pair_table_marginalized(
    const Dataset& data, std::span<const int> complement_allocation,
    const BlockSet& block, int i, int j, const Hyperparameters& hp,
    std::uint64_t max_enumeration = 1ull << 20);

/// Pearson correlation of the two binary allocation indicators of a K = 2
/// table. Throws DegenerateMarginal when a marginal is 0 or 1 within 1e-14.
double pair_correlation(const JointAllocationTable& table);

/// Quadrant sums of the table under the indicator I(C <= k'), k' in 1..K-1.
struct PartitionSplit {
  int k_prime = 1;
  double p11 = 0, p12 = 0, p21 = 0, p22 = 0;
};

PartitionSplit indicator_split(const JointAllocationTable& table, int k_prime);

/// Largest squared indicator correlation over all K-1 splits: a lower bound
/// on the convergence rate of the reversibilized within-block chain to the
/// conditional target. Splits with degenerate marginals are skipped.
struct RateBound {
  double value = 0.0;
  int k_prime_argmax = 1;
  JointAllocationTable table;
};

RateBound rate_lower_bound(const JointAllocationTable& table);

/// Two-component geometry for correlation surfaces, parameterized by the
/// complement summaries and the placement of the pair relative to the two
/// component means along a fixed direction.
///  - EqualValue: y_i = y_j at the origin, component means at distances
///    (a, b) on opposite sides (the equal-value ridge geometry).
///  - FixedSeparation: means a fixed distance apart, y_i and y_j placed at
///    distances (a, b) from the first mean along the axis.
struct SurfaceSpec {
  enum class Mode { EqualValue, FixedSeparation };
  Mode mode = Mode::EqualValue;
  double count1 = 0.0;
  double count2 = 0.0;
  Eigen::MatrixXd scatter1;
  Eigen::MatrixXd scatter2;
  Eigen::VectorXd direction;  // unit geometry axis
  double separation = 0.0;    // FixedSeparation only
  std::vector<double> axis1;
  std::vector<double> axis2;
};

/// Correlation at one (a, b) node. Evaluated in log space so extreme
/// tail geometries stay finite; throws DegenerateMarginal only when a
/// marginal vanishes exactly.
double surface_node_correlation(const SurfaceSpec& spec, double a, double b,
                                const Hyperparameters& hp);

/// Row-major grid (axis1 rows by axis2 columns) of pair correlations.
std::vector<double> correlation_surface(const SurfaceSpec& spec,
                                        const Hyperparameters& hp);

struct DetectThresholds {
  double tau = 0.5;      // flag when second-best/best single-site prob >= tau
  double rho_min = 0.5;  // group flagged pairs whose rate bound >= rho_min
  int max_block_size = 10;
};

/// Flags observations whose single-site conditional is nearly split between
/// two components, groups flagged observations with high pairwise rate
/// bounds, and returns the largest such group (possibly empty), capped at
/// max_block_size members nearest the group's value centroid.
std::vector<int> detect_outlier_block(const AllocationState& state,
                                      const Hyperparameters& hp,
                                      const DetectThresholds& thresholds);

}  // namespace blockgibbs

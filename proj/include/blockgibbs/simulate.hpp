#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "blockgibbs/model.hpp"
#include "blockgibbs/rng.hpp"

namespace blockgibbs {

/// One planted outlier entry: either an explicit point, or `count` copies of
/// the exact equidistant point between the listed components' means (the
/// circumcenter within their affine hull).
struct OutlierSpec {
  std::optional<Eigen::VectorXd> point;
  std::vector<int> between;  // 0-based component ids
  int count = 1;
};

struct SimulationSpec {
  std::vector<int> n_per_component;
  Eigen::MatrixXd means;        // K x D
  std::vector<SpdMatrix> covs;  // one per component
  std::vector<OutlierSpec> outliers;
  std::uint64_t seed = 0;
  /// Rescale each component's draws to exact sample moments (mean equal to
  /// the spec mean, sample covariance equal to the spec covariance). Keeps
  /// planted equidistant geometry exact instead of drifting with sampling
  /// noise; requires n_k > D.
  bool standardize = false;
};

struct SimulationResult {
  Eigen::MatrixXd y;                // clustered rows first, outliers appended
  std::vector<int> labels;          // 0-based true component, -1 for outliers
  Eigen::MatrixXd empirical_means;  // K x D means of the generated draws
};

SimulationResult simulate(const SimulationSpec& spec);

/// K points in dim dimensions, pairwise equidistant at `distance`, centered
/// at the origin (scaled regular simplex). Requires dim >= K - 1.
Eigen::MatrixXd equidistant_means(int k, int dim, double distance);

/// The point equidistant from the given means, restricted to their affine
/// hull (midpoint for two means, circumcenter beyond).
Eigen::VectorXd equidistant_point(const Eigen::MatrixXd& means,
                                  const std::vector<int>& components);

}  // namespace blockgibbs

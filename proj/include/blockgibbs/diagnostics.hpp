#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "blockgibbs/sampler.hpp"

namespace blockgibbs {

/// Posterior similarity matrix: entry (i, j) estimates P(C_i = C_j) over the
/// retained samples. Symmetric, unit diagonal, entries in [0, 1].
struct Psm {
  int n = 0;
  Eigen::MatrixXd entries;
};

/// Retains records burn_in, burn_in + thin, ... and counts co-membership.
Psm psm(const ChainTrace& trace, int burn_in = 0, int thin = 1);

/// Sample autocorrelation (biased, divide-by-n estimator) of the binary
/// indicator x_t = I(C_site in component_set); values[0] = 1.
struct AcfSeries {
  int max_lag = 0;
  std::vector<double> values;
};

AcfSeries acf_binary(const ChainTrace& trace, int site,
                     const std::vector<int>& component_set, int max_lag,
                     int burn_in = 0);

/// Acceptance statistics over the block-move records of a trace.
struct AcceptanceSummary {
  long moves = 0;
  long accepted = 0;
  double rate = 0.0;
  double mean_ratio = 0.0;
  std::map<int, long> retry_histogram;  // attempts consumed -> count
};

AcceptanceSummary acceptance_report(const ChainTrace& trace);

}  // namespace blockgibbs

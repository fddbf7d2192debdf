#include "blockgibbs/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace blockgibbs {

namespace {

std::vector<const TraceRecord*> retained(const ChainTrace& trace, int burn_in,
                                         int thin) {
  std::vector<const TraceRecord*> out;
  for (std::size_t r = burn_in; r < trace.records.size(); r += thin) {
    out.push_back(&trace.records[r]);
  }
  return out;
}

}  // namespace

Psm psm(const ChainTrace& trace, int burn_in, int thin) {
  if (burn_in < 0 || thin < 1) {
    throw ConfigError("psm", "burn_in must be >= 0 and thin >= 1");
  }
  const auto records = retained(trace, burn_in, thin);
  if (records.empty()) {
    throw EmptyTrace("no retained samples after burn-in");
  }
  const int n = static_cast<int>(records.front()->assignment.size());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
  for (const TraceRecord* rec : records) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        if (rec->assignment[i] == rec->assignment[j]) counts(i, j) += 1.0;
      }
    }
  }
  Psm out;
  out.n = n;
  out.entries = Eigen::MatrixXd(n, n);
  const double total = static_cast<double>(records.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      out.entries(i, j) = counts(i, j) / total;
      out.entries(j, i) = out.entries(i, j);
    }
  }
  return out;
}

AcfSeries acf_binary(const ChainTrace& trace, int site,
                     const std::vector<int>& component_set, int max_lag,
                     int burn_in) {
  const auto records = retained(trace, burn_in, 1);
  if (records.empty()) {
    throw EmptyTrace("no retained samples after burn-in");
  }
  const int n = static_cast<int>(records.size());
  std::vector<double> x(n);
  for (int t = 0; t < n; ++t) {
    const int label = records[t]->assignment[site];
    x[t] = std::find(component_set.begin(), component_set.end(), label) !=
                   component_set.end()
               ? 1.0
               : 0.0;
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  if (var == 0.0) {
    throw DegenerateSeries("indicator series has zero variance (site fully stuck)");
  }
  AcfSeries series;
  series.max_lag = max_lag;
  series.values.resize(max_lag + 1);
  for (int lag = 0; lag <= max_lag; ++lag) {
    double cov = 0.0;
    for (int t = 0; t + lag < n; ++t) {
      cov += (x[t] - mean) * (x[t + lag] - mean);
    }
    series.values[lag] = cov / var;  // both scaled by 1/n: ratio identical
  }
  return series;
}

AcceptanceSummary acceptance_report(const ChainTrace& trace) {
  AcceptanceSummary summary;
  double ratio_sum = 0.0;
  for (const TraceRecord& rec : trace.records) {
    if (!rec.block_move) continue;
    ++summary.moves;
    if (rec.block_move->accepted) ++summary.accepted;
    ratio_sum += rec.block_move->ratio;
    ++summary.retry_histogram[rec.block_move->retries];
  }
  if (summary.moves > 0) {
    summary.rate = static_cast<double>(summary.accepted) / summary.moves;
    summary.mean_ratio = ratio_sum / summary.moves;
  }
  return summary;
}

}  // namespace blockgibbs

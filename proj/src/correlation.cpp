#include "blockgibbs/correlation.hpp"

#include "blockgibbs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace blockgibbs {

std::vector<ComponentSummary> complement_summaries(
    const Dataset& data, std::span<const int> complement_allocation, int k) {
  if (static_cast<int>(complement_allocation.size()) != data.n()) {
    throw ConfigError("complement_summaries", "allocation length does not match dataset");
  }
  const int d = data.dim();
  std::vector<ComponentSummary> out(k);
  for (auto& s : out) {
    s.mean = Eigen::VectorXd::Zero(d);
    s.scatter = Eigen::MatrixXd::Zero(d, d);
  }
  for (int i = 0; i < data.n(); ++i) {
    const int c = complement_allocation[i];
    if (c == -1) continue;
    if (c < 0 || c >= k) {
      throw ConfigError("complement_summaries", "allocation label out of range");
    }
    out[c].count += 1.0;
    out[c].mean += data.row(i);
  }
  for (auto& s : out) {
    if (s.count > 0) s.mean /= s.count;
  }
  for (int i = 0; i < data.n(); ++i) {
    const int c = complement_allocation[i];
    if (c == -1) continue;
    const Eigen::VectorXd delta = data.row(i) - out[c].mean;
    out[c].scatter += delta * delta.transpose();
  }
  return out;
}

namespace {

// log of one component's factor with the given extra points joined: the
// component posterior scatter is rebuilt densely from the summary via the
// between/within split, independent of the incremental rank-one route.
double log_component_factor(const ComponentSummary& base,
                            std::span<const Eigen::VectorXd* const> received,
                            const Hyperparameters& hp) {
  const int d = hp.dim();
  const double m = static_cast<double>(received.size());
  const double n_star = base.count + m;

  Eigen::MatrixXd scatter_star = base.scatter;
  Eigen::VectorXd mean_star = base.count > 0 ? base.mean : Eigen::VectorXd::Zero(d);
  if (m > 0) {
    Eigen::VectorXd mean_received = Eigen::VectorXd::Zero(d);
    for (const auto* y : received) mean_received += *y;
    mean_received /= m;
    for (const auto* y : received) {
      const Eigen::VectorXd delta = *y - mean_received;
      scatter_star += delta * delta.transpose();  // within
    }
    if (base.count > 0) {
      const Eigen::VectorXd gap = base.mean - mean_received;
      scatter_star += m * base.count / (m + base.count) * gap * gap.transpose();  // between
    }
    mean_star = (base.count * mean_star + m * mean_received) / n_star;
  }

  Eigen::MatrixXd s_star = hp.s0().entries() + scatter_star;
  if (hp.kappa0() > 0.0 && n_star > 0) {
    const Eigen::VectorXd gap = mean_star - hp.m0();
    s_star += hp.kappa0() * n_star / (hp.kappa0() + n_star) * gap * gap.transpose();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(s_star);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("pair_table", "component posterior scatter is not positive definite");
  }
  const double log_det =
      2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();

  double term = std::lgamma(hp.beta() + n_star);
  for (int i = 1; i <= d; ++i) {
    term += std::lgamma(hp.nu0() + n_star + 1.0 - i);
  }
  term -= 0.5 * (hp.nu0() + n_star) * log_det;
  term -= 0.5 * d * std::log(hp.kappa0() + n_star);
  return term;
}

// correlation of a 2x2 table given in log space; stays finite for extreme
// tail geometries where marginals underflow any fixed threshold
double correlation_2x2_from_logs(double l11, double l12, double l21, double l22) {
  const double shift = std::max({l11, l12, l21, l22});
  const double c11 = std::exp(l11 - shift);
  const double c12 = std::exp(l12 - shift);
  const double c21 = std::exp(l21 - shift);
  const double c22 = std::exp(l22 - shift);
  const double row1 = c11 + c12, row2 = c21 + c22;
  const double col1 = c11 + c21, col2 = c12 + c22;
  const double denom = std::sqrt(row1 * row2 * col1 * col2);
  if (!(denom > 0.0)) {
    throw DegenerateMarginal("a marginal of the 2x2 table is exactly zero");
  }
  // p11 - p1.p.1 == p11*p22 - p12*p21 when the table sums to one; the
  // determinant form avoids the catastrophic cancellation of the former
  return (c11 * c22 - c12 * c21) / denom;
}

}  // namespace

Eigen::MatrixXd pair_table_log_cells(std::span<const ComponentSummary> summaries,
                                     const Eigen::VectorXd& y_i,
                                     const Eigen::VectorXd& y_j,
                                     const Hyperparameters& hp) {
  const int k = static_cast<int>(summaries.size());
  Eigen::MatrixXd log_cells(k, k);
  for (int l = 0; l < k; ++l) {
    for (int m = 0; m < k; ++m) {
      double total = 0.0;
      for (int c = 0; c < k; ++c) {
        std::vector<const Eigen::VectorXd*> received;
        if (c == l) received.push_back(&y_i);
        if (c == m) received.push_back(&y_j);
        total += log_component_factor(summaries[c], received, hp);
      }
      log_cells(l, m) = total;
    }
  }
  return log_cells;
}

namespace {

JointAllocationTable normalize_log_table(Eigen::MatrixXd log_cells,
                                         std::string conditioning) {
  const int k = static_cast<int>(log_cells.rows());
  const double shift = log_cells.maxCoeff();
  Eigen::MatrixXd probs = (log_cells.array() - shift).exp();
  probs /= probs.sum();
  JointAllocationTable table;
  table.k = k;
  table.probs = std::move(probs);
  table.conditioning = std::move(conditioning);
  return table;
}

}  // namespace

JointAllocationTable pair_table_from_summaries(
    std::span<const ComponentSummary> summaries, const Eigen::VectorXd& y_i,
    const Eigen::VectorXd& y_j, const Hyperparameters& hp) {
  return normalize_log_table(pair_table_log_cells(summaries, y_i, y_j, hp),
                             "pair given fixed complement summaries");
}

JointAllocationTable pair_table(const Dataset& data,
                                std::span<const int> complement_allocation,
                                int i, int j, const Hyperparameters& hp) {
  if (i == j) {
    throw ConfigError("pair_table", "pair indices must differ");
  }
  if (complement_allocation[i] != -1 || complement_allocation[j] != -1) {
    throw ConfigError("pair_table", "pair indices must be excluded from the complement allocation");
  }
  auto summaries = complement_summaries(data, complement_allocation, hp.k());
  auto table = pair_table_from_summaries(summaries, data.row(i), data.row(j), hp);
  table.conditioning = "pair (" + std::to_string(i) + "," + std::to_string(j) +
                       ") given fixed complement allocation";
  return table;
}

JointAllocationTable pair_table_marginalized(
    const Dataset& data, std::span<const int> complement_allocation,
    const BlockSet& block, int i, int j, const Hyperparameters& hp,
    std::uint64_t max_enumeration) {
  if (!block.contains(i) || !block.contains(j)) {
    throw ConfigError("pair_table_marginalized", "pair indices must belong to the block");
  }
  for (int b : block.indices()) {
    if (complement_allocation[b] != -1) {
      throw ConfigError("pair_table_marginalized",
                        "block indices must be excluded from the complement allocation");
    }
  }
  const int k = hp.k();
  auto summaries = complement_summaries(data, complement_allocation, k);
  const Eigen::VectorXd y_i = data.row(i);
  const Eigen::VectorXd y_j = data.row(j);

  std::vector<int> rest;
  for (int b : block.indices()) {
    if (b != i && b != j) rest.push_back(b);
  }
  const int r = static_cast<int>(rest.size());

  // streaming log-sum-exp accumulator per (l, m) cell; every slice shares
  // one normalizer, so sum unnormalized and normalize once at the end
  Eigen::MatrixXd run_max =
      Eigen::MatrixXd::Constant(k, k, -std::numeric_limits<double>::infinity());
  Eigen::MatrixXd run_sum = Eigen::MatrixXd::Zero(k, k);
  auto accumulate = [&](int l, int m, double log_value) {
    if (log_value == -std::numeric_limits<double>::infinity()) return;
    if (log_value > run_max(l, m)) {
      run_sum(l, m) = run_sum(l, m) * std::exp(run_max(l, m) - log_value) + 1.0;
      run_max(l, m) = log_value;
    } else {
      run_sum(l, m) += std::exp(log_value - run_max(l, m));
    }
  };

  // one slice: joint table of (C_i, C_j) with the rest of the block fixed
  // to `rest_labels`; log_weight carries the multiset multiplicity
  std::vector<const Eigen::VectorXd*> received;
  std::vector<Eigen::VectorXd> rest_values;
  rest_values.reserve(r);
  for (int b : rest) rest_values.push_back(data.row(b));
  auto add_slice = [&](std::span<const int> rest_labels, double log_weight) {
    for (int l = 0; l < k; ++l) {
      for (int m = 0; m < k; ++m) {
        double total = 0.0;
        for (int c = 0; c < k; ++c) {
          received.clear();
          if (c == l) received.push_back(&y_i);
          if (c == m) received.push_back(&y_j);
          for (int t = 0; t < r; ++t) {
            if (rest_labels[t] == c) received.push_back(&rest_values[t]);
          }
          total += log_component_factor(summaries[c], received, hp);
        }
        accumulate(l, m, total + log_weight);
      }
    }
  };

  bool identical_values = true;
  for (int b : block.indices()) {
    if (data.matrix().row(b) != data.matrix().row(block.indices().front())) {
      identical_values = false;
      break;
    }
  }

  if (r == 0) {
    std::vector<int> none;
    add_slice(none, 0.0);
  } else if (identical_values) {
    // identical block values: allocations of the rest collapse to count
    // vectors with multinomial multiplicity
    std::vector<int> counts(k, 0);
    std::vector<int> rest_labels(r);
    double log_r_factorial = std::lgamma(r + 1.0);
    auto emit = [&]() {
      int t = 0;
      for (int c = 0; c < k; ++c) {
        for (int cnt = 0; cnt < counts[c]; ++cnt) rest_labels[t++] = c;
      }
      double log_weight = log_r_factorial;
      for (int c = 0; c < k; ++c) log_weight -= std::lgamma(counts[c] + 1.0);
      add_slice(rest_labels, log_weight);
    };
    // enumerate compositions of r into k parts
    std::function<void(int, int)> recurse = [&](int comp, int remaining) {
      if (comp == k - 1) {
        counts[comp] = remaining;
        emit();
        return;
      }
      for (int c = remaining; c >= 0; --c) {
        counts[comp] = c;
        recurse(comp + 1, remaining - c);
      }
    };
    recurse(0, r);
  } else {
    std::uint64_t slices = 1;
    for (int t = 0; t < r; ++t) {
      if (slices > max_enumeration / static_cast<std::uint64_t>(k)) {
        throw EnumerationTooLarge("pair_table_marginalized",
                                  "K^(B-2) exceeds the enumeration guard");
      }
      slices *= static_cast<std::uint64_t>(k);
    }
    std::vector<int> rest_labels(r);
    for (std::uint64_t s = 0; s < slices; ++s) {
      std::uint64_t c = s;
      for (int t = r - 1; t >= 0; --t) {
        rest_labels[t] = static_cast<int>(c % k);
        c /= k;
      }
      add_slice(rest_labels, 0.0);
    }
  }

  Eigen::MatrixXd log_cells(k, k);
  for (int l = 0; l < k; ++l) {
    for (int m = 0; m < k; ++m) {
      log_cells(l, m) = run_max(l, m) + std::log(run_sum(l, m));
    }
  }
  return normalize_log_table(
      log_cells, "pair (" + std::to_string(i) + "," + std::to_string(j) +
                     ") marginalized over remaining block members");
}

double pair_correlation(const JointAllocationTable& table) {
  if (table.k != 2) {
    throw ConfigError("pair_correlation", "pair correlation requires K = 2");
  }
  const double p11 = table.probs(0, 0), p12 = table.probs(0, 1);
  const double p21 = table.probs(1, 0), p22 = table.probs(1, 1);
  const double row1 = p11 + p12, col1 = p11 + p21;
  const double tol = 1e-14;
  if (row1 < tol || 1.0 - row1 < tol || col1 < tol || 1.0 - col1 < tol) {
    throw DegenerateMarginal("a marginal allocation probability is 0 or 1 within 1e-14");
  }
  return (p11 * p22 - p12 * p21) /
         std::sqrt(row1 * (1.0 - row1) * col1 * (1.0 - col1));
}

PartitionSplit indicator_split(const JointAllocationTable& table, int k_prime) {
  if (k_prime < 1 || k_prime >= table.k) {
    throw ConfigError("indicator_split", "k' must satisfy 1 <= k' < K");
  }
  PartitionSplit split;
  split.k_prime = k_prime;
  for (int l = 0; l < table.k; ++l) {
    for (int m = 0; m < table.k; ++m) {
      const bool li = l < k_prime;  // I(C_i <= k') with 1-based labels
      const bool mi = m < k_prime;
      if (li && mi) split.p11 += table.probs(l, m);
      else if (li && !mi) split.p12 += table.probs(l, m);
      else if (!li && mi) split.p21 += table.probs(l, m);
      else split.p22 += table.probs(l, m);
    }
  }
  return split;
}

RateBound rate_lower_bound(const JointAllocationTable& table) {
  RateBound bound;
  bound.table = table;
  bound.value = -1.0;
  const double tol = 1e-14;
  for (int k_prime = 1; k_prime < table.k; ++k_prime) {
    const PartitionSplit s = indicator_split(table, k_prime);
    const double row1 = s.p11 + s.p12, col1 = s.p11 + s.p21;
    if (row1 < tol || 1.0 - row1 < tol || col1 < tol || 1.0 - col1 < tol) {
      continue;  // degenerate split carries no rate information
    }
    const double cor = (s.p11 * s.p22 - s.p12 * s.p21) /
                       std::sqrt(row1 * (1.0 - row1) * col1 * (1.0 - col1));
    if (cor * cor > bound.value) {
      bound.value = cor * cor;
      bound.k_prime_argmax = k_prime;
    }
  }
  if (bound.value < 0.0) {
    throw AllSplitsDegenerate("every indicator split has a degenerate marginal");
  }
  return bound;
}

namespace {

void surface_node_geometry(const SurfaceSpec& spec, double a, double b,
                           Eigen::VectorXd& mean1, Eigen::VectorXd& mean2,
                           Eigen::VectorXd& y_i, Eigen::VectorXd& y_j) {
  const Eigen::VectorXd u = spec.direction / spec.direction.norm();
  if (spec.mode == SurfaceSpec::Mode::EqualValue) {
    y_i = Eigen::VectorXd::Zero(u.size());
    y_j = y_i;
    mean1 = -a * u;
    mean2 = b * u;
  } else {
    mean1 = Eigen::VectorXd::Zero(u.size());
    mean2 = spec.separation * u;
    y_i = a * u;
    y_j = b * u;
  }
}

}  // namespace

double surface_node_correlation(const SurfaceSpec& spec, double a, double b,
                                const Hyperparameters& hp) {
  if (hp.k() != 2) {
    throw ConfigError("correlation_surface", "surface geometry requires K = 2");
  }
  Eigen::VectorXd mean1, mean2, y_i, y_j;
  surface_node_geometry(spec, a, b, mean1, mean2, y_i, y_j);
  std::vector<ComponentSummary> summaries(2);
  summaries[0] = {spec.count1, mean1, spec.scatter1};
  summaries[1] = {spec.count2, mean2, spec.scatter2};
  const Eigen::MatrixXd log_cells = pair_table_log_cells(summaries, y_i, y_j, hp);
  return correlation_2x2_from_logs(log_cells(0, 0), log_cells(0, 1),
                                   log_cells(1, 0), log_cells(1, 1));
}

std::vector<double> correlation_surface(const SurfaceSpec& spec,
                                        const Hyperparameters& hp) {
  std::vector<double> grid;
  grid.reserve(spec.axis1.size() * spec.axis2.size());
  for (double a : spec.axis1) {
    for (double b : spec.axis2) {
      grid.push_back(surface_node_correlation(spec, a, b, hp));
    }
  }
  return grid;
}

std::vector<int> detect_outlier_block(const AllocationState& state,
                                      const Hyperparameters& hp,
                                      const DetectThresholds& thresholds) {
  const Dataset& data = state.dataset();
  const int n = data.n();

  // identical-value companions, the one group a stuck state cannot hide:
  // holding them out alongside the candidate unmasks shared ambiguity
  std::vector<std::vector<int>> duplicates(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i && data.matrix().row(i) == data.matrix().row(j)) {
        duplicates[i].push_back(j);
      }
    }
  }

  // Flag sites whose single-site conditional is nearly split between its top
  // two components ("approximately equidistant"). Correlated companions mask
  // one another when parked in the same component, so the held-out set is
  // grown to a fixpoint: each round retests every site with the previous
  // round's flags (plus the site's value-duplicates) held out.
  std::vector<int> flagged;
  std::vector<double> probs(hp.k());
  for (int round = 0; round < 10; ++round) {
    AllocationState scratch(data, hp, state.assignment());
    for (int j : flagged) scratch.remove_observation(j);
    std::vector<int> next;
    for (int i = 0; i < n; ++i) {
      if (state.label(i) == -1) continue;
      std::vector<int> removed;
      if (scratch.label(i) != -1) {
        scratch.remove_observation(i);
        removed.push_back(i);
      }
      for (int j : duplicates[i]) {
        if (scratch.label(j) != -1) {
          scratch.remove_observation(j);
          removed.push_back(j);
        }
      }
      const Eigen::VectorXd y = data.row(i);
      for (int k = 0; k < hp.k(); ++k) {
        probs[k] = log_add_delta(scratch.stats(k), y, hp);
      }
      log_normalize(probs);
      for (int j : removed) scratch.add_observation(j, state.label(j));
      std::vector<double> sorted = probs;
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      if (sorted.size() >= 2 && sorted[0] > 0.0 &&
          sorted[1] / sorted[0] >= thresholds.tau) {
        next.push_back(i);
      }
    }
    const bool stable = next == flagged;
    flagged = std::move(next);
    if (stable) break;
  }
  if (flagged.empty()) return {};

  // Connect flagged pairs whose rate lower bound clears the threshold. The
  // other flagged members are marginalized out rather than left parked, so
  // a stuck configuration cannot dilute the bound.
  const int f = static_cast<int>(flagged.size());
  std::vector<int> parent(f);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<int> complement = state.assignment();
  for (int i : flagged) complement[i] = -1;
  for (int a = 0; a < f; ++a) {
    for (int b = a + 1; b < f; ++b) {
      try {
        JointAllocationTable table;
        if (f == 2) {
          table = pair_table(data, complement, flagged[a], flagged[b], hp);
        } else {
          table = pair_table_marginalized(data, complement, BlockSet(flagged),
                                          flagged[a], flagged[b], hp);
        }
        const auto bound = rate_lower_bound(table);
        if (bound.value >= thresholds.rho_min) {
          parent[find(a)] = find(b);
        }
      } catch (const AllSplitsDegenerate&) {
        // no usable split, no edge
      } catch (const EnumerationTooLarge&) {
        // fall back to the unmarginalized pair given everything else parked
        std::vector<int> pair_complement = state.assignment();
        pair_complement[flagged[a]] = -1;
        pair_complement[flagged[b]] = -1;
        try {
          const auto table =
              pair_table(data, pair_complement, flagged[a], flagged[b], hp);
          if (rate_lower_bound(table).value >= thresholds.rho_min) {
            parent[find(a)] = find(b);
          }
        } catch (const AllSplitsDegenerate&) {
        }
      }
    }
  }

  // largest connected group; ties resolve to the one with the smallest index
  std::vector<std::vector<int>> groups(f);
  for (int a = 0; a < f; ++a) groups[find(a)].push_back(flagged[a]);
  std::vector<int> best;
  for (const auto& g : groups) {
    if (g.size() > best.size()) best = g;
  }

  if (static_cast<int>(best.size()) > thresholds.max_block_size) {
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(data.dim());
    for (int i : best) centroid += data.row(i);
    centroid /= static_cast<double>(best.size());
    std::stable_sort(best.begin(), best.end(), [&](int x, int y) {
      return (data.row(x) - centroid).squaredNorm() <
             (data.row(y) - centroid).squaredNorm();
    });
    best.resize(thresholds.max_block_size);
    std::sort(best.begin(), best.end());
  }
  return best;
}

}  // namespace blockgibbs

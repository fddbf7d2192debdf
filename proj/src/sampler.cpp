#include "blockgibbs/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace blockgibbs {

namespace {

void single_site_update(AllocationState& state, const Hyperparameters& hp,
                        int site, Rng& rng, std::vector<double>& work) {
  const int old_label = state.label(site);
  state.remove_observation(site);
  try {
    const Eigen::VectorXd y = state.dataset().row(site);
    work.resize(hp.k());
    for (int k = 0; k < hp.k(); ++k) {
      work[k] = log_add_delta(state.stats(k), y, hp);
    }
    log_normalize(work);
    const int drawn = static_cast<int>(rng.categorical(work));
    state.add_observation(site, drawn);
  } catch (...) {
    if (state.label(site) == -1 && old_label != -1) {
      state.add_observation(site, old_label);
    }
    throw;
  }
}

}  // namespace

void gibbs_sweep(AllocationState& state, const Hyperparameters& hp,
                 std::span<const int> order, SweepMode mode, Rng& rng) {
  std::vector<double> work;
  for (int site : order) {
    single_site_update(state, hp, site, rng, work);
  }
  if (mode == SweepMode::Reversible) {
    // descending pass repeats the boundary site; the composite kernel is
    // self-adjoint with respect to the target
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      single_site_update(state, hp, *it, rng, work);
    }
  }
}

std::uint64_t block_cell_count(int k, int b, std::uint64_t max_enumeration,
                               const char* op) {
  std::uint64_t cells = 1;
  for (int t = 0; t < b; ++t) {
    if (cells > max_enumeration / static_cast<std::uint64_t>(k)) {
      throw EnumerationTooLarge(op, "K^B exceeds the enumeration guard");
    }
    cells *= static_cast<std::uint64_t>(k);
  }
  if (cells > max_enumeration) {
    throw EnumerationTooLarge(op, "K^B exceeds the enumeration guard");
  }
  return cells;
}

void decode_block_cell(std::uint64_t cell, int k, std::span<int> labels_out) {
  for (std::size_t t = labels_out.size(); t-- > 0;) {
    labels_out[t] = static_cast<int>(cell % static_cast<std::uint64_t>(k));
    cell /= static_cast<std::uint64_t>(k);
  }
}

std::vector<double> enumerate_block_conditional(const AllocationState& held_out,
                                                const BlockSet& block,
                                                const Hyperparameters& hp,
                                                std::uint64_t max_enumeration) {
  const int b = block.size();
  const std::uint64_t cells =
      block_cell_count(hp.k(), b, max_enumeration, "blocked_step_exact");
  BlockConditionalEvaluator eval(held_out, block);
  std::vector<int> labels(b);
  std::vector<double> log_values(cells);
  for (std::uint64_t c = 0; c < cells; ++c) {
    decode_block_cell(c, hp.k(), labels);
    log_values[c] = eval.log_conditional(labels);
  }
  log_normalize(log_values);
  return log_values;
}

namespace {

struct HeldOutBlock {
  // removes block members on construction; restore() puts them back
  HeldOutBlock(AllocationState& state, const BlockSet& block) : state_(state), block_(block) {
    old_labels_.reserve(block.indices().size());
    for (int i : block.indices()) {
      old_labels_.push_back(state.label(i));
      state.remove_observation(i);
    }
    released_ = false;
  }

  void assign(std::span<const int> labels) {
    const auto& idx = block_.indices();
    for (std::size_t t = 0; t < idx.size(); ++t) {
      state_.add_observation(idx[t], labels[t]);
    }
    released_ = true;
  }

  void restore() { assign(old_labels_); }

  ~HeldOutBlock() {
    if (!released_) {
      // exception unwind: put the block back so the state stays consistent
      try {
        for (std::size_t t = 0; t < old_labels_.size(); ++t) {
          if (state_.label(block_.indices()[t]) == -1) {
            state_.add_observation(block_.indices()[t], old_labels_[t]);
          }
        }
      } catch (...) {
        // unrecoverable; leave the remaining members held out
      }
    }
  }

  const std::vector<int>& old_labels() const { return old_labels_; }

private:
  AllocationState& state_;
  const BlockSet& block_;
  std::vector<int> old_labels_;
  bool released_ = true;
};

// log of the unnormalized approximate cell density: exact Gamma/kappa terms,
// second-order determinant expansion of |S_{k\b} + Q_k| for the determinant
// term, with Q_k the between-plus-within perturbation of the candidate cell.
double log_cell_approx(const AllocationState& held_out, const BlockSet& block,
                       std::span<const int> labels, const Hyperparameters& hp) {
  const int d = hp.dim();
  const Dataset& data = held_out.dataset();
  double total = 0.0;
  for (int k = 0; k < hp.k(); ++k) {
    const ComponentStats& cs = held_out.stats(k);
    const double n_kb = cs.count();
    // gather block members assigned to k under this cell
    Eigen::VectorXd received_sum = Eigen::VectorXd::Zero(d);
    int m = 0;
    const auto& idx = block.indices();
    for (std::size_t t = 0; t < idx.size(); ++t) {
      if (labels[t] == k) {
        received_sum += data.row(idx[t]);
        ++m;
      }
    }
    const double n_star = n_kb + m;
    double log_det = cs.posterior_scatter_fact().log_det();
    if (m > 0) {
      const Eigen::VectorXd mean_block = received_sum / m;
      Eigen::MatrixXd q = Eigen::MatrixXd::Zero(d, d);
      for (std::size_t t = 0; t < idx.size(); ++t) {
        if (labels[t] == k) {
          const Eigen::VectorXd delta = data.row(idx[t]) - mean_block;
          q += delta * delta.transpose();
        }
      }
      if (n_kb > 0) {
        const Eigen::VectorXd gap = cs.mean() - mean_block;
        q += m * n_kb / (m + n_kb) * gap * gap.transpose();
      }
      log_det += log_second_order_factor(cs.posterior_scatter_fact(), q, 1.0);
    }
    total += std::lgamma(hp.beta() + n_star);
    for (int i = 1; i <= d; ++i) {
      total += std::lgamma(hp.nu0() + n_star + 1.0 - i);
    }
    total -= 0.5 * (hp.nu0() + n_star) * log_det;
    total -= 0.5 * d * std::log(hp.kappa0() + n_star);
  }
  return total;
}

}  // namespace

BlockMoveRecord blocked_step_exact(AllocationState& state,
                                   const Hyperparameters& hp,
                                   const BlockSet& block,
                                   std::uint64_t max_enumeration, Rng& rng) {
  HeldOutBlock held(state, block);
  std::vector<double> probs =
      enumerate_block_conditional(state, block, hp, max_enumeration);
  const std::uint64_t drawn = rng.categorical(probs);
  std::vector<int> labels(block.size());
  decode_block_cell(drawn, hp.k(), labels);
  held.assign(labels);
  BlockMoveRecord record;
  record.proposal = labels;
  record.accepted = true;
  record.ratio = 1.0;
  return record;
}

BlockMoveRecord blocked_step_approx(AllocationState& state,
                                    const Hyperparameters& hp,
                                    const BlockSet& block,
                                    const ApproxOptions& options, Rng& rng) {
  const int b = block.size();
  const std::uint64_t cells =
      block_cell_count(hp.k(), b, options.max_enumeration, "blocked_step_approx");

  HeldOutBlock held(state, block);

  // Step 1: approximate conditional over all cells
  std::vector<int> labels(b);
  std::vector<double> log_fhat(cells);
  BlockConditionalEvaluator exact_eval(state, block);
  for (std::uint64_t c = 0; c < cells; ++c) {
    decode_block_cell(c, hp.k(), labels);
    log_fhat[c] = options.proposal_from_exact
                      ? exact_eval.log_conditional(labels)
                      : log_cell_approx(state, block, labels, hp);
  }
  std::vector<double> proposal_probs = log_fhat;
  const double log_norm_fhat = log_normalize(proposal_probs);
  for (double& lf : log_fhat) lf -= log_norm_fhat;  // normalized in log space

  // Exact log density per cell, either precomputed over the grid or lazily.
  std::vector<double> log_f(cells, std::numeric_limits<double>::quiet_NaN());
  auto exact_at = [&](std::uint64_t c) {
    if (std::isnan(log_f[c])) {
      decode_block_cell(c, hp.k(), labels);
      log_f[c] = exact_eval.log_conditional(labels);
    }
    return log_f[c];
  };

  double log_ratio_scale = -std::numeric_limits<double>::infinity();
  if (options.ratio_mode == RatioMode::ExactNormalization) {
    std::vector<double> exact_probs(cells);
    for (std::uint64_t c = 0; c < cells; ++c) exact_probs[c] = exact_at(c);
    const double log_norm_f = log_normalize(exact_probs);
    for (std::uint64_t c = 0; c < cells; ++c) {
      log_f[c] -= log_norm_f;
      log_ratio_scale = std::max(log_ratio_scale, log_f[c] - log_fhat[c]);
    }
  } else if (options.ratio_mode == RatioMode::Lazy) {
    // seed the running maximum with the current cell per the lazy scheme
    std::uint64_t current_cell = 0;
    for (int lbl : held.old_labels()) {
      current_cell = current_cell * static_cast<std::uint64_t>(hp.k()) +
                     static_cast<std::uint64_t>(lbl);
    }
    log_ratio_scale = exact_at(current_cell) - log_fhat[current_cell];
  }

  BlockMoveRecord record;
  for (int attempt = 1; attempt <= options.max_retries; ++attempt) {
    const std::uint64_t proposal = rng.categorical(proposal_probs);
    decode_block_cell(proposal, hp.k(), labels);
    record.proposal.assign(labels.begin(), labels.end());
    record.retries = attempt;

    double log_r;
    switch (options.ratio_mode) {
      case RatioMode::ExactNormalization:
        log_r = log_f[proposal] - log_fhat[proposal] - log_ratio_scale;
        break;
      case RatioMode::Lazy: {
        const double w = exact_at(proposal) - log_fhat[proposal];
        log_ratio_scale = std::max(log_ratio_scale, w);
        log_r = w - log_ratio_scale;
        break;
      }
      case RatioMode::Literal:
      default:
        // raw f/fhat on the shared unnormalized constant basis
        log_r = exact_at(proposal) - (log_fhat[proposal] + log_norm_fhat);
        break;
    }
    record.ratio = std::exp(log_r);

    const double u = rng.uniform();
    if (record.ratio > u) {
      held.assign(labels);
      record.accepted = true;
      return record;
    }
  }
  held.restore();
  record.accepted = false;
  return record;
}

std::vector<int> kmeans_labels(const Dataset& data, int k, Rng& rng,
                               int iterations) {
  const int n = data.n();
  const int d = data.dim();
  std::vector<int> center_rows;
  while (static_cast<int>(center_rows.size()) < std::min(k, n)) {
    const int candidate = static_cast<int>(rng.uniform_int(n));
    if (std::find(center_rows.begin(), center_rows.end(), candidate) ==
        center_rows.end()) {
      center_rows.push_back(candidate);
    }
  }
  Eigen::MatrixXd centers(k, d);
  for (int c = 0; c < k; ++c) {
    centers.row(c) = data.matrix().row(center_rows[c % center_rows.size()]);
  }

  std::vector<int> labels(n, 0);
  for (int it = 0; it < iterations; ++it) {
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double dist = (data.matrix().row(i) - centers.row(c)).squaredNorm();
        if (dist < best_dist) {
          best_dist = dist;
          best = c;
        }
      }
      labels[i] = best;
    }
    for (int c = 0; c < k; ++c) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
      int count = 0;
      for (int i = 0; i < n; ++i) {
        if (labels[i] == c) {
          sum += data.matrix().row(i);
          ++count;
        }
      }
      if (count > 0) centers.row(c) = sum / count;
    }
  }
  return labels;
}

ChainTrace run_chain(const Dataset& data, const Hyperparameters& hp,
                     const SamplerConfig& config,
                     const std::optional<std::vector<int>>& initial) {
  if (config.iterations < 0 || config.thin < 1 || config.block_every < 1 ||
      config.max_retries < 1) {
    throw ConfigError("run_chain", "invalid sampler configuration");
  }
  if (config.block) {
    for (int i : config.block->indices()) {
      if (i >= data.n()) {
        throw ConfigError("run_chain", "block index out of dataset range");
      }
    }
    if (config.block_style != BlockStyle::SingleSite) {
      block_cell_count(hp.k(), config.block->size(), config.max_enumeration,
                       "run_chain");
    }
  }

  Rng rng(config.seed);
  std::vector<int> assignment;
  if (initial) {
    assignment = *initial;
  } else if (config.init == SamplerConfig::Init::KMeans) {
    assignment = kmeans_labels(data, hp.k(), rng);
  } else {
    assignment.resize(data.n());
    for (int& a : assignment) a = static_cast<int>(rng.uniform_int(hp.k()));
  }
  AllocationState state(data, hp, assignment);

  std::vector<int> sweep_sites;
  sweep_sites.reserve(data.n());
  for (int i = 0; i < data.n(); ++i) {
    if (!config.block || !config.block->contains(i)) sweep_sites.push_back(i);
  }

  ChainTrace trace;
  auto record = [&](long iter, const std::optional<BlockMoveRecord>& bm) {
    TraceRecord rec;
    rec.iteration = iter;
    rec.assignment = state.assignment();
    rec.log_density = log_marginal_allocation(state, hp);
    rec.block_move = bm;
    trace.records.push_back(std::move(rec));
  };
  record(0, std::nullopt);

  ApproxOptions approx_options;
  approx_options.ratio_mode = config.ratio_mode;
  approx_options.max_retries = config.max_retries;
  approx_options.max_enumeration = config.max_enumeration;

  std::vector<double> work;
  for (long iter = 1; iter <= config.iterations; ++iter) {
    try {
      gibbs_sweep(state, hp, sweep_sites, config.sweep_mode, rng);
      std::optional<BlockMoveRecord> bm;
      if (config.block && iter % config.block_every == 0) {
        switch (config.block_style) {
          case BlockStyle::Exact:
            bm = blocked_step_exact(state, hp, *config.block,
                                    config.max_enumeration, rng);
            break;
          case BlockStyle::Approx:
            bm = blocked_step_approx(state, hp, *config.block, approx_options, rng);
            break;
          case BlockStyle::SingleSite:
            for (int i : config.block->indices()) {
              single_site_update(state, hp, i, rng, work);
            }
            break;
        }
      }
      if (iter % config.thin == 0) record(iter, bm);
    } catch (const Error& e) {
      throw Error(e.module_name(), e.op_name(),
                  "chain aborted at iteration " + std::to_string(iter) + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace blockgibbs

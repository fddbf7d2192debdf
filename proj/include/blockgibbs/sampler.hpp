#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "blockgibbs/model.hpp"
#include "blockgibbs/rng.hpp"

namespace blockgibbs {

enum class SweepMode { Forward, Reversible };

/// How the configured block is moved at each cadence tick: one joint draw
/// from the exact enumerated conditional, the approximate proposal with
/// accept-reject, or consecutive single-site updates (the cadence-matched
/// baseline regime).
enum class BlockStyle { Exact, Approx, SingleSite };

/// How the accept-reject ratio r = f/fhat is normalized. ExactNormalization
/// computes exact f over the whole enumerated grid and scales by the maximum
/// ratio, making the move a true rejection sampler for the block conditional.
/// Lazy evaluates exact f only at visited cells and scales by the running
/// maximum. Literal applies the raw ratio with no scaling (compatibility
/// switch; not guaranteed to preserve the target exactly).
enum class RatioMode { ExactNormalization, Lazy, Literal };

struct ApproxOptions {
  RatioMode ratio_mode = RatioMode::ExactNormalization;
  int max_retries = 25;
  std::uint64_t max_enumeration = 1ull << 20;
  /// Testing hook: propose from the exact conditional instead of the
  /// second-order approximation, reducing the step to blocked_step_exact.
  bool proposal_from_exact = false;
};

struct SamplerConfig {
  std::uint64_t seed = 0;
  SweepMode sweep_mode = SweepMode::Forward;
  std::optional<BlockSet> block;
  int block_every = 1;
  BlockStyle block_style = BlockStyle::Exact;
  RatioMode ratio_mode = RatioMode::ExactNormalization;
  std::uint64_t max_enumeration = 1ull << 20;  // guard on K^B cells
  int max_retries = 25;
  int thin = 1;
  long iterations = 0;
  enum class Init { Random, KMeans } init = Init::Random;
};

struct BlockMoveRecord {
  std::vector<int> proposal;  // proposed block labels, 0-based
  bool accepted = false;
  double ratio = 1.0;
  int retries = 1;  // attempts consumed (in-memory only, not serialized)
};

struct TraceRecord {
  long iteration = 0;
  std::vector<int> assignment;  // 0-based labels
  double log_density = 0.0;
  std::optional<BlockMoveRecord> block_move;
};

struct ChainTrace {
  std::vector<TraceRecord> records;
};

/// Resamples each site in `order` from its collapsed full conditional
/// (remove, score K labels, draw, re-add). Reversible mode follows the
/// forward pass with the same sites in descending order, repeating the
/// boundary site. A numeric failure aborts with the state restored to the
/// last consistent site.
void gibbs_sweep(AllocationState& state, const Hyperparameters& hp,
                 std::span<const int> order, SweepMode mode, Rng& rng);

/// Number of block assignment cells, K^B, guarded against overflow/guard.
std::uint64_t block_cell_count(int k, int b, std::uint64_t max_enumeration,
                               const char* op);

/// Decodes cell index into per-member labels (first block member varies
/// slowest).
void decode_block_cell(std::uint64_t cell, int k, std::span<int> labels_out);

/// Exact normalized block conditional over all K^B cells, in decode order.
/// Block members must be held out of `held_out`.
std::vector<double> enumerate_block_conditional(const AllocationState& held_out,
                                                const BlockSet& block,
                                                const Hyperparameters& hp,
                                                std::uint64_t max_enumeration);

/// Draws the block assignment exactly from the enumerated K^B conditional
/// given the complement. Block members must currently be assigned.
BlockMoveRecord blocked_step_exact(AllocationState& state,
                                   const Hyperparameters& hp,
                                   const BlockSet& block,
                                   std::uint64_t max_enumeration, Rng& rng);

/// Approximate blocked move: score all K^B cells with the second-order
/// determinant expansion around the cached complement factorizations,
/// propose from that table, then accept-reject against the exact density.
/// Rejection retries up to max_retries; exhaustion leaves the state
/// unchanged (reported in the returned record, not fatal).
BlockMoveRecord blocked_step_approx(AllocationState& state,
                                    const Hyperparameters& hp,
                                    const BlockSet& block,
                                    const ApproxOptions& options, Rng& rng);

/// k-means style seeding for initial allocations (Lloyd iterations from
/// randomly chosen distinct centers).
std::vector<int> kmeans_labels(const Dataset& data, int k, Rng& rng,
                               int iterations = 20);

/// Runs a full chain: per iteration one sweep over non-block sites, plus a
/// block move every block_every iterations when a block is configured.
/// Records the initial state and every thin-th iteration thereafter.
ChainTrace run_chain(const Dataset& data, const Hyperparameters& hp,
                     const SamplerConfig& config,
                     const std::optional<std::vector<int>>& initial = std::nullopt);

}  // namespace blockgibbs

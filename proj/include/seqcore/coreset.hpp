#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "seqcore/core.hpp"
#include "seqcore/models.hpp"

namespace seqcore {

// Points bucketed by their loss at the anchor: layer 0 holds f_i <= H,
// layer j >= 1 holds 2^(j-1) H < f_i <= 2^j H, with H = F(anchor).
struct LayerPartition {
  double H = 0.0;
  int N = 0;  // ceil(log2 n); there are N + 1 layers
  std::vector<std::vector<Index>> layers;
  Vector anchor_losses;

  Index n() const { return anchor_losses.size(); }
  std::vector<Index> layer_sizes() const;
  Index non_empty_layers() const;
};

// Layer of a loss value relative to H, following the threshold predicate above.
int layer_of(double loss, double H);

// Throws DegenerateAnchorError when H = 0.
LayerPartition partition_layers(const Dataset& data, const LossModel& model, const Hypothesis& anchor);

enum class SizeMode { theoretical, budget };

struct PlanParams {
  double eps = 0.0;
  double R = 0.0;
  double L = 0.0;
  double M = 0.0;
  double m_lower = 0.0;
  double lambda_fail = 0.0;
  std::optional<Index> sparsity_k;
};

struct SizePlan {
  SizeMode mode = SizeMode::budget;
  std::vector<Index> per_layer;  // |Q_j|, capped at |P_j|
  Index total = 0;
  double uncapped_total = 0.0;  // sum of formula sizes before capping (theoretical mode)
  double eps1 = 0.0;
  double eps2 = 0.0;
  double log_grid = 0.0;  // log |G|
  PlanParams params;
};

// ceil(1/2 (2^(j-1) H + L R^2 + 2 M R)^2 delta^-2 ln(2/lambda)) for j >= 1 and
// ceil(1/2 (H + L R^2 / 2 + M R)^2 delta^-2 ln(2/lambda)) for j = 0. Returned
// as a double since the value can exceed any integer type.
double theoretical_layer_size(int j, double H, double L, double M, double R, double delta, double lambda_fail);

// log of the grid size covering the ball with cells of side eps2 R / sqrt(dim);
// the sparse form covers a union of C(dim, k) k-dimensional balls. Never negative.
double grid_log_size(Index dim, double eps2, std::optional<Index> sparsity_k = std::nullopt);

// max(eta H, H - Mbar R - L R^2 / 2): a computable lower bound on min_ball F.
double default_m_lower(double H, const SmoothnessConstants& constants, double R, double eta = 0.1);

// Per-layer sizes that make the coreset a local eps-coreset with probability
// at least 1 - lambda_fail. dim is the hypothesis dimension p.
SizePlan theoretical_plan(const LayerPartition& partition, const SmoothnessConstants& constants, double eps,
                          double R, double lambda_fail, Index dim, std::optional<double> m_lower = std::nullopt,
                          std::optional<Index> sparsity_k = std::nullopt);

// Splits a fixed budget across the non-empty layers in proportion to
// |P_j| times the layer's loss range inside the ball, capping at |P_j| and
// handing overflow to the remaining layers. Every non-empty layer gets >= 1.
SizePlan budget_plan(const LayerPartition& partition, const SmoothnessConstants& constants, Index budget, double R);

// Samples |Q_j| points per layer without replacement; each sampled point gets
// weight |P_j| / |Q_j|. Layer j draws from a stream derived from (seed, j).
Coreset build_local_coreset(const LayerPartition& partition, const SizePlan& plan, std::uint64_t seed);

struct CoresetRequest {
  SizeMode mode = SizeMode::budget;
  Index budget = 0;
  double eps = 0.25;
  double R = 0.0;
  std::optional<double> lambda_fail;  // defaults to 1/n
  std::optional<double> m_lower;
  std::optional<Index> sparsity_k;
};

struct LocalCoreset {
  Coreset coreset;
  std::optional<LayerPartition> partition;  // empty for a degenerate anchor
  std::optional<SizePlan> plan;
  SmoothnessConstants constants{};
};

// Partition, plan and sample in one call. A degenerate anchor (H = 0) yields
// the all-ones coreset.
LocalCoreset construct_local_coreset(const Dataset& data, const LossModel& model, const Hypothesis& anchor,
                                     const CoresetRequest& request, std::uint64_t seed);

// size indices uniformly without replacement, each with weight n / size.
Coreset uniform_baseline(const Dataset& data, Index size, std::uint64_t seed);

// Draw counts of size draws with replacement under
// p_i = (1 - mix) s_i / sum(s) + mix / n.
std::vector<Index> importance_draws(const Vector& scores, Index size, std::uint64_t seed, double mix);

// Importance coreset from scores: each draw adds 1 / (size p_i), then the
// weights are rescaled to sum to n. All-zero scores fall back to uniform.
Coreset importance_from_scores(const Dataset& data, const Vector& scores, Index size, std::uint64_t seed,
                               double mix = 0.5);

using PilotFit = std::function<Hypothesis(const Coreset&)>;

// Fits a pilot on a uniform subsample, scores points by their pilot loss, and
// samples with importance_from_scores.
Coreset importance_baseline(const Dataset& data, const LossModel& model, Index size, std::uint64_t seed,
                            const PilotFit& pilot_fit, double mix = 0.5);

}  // namespace seqcore

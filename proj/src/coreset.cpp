#include "seqcore/coreset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "seqcore/errors.hpp"
#include "seqcore/parallel.hpp"

namespace seqcore {
namespace {

// Absorbs rounding in the logarithms so that an exactly integral formula
// value is not pushed to the next integer.
double ceil_with_slack(double value) {
  if (!std::isfinite(value)) return value;
  return std::ceil(value * (1.0 - 1e-12));
}

double layer_range(int j, double H, double L, double M, double R) {
  if (j == 0) return H + 0.5 * L * R * R + M * R;
  return std::ldexp(H, j - 1) + L * R * R + 2.0 * M * R;
}

double layer_size_from_log(int j, double H, double L, double M, double R, double delta, double log_term) {
  const double range = layer_range(j, H, L, M, R);
  return ceil_with_slack(0.5 * range * range / (delta * delta) * log_term);
}

// First k entries of a random permutation of items (partial Fisher-Yates).
std::vector<Index> sample_without_replacement(std::vector<Index> items, Index k, std::mt19937_64& rng) {
  const auto count = static_cast<Index>(items.size());
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, count - 1);
    std::swap(items[static_cast<std::size_t>(i)], items[static_cast<std::size_t>(pick(rng))]);
  }
  items.resize(static_cast<std::size_t>(k));
  return items;
}

}  // namespace

std::vector<Index> LayerPartition::layer_sizes() const {
  std::vector<Index> sizes;
  sizes.reserve(layers.size());
  for (const auto& layer : layers) sizes.push_back(static_cast<Index>(layer.size()));
  return sizes;
}

Index LayerPartition::non_empty_layers() const {
  return std::count_if(layers.begin(), layers.end(), [](const auto& l) { return !l.empty(); });
}

int layer_of(double loss, double H) {
  if (loss <= H) return 0;
  int j = std::max(1, static_cast<int>(std::ceil(std::log2(loss / H))));
  while (j > 1 && loss <= std::ldexp(H, j - 1)) --j;
  while (loss > std::ldexp(H, j)) ++j;
  return j;
}

LayerPartition partition_layers(const Dataset& data, const LossModel& model, const Hypothesis& anchor) {
  LayerPartition part;
  part.anchor_losses = point_losses(data, model, anchor);
  const Index n = data.n();
  part.H = stable_sum(std::vector<double>(part.anchor_losses.begin(), part.anchor_losses.end())) /
           static_cast<double>(n);
  if (!std::isfinite(part.H)) throw NumericError("anchor risk is not finite");
  if (part.H <= 0.0) throw DegenerateAnchorError("every loss is zero at the anchor");
  part.N = static_cast<int>(std::ceil(std::log2(static_cast<double>(n))));
  part.layers.assign(static_cast<std::size_t>(part.N) + 1, {});
  for (Index i = 0; i < n; ++i) {
    // f_i <= n H <= 2^N H up to rounding in H.
    const int j = std::min(layer_of(part.anchor_losses[i], part.H), part.N);
    part.layers[static_cast<std::size_t>(j)].push_back(i);
  }
  return part;
}

double theoretical_layer_size(int j, double H, double L, double M, double R, double delta, double lambda_fail) {
  if (!(delta > 0.0)) throw ParameterError("delta must be > 0");
  if (!(lambda_fail > 0.0 && lambda_fail < 1.0)) throw ParameterError("failure probability must lie in (0, 1)");
  if (j < 0) throw ParameterError("layer index must be >= 0");
  return layer_size_from_log(j, H, L, M, R, delta, std::log(2.0 / lambda_fail));
}

double grid_log_size(Index dim, double eps2, std::optional<Index> sparsity_k) {
  if (!(eps2 > 0.0)) throw ParameterError("eps2 must be > 0");
  const double per_axis = std::log(2.0 * std::sqrt(std::numbers::pi * std::numbers::e) / eps2);
  double log_grid = 0.0;
  if (sparsity_k) {
    const Index k = *sparsity_k;
    if (k < 1 || k > dim) throw ParameterError("sparsity k must lie in [1, dim]");
    const double log_choose = std::lgamma(static_cast<double>(dim) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                              std::lgamma(static_cast<double>(dim - k) + 1.0);
    log_grid = log_choose + static_cast<double>(k) * per_axis;
  } else {
    log_grid = static_cast<double>(dim) * per_axis;
  }
  return std::max(0.0, log_grid);
}

double default_m_lower(double H, const SmoothnessConstants& constants, double R, double eta) {
  return std::max(eta * H, H - constants.M_mean * R - 0.5 * constants.L * R * R);
}

SizePlan theoretical_plan(const LayerPartition& partition, const SmoothnessConstants& constants, double eps,
                          double R, double lambda_fail, Index dim, std::optional<double> m_lower,
                          std::optional<Index> sparsity_k) {
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("eps must lie in (0, 1)");
  if (!(R >= 0.0)) throw ParameterError("R must be >= 0");
  if (!(lambda_fail > 0.0 && lambda_fail < 1.0)) throw ParameterError("failure probability must lie in (0, 1)");
  const double H = partition.H;
  const double m = m_lower.value_or(default_m_lower(H, constants, R));
  if (!(m > 0.0)) throw ParameterError("lower bound m on the in-ball risk must be > 0");

  SizePlan plan;
  plan.mode = SizeMode::theoretical;
  plan.params = {eps, R, constants.L, constants.M, m, lambda_fail, sparsity_k};
  plan.eps1 = 2.0 * m * eps / (7.0 * H);
  const double slack = plan.eps1 * H;
  if (R > 0.0) {
    const double mp = constants.M_prime;
    plan.eps2 = 2.0 * slack / (R * (std::sqrt(mp * mp + 2.0 * constants.L * slack) + mp));
    plan.log_grid = grid_log_size(dim, plan.eps2, sparsity_k);
  } else {
    plan.eps2 = std::numeric_limits<double>::infinity();
    plan.log_grid = 0.0;
  }
  // Union bound over the N + 1 layers and the grid: lambda -> lambda / ((N+1)|G|).
  const double log_term =
      std::log(2.0 / lambda_fail) + std::log(static_cast<double>(partition.N) + 1.0) + plan.log_grid;

  plan.per_layer.assign(partition.layers.size(), 0);
  for (std::size_t j = 0; j < partition.layers.size(); ++j) {
    const auto size = static_cast<Index>(partition.layers[j].size());
    if (size == 0) continue;
    const int layer = static_cast<int>(j);
    const double delta = plan.eps1 * std::ldexp(H, layer - 1);
    const double want = layer_size_from_log(layer, H, constants.L, constants.M, R, delta, log_term);
    plan.uncapped_total += want;
    const double capped = std::min(want, static_cast<double>(size));
    plan.per_layer[j] = std::max<Index>(1, static_cast<Index>(capped));
    plan.total += plan.per_layer[j];
  }
  return plan;
}

SizePlan budget_plan(const LayerPartition& partition, const SmoothnessConstants& constants, Index budget, double R) {
  const Index n = partition.n();
  if (budget < 1 || budget > n) throw ParameterError("budget must lie in [1, n]");
  const Index active_layers = partition.non_empty_layers();
  if (budget < active_layers) {
    throw InfeasibleBudgetError("budget " + std::to_string(budget) + " is below the " +
                                std::to_string(active_layers) + " non-empty layers");
  }
  const std::vector<Index> sizes = partition.layer_sizes();
  const std::size_t layers = sizes.size();

  std::vector<double> score(layers, 0.0);
  bool finite = true;
  for (std::size_t j = 0; j < layers; ++j) {
    if (sizes[j] == 0) continue;
    score[j] = static_cast<double>(sizes[j]) * layer_range(static_cast<int>(j), partition.H, constants.L, constants.M, R);
    finite = finite && std::isfinite(score[j]);
  }
  if (!finite) {
    // The ball term dominates every range; ranges are then equal.
    for (std::size_t j = 0; j < layers; ++j) score[j] = static_cast<double>(sizes[j]);
  }

  SizePlan plan;
  plan.mode = SizeMode::budget;
  plan.params = {0.0, R, constants.L, constants.M, 0.0, 0.0, std::nullopt};
  plan.per_layer.assign(layers, 0);

  // One sample per non-empty layer is reserved; the rest is split by score
  // with water-filling against each layer's remaining capacity.
  std::vector<Index> room(layers, 0);
  for (std::size_t j = 0; j < layers; ++j) {
    if (sizes[j] == 0) continue;
    plan.per_layer[j] = 1;
    room[j] = sizes[j] - 1;
  }
  Index remaining = budget - active_layers;
  std::vector<bool> open(layers, false);
  for (std::size_t j = 0; j < layers; ++j) open[j] = room[j] > 0;
  for (bool changed = true; changed && remaining > 0;) {
    changed = false;
    double open_score = 0.0;
    for (std::size_t j = 0; j < layers; ++j) {
      if (open[j]) open_score += score[j];
    }
    for (std::size_t j = 0; j < layers; ++j) {
      if (!open[j]) continue;
      const double share = static_cast<double>(remaining) * score[j] / open_score;
      if (share >= static_cast<double>(room[j])) {
        plan.per_layer[j] += room[j];
        remaining -= room[j];
        open[j] = false;
        changed = true;
      }
    }
  }
  if (remaining > 0) {
    double open_score = 0.0;
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < layers; ++j) {
      if (open[j]) {
        open_score += score[j];
        order.push_back(j);
      }
    }
    std::vector<double> frac(layers, 0.0);
    Index assigned = 0;
    for (std::size_t j : order) {
      const double share = static_cast<double>(remaining) * score[j] / open_score;
      const auto whole = static_cast<Index>(std::floor(share));
      plan.per_layer[j] += whole;
      frac[j] = share - static_cast<double>(whole);
      assigned += whole;
    }
    // Largest remainders first; ties go to the lower layer.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t idx = 0; assigned < remaining; ++idx) {
      ++plan.per_layer[order[idx % order.size()]];
      ++assigned;
    }
  }
  for (Index q : plan.per_layer) plan.total += q;
  plan.uncapped_total = static_cast<double>(plan.total);
  return plan;
}

Coreset build_local_coreset(const LayerPartition& partition, const SizePlan& plan, std::uint64_t seed) {
  if (plan.per_layer.size() != partition.layers.size()) {
    throw ContractError("size plan has " + std::to_string(plan.per_layer.size()) + " layers, partition has " +
                        std::to_string(partition.layers.size()));
  }
  Vector weights = Vector::Zero(partition.n());
  for (std::size_t j = 0; j < partition.layers.size(); ++j) {
    const auto& layer = partition.layers[j];
    const auto size = static_cast<Index>(layer.size());
    const Index q = plan.per_layer[j];
    if (q > size || (size > 0 && q < 1) || q < 0) {
      throw ContractError("layer " + std::to_string(j) + ": plan asks for " + std::to_string(q) + " of " +
                          std::to_string(size) + " points");
    }
    if (size == 0) continue;
    const double w = static_cast<double>(size) / static_cast<double>(q);
    if (q == size) {
      for (Index i : layer) weights[i] = w;
      continue;
    }
    std::mt19937_64 rng(derive_seed(seed, j));
    for (Index i : sample_without_replacement(layer, q, rng)) weights[i] = w;
  }
  return Coreset::from_weights(std::move(weights), Provenance::layered);
}

LocalCoreset construct_local_coreset(const Dataset& data, const LossModel& model, const Hypothesis& anchor,
                                     const CoresetRequest& request, std::uint64_t seed) {
  LayerPartition partition;
  try {
    partition = partition_layers(data, model, anchor);
  } catch (const DegenerateAnchorError&) {
    return LocalCoreset{Coreset::full(data.n()), std::nullopt, std::nullopt, {}};
  }
  const SmoothnessConstants constants = smoothness_constants(model, data, anchor, request.R);
  SizePlan plan;
  if (request.mode == SizeMode::budget) {
    plan = budget_plan(partition, constants, request.budget, request.R);
  } else {
    const double lambda_fail = request.lambda_fail.value_or(1.0 / static_cast<double>(data.n()));
    plan = theoretical_plan(partition, constants, request.eps, request.R, lambda_fail,
                            model.hypothesis_dim(data.d()), request.m_lower, request.sparsity_k);
  }
  Coreset coreset = build_local_coreset(partition, plan, seed);
  return LocalCoreset{std::move(coreset), std::move(partition), std::move(plan), constants};
}

Coreset uniform_baseline(const Dataset& data, Index size, std::uint64_t seed) {
  const Index n = data.n();
  if (size < 1 || size > n) throw ParameterError("uniform sample size must lie in [1, n]");
  if (size == n) {
    Coreset all = Coreset::full(n);
    return Coreset::from_weights(all.weights(), Provenance::uniform);
  }
  std::vector<Index> items(static_cast<std::size_t>(n));
  std::iota(items.begin(), items.end(), Index{0});
  std::mt19937_64 rng(seed);
  Vector weights = Vector::Zero(n);
  const double w = static_cast<double>(n) / static_cast<double>(size);
  for (Index i : sample_without_replacement(std::move(items), size, rng)) weights[i] = w;
  return Coreset::from_weights(std::move(weights), Provenance::uniform);
}

std::vector<Index> importance_draws(const Vector& scores, Index size, std::uint64_t seed, double mix) {
  const Index n = scores.size();
  if (size < 1) throw ParameterError("importance sample size must be >= 1");
  if (!(mix >= 0.0 && mix <= 1.0)) throw ParameterError("mixing weight must lie in [0, 1]");
  const double total = scores.sum();
  std::vector<double> cumulative(static_cast<std::size_t>(n));
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    acc += (1.0 - mix) * scores[i] / total + mix / static_cast<double>(n);
    cumulative[static_cast<std::size_t>(i)] = acc;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, acc);
  std::vector<Index> counts(static_cast<std::size_t>(n), 0);
  for (Index s = 0; s < size; ++s) {
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), unit(rng));
    const auto i = std::min<std::ptrdiff_t>(it - cumulative.begin(), n - 1);
    ++counts[static_cast<std::size_t>(i)];
  }
  return counts;
}

Coreset importance_from_scores(const Dataset& data, const Vector& scores, Index size, std::uint64_t seed,
                               double mix) {
  const Index n = data.n();
  if (scores.size() != n) throw ContractError("one score per point required");
  if (size < 1 || size > n) throw ParameterError("importance sample size must lie in [1, n]");
  if ((scores.array() < 0.0).any() || !scores.allFinite()) throw ContractError("scores must be finite and >= 0");
  const double total = scores.sum();
  if (total <= 0.0) return uniform_baseline(data, size, seed);

  const std::vector<Index> counts = importance_draws(scores, size, seed, mix);
  Vector weights = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    const Index c = counts[static_cast<std::size_t>(i)];
    if (c == 0) continue;
    const double p = (1.0 - mix) * scores[i] / total + mix / static_cast<double>(n);
    weights[i] = static_cast<double>(c) / (static_cast<double>(size) * p);
  }
  weights *= static_cast<double>(n) / weights.sum();
  return Coreset::from_weights(std::move(weights), Provenance::importance);
}

Coreset importance_baseline(const Dataset& data, const LossModel& model, Index size, std::uint64_t seed,
                            const PilotFit& pilot_fit, double mix) {
  const Index n = data.n();
  if (size < 1 || size > n) throw ParameterError("importance sample size must lie in [1, n]");
  const Index p = model.hypothesis_dim(data.d());
  const Index pilot_size = std::min(n, std::max(size / 2, 2 * p + 1));
  const Coreset pilot = uniform_baseline(data, pilot_size, derive_seed(seed, 0x70696c6f74ULL));
  const Hypothesis beta = pilot_fit(pilot);
  Vector scores = point_losses(data, model, beta);
  // Negative log-likelihoods can go below zero; scores only need an order.
  if (scores.minCoeff() < 0.0) scores.array() -= scores.minCoeff();
  return importance_from_scores(data, scores, size, seed, mix);
}

}  // namespace seqcore

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "seqcore/coreset.hpp"
#include "seqcore/optimizers.hpp"

namespace seqcore {

// Called after every host step with the segment index, the segment's
// coreset, the iterate the step started from, and the step itself.
using StepObserver = std::function<void(int, const Coreset&, const Hypothesis&, const StepOutcome&)>;

struct SequentialConfig {
  double R = 1.0;         // ball radius
  double eps = 0.25;      // target accuracy (theoretical sizing)
  double sigma = 0.05;    // boundary margin: rebuild once ||beta - anchor|| > (1 - sigma) R
  SizeMode size_mode = SizeMode::budget;
  Index budget = 0;       // budget sizing
  std::optional<double> lambda_fail;
  std::optional<Index> sparsity_k;
  int max_segments = 200;
  HostConfig host;
  std::optional<HostKind> host_kind;  // default_host(model) when empty
  std::uint64_t seed = 0;
  StepObserver on_step;

  void validate() const;
};

struct SegmentStats {
  Index coreset_size = 0;
  int host_iterations = 0;
  double anchor_risk = 0.0;  // H at the segment's anchor (0 for a degenerate anchor)
};

enum class Termination { stable, segment_cap, iter_cap };

std::string_view to_string(Termination t);

struct SolveResult {
  Hypothesis beta;
  std::vector<Hypothesis> anchors;
  std::vector<SegmentStats> segments;
  double full_loss = 0.0;  // F(beta) on the whole dataset
  double wall_time_s = 0.0;
  Termination terminated_by = Termination::stable;
  int total_iterations = 0;
};

// ||beta - anchor|| > (1 - sigma) R
bool boundary_reached(const Hypothesis& anchor, const Hypothesis& beta, double R, double sigma);

// Builds a local coreset at the current anchor, runs the host on it until it
// is stable inside the ball or leaves (1 - sigma) R, and re-anchors at the
// crossing iterate. Segment t samples with derive_seed(seed, t).
SolveResult run_sequential(const Dataset& data, const LossModel& model, const Hypothesis& start,
                           const SequentialConfig& config);

// One local coreset at the start point (budget sizing), then the host to
// convergence without re-anchoring.
SolveResult one_shot_solve(const Dataset& data, const LossModel& model, const Hypothesis& start,
                           const SequentialConfig& config);

// Runs the host to convergence on a fixed coreset (Original, UniSamp, ImpSamp).
SolveResult solve_on_coreset(const Dataset& data, const LossModel& model, const Coreset& coreset,
                             const Hypothesis& start, const HostConfig& host, std::optional<HostKind> kind = {});

}  // namespace seqcore

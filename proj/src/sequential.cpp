#include "seqcore/sequential.hpp"

#include <chrono>

#include "seqcore/errors.hpp"
#include "seqcore/parallel.hpp"

namespace seqcore {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

CoresetRequest request_for(const SequentialConfig& config) {
  CoresetRequest request;
  request.mode = config.size_mode;
  request.budget = config.budget;
  request.eps = config.eps;
  request.R = config.R;
  request.lambda_fail = config.lambda_fail;
  request.sparsity_k = config.sparsity_k;
  return request;
}

void check_start(const Dataset& data, const LossModel& model, const Hypothesis& start) {
  model.check_dataset(data);
  model.check_hypothesis(start, data.d());
  if (const auto* gmm = dynamic_cast<const GmmModel*>(&model)) gmm->check_mixture(start);
}

}  // namespace

void SequentialConfig::validate() const {
  if (!(R > 0.0)) throw ParameterError("R must be > 0");
  if (!(sigma > 0.0 && sigma < 1.0)) throw ParameterError("sigma must lie in (0, 1)");
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("eps must lie in (0, 1)");
  if (max_segments < 1) throw ParameterError("max_segments must be >= 1");
  if (size_mode == SizeMode::budget && budget < 1) throw ParameterError("budget must be >= 1");
  host.validate();
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::stable: return "stable";
    case Termination::segment_cap: return "segment_cap";
    case Termination::iter_cap: return "iter_cap";
  }
  return "unknown";
}

bool boundary_reached(const Hypothesis& anchor, const Hypothesis& beta, double R, double sigma) {
  if (anchor.size() != beta.size()) throw ContractError("boundary check: dimension mismatch");
  return (beta - anchor).norm() > (1.0 - sigma) * R;
}

SolveResult run_sequential(const Dataset& data, const LossModel& model, const Hypothesis& start,
                           const SequentialConfig& config) {
  config.validate();
  check_start(data, model, start);
  const auto t0 = Clock::now();
  const HostKind kind = config.host_kind.value_or(default_host(model));
  const CoresetRequest request = request_for(config);

  SolveResult result;
  result.beta = start;
  result.anchors.push_back(start);
  result.terminated_by = Termination::segment_cap;
  bool done = false;
  for (int t = 0; t < config.max_segments && !done; ++t) {
    const Hypothesis anchor = result.anchors.back();
    SegmentStats stats;
    try {
      const LocalCoreset local = construct_local_coreset(data, model, anchor, request, derive_seed(config.seed, t));
      stats.coreset_size = local.coreset.size();
      stats.anchor_risk = local.partition ? local.partition->H : 0.0;
      bool crossed = false;
      while (!crossed) {
        if (result.total_iterations >= config.host.max_iters) {
          result.terminated_by = Termination::iter_cap;
          done = true;
          break;
        }
        StepOutcome step =
            host_step(kind, model, data, local.coreset, result.beta, config.host, result.total_iterations);
        ++stats.host_iterations;
        ++result.total_iterations;
        if (config.on_step) config.on_step(t, local.coreset, result.beta, step);
        result.beta = std::move(step.next);
        crossed = boundary_reached(anchor, result.beta, config.R, config.sigma);
        if (step.stable) {
          // The verdict comes from a step started inside the ball; a crossing
          // final iterate is recorded as the last anchor.
          if (crossed) result.anchors.push_back(result.beta);
          result.terminated_by = Termination::stable;
          done = true;
          break;
        }
      }
      if (!done && crossed && t + 1 < config.max_segments) result.anchors.push_back(result.beta);
    } catch (const InfeasibleBudgetError&) {
      throw;
    } catch (const NumericError& e) {
      throw SegmentError(e.what(), t);
    }
    result.segments.push_back(stats);
  }
  result.full_loss = full_risk(data, model, result.beta);
  result.wall_time_s = seconds_since(t0);
  return result;
}

SolveResult one_shot_solve(const Dataset& data, const LossModel& model, const Hypothesis& start,
                           const SequentialConfig& config) {
  config.validate();
  check_start(data, model, start);
  const auto t0 = Clock::now();
  CoresetRequest request = request_for(config);
  LocalCoreset local = construct_local_coreset(data, model, start, request, derive_seed(config.seed, 0));
  const HostKind kind = config.host_kind.value_or(default_host(model));
  SolveResult result;
  try {
    result = solve_on_coreset(data, model, local.coreset, start, config.host, kind);
  } catch (const NumericError& e) {
    throw SegmentError(e.what(), 0);
  }
  result.segments.front().anchor_risk = local.partition ? local.partition->H : 0.0;
  result.wall_time_s = seconds_since(t0);
  return result;
}

SolveResult solve_on_coreset(const Dataset& data, const LossModel& model, const Coreset& coreset,
                             const Hypothesis& start, const HostConfig& host, std::optional<HostKind> kind) {
  check_start(data, model, start);
  const auto t0 = Clock::now();
  const HostRun run = run_host(kind.value_or(default_host(model)), model, data, coreset, start, host);
  SolveResult result;
  result.beta = run.beta;
  result.anchors.push_back(start);
  result.segments.push_back({coreset.size(), run.iterations, 0.0});
  result.total_iterations = run.iterations;
  result.terminated_by = run.converged ? Termination::stable : Termination::iter_cap;
  result.full_loss = full_risk(data, model, result.beta);
  result.wall_time_s = seconds_since(t0);
  return result;
}

}  // namespace seqcore

#pragma once

#include <optional>
#include <string_view>

#include "seqcore/core.hpp"
#include "seqcore/models.hpp"

namespace seqcore {

struct HostConfig {
  // Fixed learning rate; empty selects Armijo backtracking from initial_step.
  std::optional<double> step_size;
  double initial_step = 1.0;
  double armijo_c = 1e-4;
  int max_iters = 10000;
  double grad_tol = 1e-6;
  double rel_loss_tol = 1e-12;
  // Optional cap on the length of a single step.
  std::optional<double> max_step_length;

  void validate() const;
};

struct StepOutcome {
  Hypothesis next;
  double loss_next = 0.0;  // weighted risk at next
  double grad_norm = 0.0;  // gradient (or gradient-mapping) norm at the start point
  bool stable = false;
  bool reseeded = false;  // EM only: a collapsed component was re-seeded
};

enum class HostKind { gradient_descent, proximal, subgradient, em };

std::string_view to_string(HostKind kind);
HostKind host_kind_from_string(std::string_view name);

// Proximal gradient for l1, subgradient for other l_p, EM for mixtures,
// gradient descent otherwise.
HostKind default_host(const LossModel& model);

// sign(v) max(|v| - t, 0)
double soft_threshold(double v, double t);

StepOutcome gd_step(const LossModel& model, const Dataset& data, const Coreset& coreset, const Hypothesis& beta,
                    const HostConfig& config);

// Gradient step on the smooth part, then soft-thresholding by step * lambda.
// Requires a LassoModel; p != 1 is handed to subgradient_step.
StepOutcome prox_step(const LossModel& model, const Dataset& data, const Coreset& coreset, const Hypothesis& beta,
                      const HostConfig& config, int iteration = 0);

// beta - eta_t g with eta_t = step / sqrt(t + 1) and g a subgradient of the
// weighted objective (zero selection at beta_l = 0).
StepOutcome subgradient_step(const LossModel& model, const Dataset& data, const Coreset& coreset,
                             const Hypothesis& beta, const HostConfig& config, int iteration);

// One weighted EM iteration for a GmmModel. Covariance eigenvalues are clamped.
StepOutcome em_step(const LossModel& model, const Dataset& data, const Coreset& coreset, const Hypothesis& beta,
                    const HostConfig& config);

StepOutcome host_step(HostKind kind, const LossModel& model, const Dataset& data, const Coreset& coreset,
                      const Hypothesis& beta, const HostConfig& config, int iteration);

struct HostRun {
  Hypothesis beta;
  int iterations = 0;
  bool converged = false;
  double loss = 0.0;  // weighted risk at beta
};

// Steps until stable or max_iters.
HostRun run_host(HostKind kind, const LossModel& model, const Dataset& data, const Coreset& coreset,
                 const Hypothesis& start, const HostConfig& config);

}  // namespace seqcore

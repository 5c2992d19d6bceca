#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "seqcore/coreset.hpp"

namespace seqcore {

struct ProbeRecord {
  double distance = 0.0;  // ||beta - anchor||
  double full = 0.0;      // F(beta)
  double approx = 0.0;    // weighted risk at beta
  double deviation = 0.0; // relative loss deviation, or max coordinate gradient deviation
};

struct AuditReport {
  Index samples_tested = 0;
  double max_rel_loss_dev = 0.0;
  double max_abs_grad_dev = 0.0;
  bool pass = false;
  std::vector<ProbeRecord> probes;
};

// Uniform draw from the ball B(center, radius): Gaussian direction, radius U^(1/p).
Hypothesis sample_in_ball(const Hypothesis& center, double radius, std::mt19937_64& rng);

// max over probes of |F~ - F| / F against eps. A probe with F = 0 is compared
// absolutely against eps F(anchor). R = 0 tests the anchor only.
AuditReport audit_coreset_loss(const Dataset& data, const LossModel& model, const Coreset& coreset,
                               const Hypothesis& anchor, double R, double eps, Index n_probes, std::uint64_t seed);

// max over probes and coordinates of |grad F~_l - grad F_l| against sigma_grad.
AuditReport audit_gradient(const Dataset& data, const LossModel& model, const Coreset& coreset,
                           const Hypothesis& anchor, double R, double sigma_grad, Index n_probes,
                           std::uint64_t seed);

// ||beta - beta_star|| / ||beta_star||. Throws ParameterError for beta_star = 0.
double error_beta(const Hypothesis& beta, const Hypothesis& beta_star);

// (1/n) sum over clusters of the largest ground-truth label count inside it.
double purity(const std::vector<int>& assignments, const std::vector<int>& ground_truth);

// sum_j |P_j| 2^j <= 3n, in exact integer arithmetic.
bool check_claim1(const LayerPartition& partition);

// Every structural invariant of a partition: disjoint cover, the threshold
// predicate for each member, sum_j |P_j| 2^j <= 3n, and max loss <= 2^N H.
bool check_partition(const LayerPartition& partition);

}  // namespace seqcore

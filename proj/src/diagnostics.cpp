#include "seqcore/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "seqcore/errors.hpp"
#include "seqcore/parallel.hpp"

namespace seqcore {
namespace {

std::vector<Hypothesis> probe_points(const Hypothesis& anchor, double R, Index n_probes, std::uint64_t seed) {
  if (n_probes < 1) throw ParameterError("need at least one probe");
  if (!(R >= 0.0)) throw ParameterError("R must be >= 0");
  if (R == 0.0) return {anchor};
  std::vector<Hypothesis> out;
  out.reserve(static_cast<std::size_t>(n_probes));
  for (Index s = 0; s < n_probes; ++s) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    out.push_back(sample_in_ball(anchor, R, rng));
  }
  return out;
}

}  // namespace

Hypothesis sample_in_ball(const Hypothesis& center, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector direction(center.size());
  double norm = 0.0;
  while (norm == 0.0) {
    for (Index l = 0; l < direction.size(); ++l) direction[l] = normal(rng);
    norm = direction.norm();
  }
  const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(center.size()));
  return center + (r / norm) * direction;
}

AuditReport audit_coreset_loss(const Dataset& data, const LossModel& model, const Coreset& coreset,
                               const Hypothesis& anchor, double R, double eps, Index n_probes, std::uint64_t seed) {
  const std::vector<Hypothesis> probes = probe_points(anchor, R, n_probes, seed);
  const double anchor_risk = full_risk(data, model, anchor);
  AuditReport report;
  for (const auto& beta : probes) {
    ProbeRecord rec;
    rec.distance = (beta - anchor).norm();
    rec.full = full_risk(data, model, beta);
    rec.approx = weighted_risk(data, model, coreset, beta);
    const double gap = std::abs(rec.approx - rec.full);
    // Relative form is vacuous at F = 0: compare on the anchor's scale instead.
    rec.deviation = rec.full > 0.0 ? gap / rec.full : gap / anchor_risk;
    report.max_rel_loss_dev = std::max(report.max_rel_loss_dev, rec.deviation);
    report.probes.push_back(rec);
  }
  report.samples_tested = static_cast<Index>(report.probes.size());
  report.pass = report.max_rel_loss_dev <= eps;
  return report;
}

AuditReport audit_gradient(const Dataset& data, const LossModel& model, const Coreset& coreset,
                           const Hypothesis& anchor, double R, double sigma_grad, Index n_probes,
                           std::uint64_t seed) {
  const std::vector<Hypothesis> probes = probe_points(anchor, R, n_probes, seed);
  const Coreset all = Coreset::full(data.n());
  AuditReport report;
  for (const auto& beta : probes) {
    const auto exact = weighted_risk_and_gradient(data, model, all, beta);
    const auto approx = weighted_risk_and_gradient(data, model, coreset, beta);
    ProbeRecord rec;
    rec.distance = (beta - anchor).norm();
    rec.full = exact.risk;
    rec.approx = approx.risk;
    rec.deviation = (approx.gradient - exact.gradient).cwiseAbs().maxCoeff();
    report.max_abs_grad_dev = std::max(report.max_abs_grad_dev, rec.deviation);
    report.probes.push_back(rec);
  }
  report.samples_tested = static_cast<Index>(report.probes.size());
  report.pass = report.max_abs_grad_dev <= sigma_grad;
  return report;
}

double error_beta(const Hypothesis& beta, const Hypothesis& beta_star) {
  if (beta.size() != beta_star.size()) throw ContractError("error_beta: dimension mismatch");
  const double ref = beta_star.norm();
  if (ref == 0.0) throw ParameterError("error_beta: reference hypothesis is zero");
  return (beta - beta_star).norm() / ref;
}

double purity(const std::vector<int>& assignments, const std::vector<int>& ground_truth) {
  if (assignments.size() != ground_truth.size()) throw ContractError("purity: label vectors differ in length");
  if (assignments.empty()) return 0.0;
  std::map<int, std::map<int, std::size_t>> table;
  for (std::size_t i = 0; i < assignments.size(); ++i) ++table[assignments[i]][ground_truth[i]];
  std::size_t matched = 0;
  for (const auto& [cluster, labels] : table) {
    std::size_t best = 0;
    for (const auto& [label, count] : labels) best = std::max(best, count);
    matched += best;
  }
  return static_cast<double>(matched) / static_cast<double>(assignments.size());
}

bool check_claim1(const LayerPartition& partition) {
  // Layers with 2^j > 3n can only be empty in a valid partition.
  const auto three_n = static_cast<unsigned long long>(3 * partition.n());
  unsigned long long total = 0;
  for (std::size_t j = 0; j < partition.layers.size(); ++j) {
    const auto size = static_cast<unsigned long long>(partition.layers[j].size());
    if (size == 0) continue;
    if (j >= 62) return false;
    const unsigned long long term = size << j;
    if ((term >> j) != size) return false;
    total += term;
    if (total > three_n) return false;
  }
  return total <= three_n;
}

bool check_partition(const LayerPartition& partition) {
  const Index n = partition.n();
  if (static_cast<int>(partition.layers.size()) != partition.N + 1) return false;
  if (!(partition.H > 0.0)) return false;
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (std::size_t j = 0; j < partition.layers.size(); ++j) {
    for (Index i : partition.layers[j]) {
      if (i < 0 || i >= n || seen[static_cast<std::size_t>(i)]++) return false;
      const double f = partition.anchor_losses[i];
      const bool in_layer = j == 0 ? f <= partition.H
                                   : (std::ldexp(partition.H, static_cast<int>(j) - 1) < f &&
                                      f <= std::ldexp(partition.H, static_cast<int>(j)));
      if (!in_layer) return false;
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) return false;
  if (partition.anchor_losses.maxCoeff() > std::ldexp(partition.H, partition.N)) return false;
  return check_claim1(partition);
}

}  // namespace seqcore

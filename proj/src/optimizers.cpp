#include "seqcore/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "seqcore/errors.hpp"

namespace seqcore {
namespace {

constexpr int kMaxHalvings = 60;

bool small_change(double before, double after, double rel_tol) {
  return std::abs(after - before) <= rel_tol * std::max(std::abs(before), std::numeric_limits<double>::min());
}

void require_finite_gradient(const Vector& g) {
  if (!g.allFinite()) throw NumericError("non-finite gradient");
}

// Largest step that keeps ||step * direction|| within the configured cap.
double cap_step(double step, double direction_norm, const HostConfig& config) {
  if (config.max_step_length && direction_norm > 0.0) {
    step = std::min(step, *config.max_step_length / direction_norm);
  }
  return step;
}

Vector shrink(const Vector& v, double t) {
  Vector out(v.size());
  for (Index l = 0; l < v.size(); ++l) out[l] = soft_threshold(v[l], t);
  return out;
}

}  // namespace

void HostConfig::validate() const {
  if (step_size && !(*step_size > 0.0)) throw ParameterError("fixed step size must be > 0");
  if (!(initial_step > 0.0)) throw ParameterError("initial step must be > 0");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ParameterError("Armijo constant must lie in (0, 1)");
  if (max_iters < 1) throw ParameterError("max_iters must be >= 1");
  if (!(grad_tol > 0.0) || !(rel_loss_tol > 0.0)) throw ParameterError("tolerances must be > 0");
  if (max_step_length && !(*max_step_length > 0.0)) throw ParameterError("max step length must be > 0");
}

std::string_view to_string(HostKind kind) {
  switch (kind) {
    case HostKind::gradient_descent: return "gd";
    case HostKind::proximal: return "prox";
    case HostKind::subgradient: return "subgradient";
    case HostKind::em: return "em";
  }
  return "unknown";
}

HostKind host_kind_from_string(std::string_view name) {
  if (name == "gd") return HostKind::gradient_descent;
  if (name == "prox") return HostKind::proximal;
  if (name == "subgradient") return HostKind::subgradient;
  if (name == "em") return HostKind::em;
  throw ParameterError("unknown host '" + std::string(name) + "'");
}

HostKind default_host(const LossModel& model) {
  if (const auto* lasso = dynamic_cast<const LassoModel*>(&model)) {
    return lasso->p() == 1.0 ? HostKind::proximal : HostKind::subgradient;
  }
  if (dynamic_cast<const GmmModel*>(&model) != nullptr) return HostKind::em;
  return HostKind::gradient_descent;
}

double soft_threshold(double v, double t) {
  const double mag = std::abs(v) - t;
  return mag > 0.0 ? std::copysign(mag, v) : 0.0;
}

StepOutcome gd_step(const LossModel& model, const Dataset& data, const Coreset& coreset, const Hypothesis& beta,
                    const HostConfig& config) {
  const auto [loss, grad] = weighted_risk_and_gradient(data, model, coreset, beta);
  require_finite_gradient(grad);
  const double gnorm = grad.norm();
  if (gnorm == 0.0) return {beta, loss, 0.0, true, false};

  StepOutcome out;
  out.grad_norm = gnorm;
  if (config.step_size) {
    const double eta = cap_step(*config.step_size, gnorm, config);
    out.next = beta - eta * grad;
    out.loss_next = weighted_risk(data, model, coreset, out.next);
  } else {
    double eta = cap_step(config.initial_step, gnorm, config);
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings && !accepted; ++h, eta *= 0.5) {
      Hypothesis candidate = beta - eta * grad;
      const double trial = weighted_risk(data, model, coreset, candidate);
      if (trial <= loss - config.armijo_c * eta * gnorm * gnorm) {
        out.next = std::move(candidate);
        out.loss_next = trial;
        accepted = true;
      }
    }
    // No decrease at any resolvable step: numerically stationary.
    if (!accepted) return {beta, loss, gnorm, true, false};
  }
  out.stable = gnorm <= config.grad_tol || small_change(loss, out.loss_next, config.rel_loss_tol);
  return out;
}

StepOutcome prox_step(const LossModel& model, const Dataset& data, const Coreset& coreset, const Hypothesis& beta,
                      const HostConfig& config, int iteration) {
  const auto* lasso = dynamic_cast<const LassoModel*>(&model);
  if (lasso == nullptr) throw ContractError("proximal host requires an l_p penalized model");
  if (lasso->p() != 1.0) return subgradient_step(model, data, coreset, beta, config, iteration);

  const LossModel& smooth = lasso->smooth_part();
  const double lambda = lasso->lambda();
  const auto [g_loss, grad] = weighted_risk_and_gradient(data, smooth, coreset, beta);
  require_finite_gradient(grad);
  const double objective = g_loss + lambda * beta.lpNorm<1>();

  Hypothesis next;
  double eta = cap_step(config.step_size.value_or(config.initial_step), grad.norm(), config);
  if (config.step_size) {
    next = shrink(beta - eta * grad, eta * lambda);
  } else {
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings && !accepted; ++h) {
      Hypothesis candidate = shrink(beta - eta * grad, eta * lambda);
      const Vector diff = candidate - beta;
      const double model_bound = g_loss + grad.dot(diff) + diff.squaredNorm() / (2.0 * eta);
      if (weighted_risk(data, smooth, coreset, candidate) <= model_bound) {
        next = std::move(candidate);
        accepted = true;
      } else {
        eta *= 0.5;
      }
    }
    if (!accepted) return {beta, objective, 0.0, true, false};
  }

  StepOutcome out;
  out.grad_norm = (beta - next).norm() / eta;
  out.loss_next = weighted_risk(data, model, coreset, next);
  out.next = std::move(next);
  out.stable = out.grad_norm <= config.grad_tol || small_change(objective, out.loss_next, config.rel_loss_tol);
  return out;
}

StepOutcome subgradient_step(const LossModel& model, const Dataset& data, const Coreset& coreset,
                             const Hypothesis& beta, const HostConfig& config, int iteration) {
  const auto [loss, grad] = weighted_risk_and_gradient(data, model, coreset, beta);
  require_finite_gradient(grad);
  const double gnorm = grad.norm();
  if (gnorm == 0.0) return {beta, loss, 0.0, true, false};
  const double base = config.step_size.value_or(config.initial_step);
  const double eta = cap_step(base / std::sqrt(static_cast<double>(iteration) + 1.0), gnorm, config);
  StepOutcome out;
  out.next = beta - eta * grad;
  out.loss_next = weighted_risk(data, model, coreset, out.next);
  out.grad_norm = gnorm;
  out.stable = gnorm <= config.grad_tol || small_change(loss, out.loss_next, config.rel_loss_tol);
  return out;
}

StepOutcome em_step(const LossModel& model, const Dataset& data, const Coreset& coreset, const Hypothesis& beta,
                    const HostConfig& config) {
  const auto* gmm = dynamic_cast<const GmmModel*>(&model);
  if (gmm == nullptr) throw ContractError("EM host requires a Gaussian mixture model");
  const double loss = weighted_risk(data, model, coreset, beta);

  const auto& support = coreset.support();
  const Matrix resp = gmm_responsibility_matrix(*gmm, beta, data, support);
  const Index k = gmm->k();
  const Index dim = gmm->dim();
  GmmParams params = GmmParams::unpack(beta, k, dim);
  const double total = coreset.total_weight();

  StepOutcome out;
  std::vector<Index> collapsed;
  for (Index j = 0; j < k; ++j) {
    double mass = 0.0;
    Vector mean = Vector::Zero(dim);
    for (std::size_t s = 0; s < support.size(); ++s) {
      const Index i = support[s];
      const double w = coreset.weights()[i] * resp(static_cast<Index>(s), j);
      mass += w;
      mean.noalias() += w * data.point(i);
    }
    if (mass < 1e-12) {
      collapsed.push_back(j);
      continue;
    }
    mean /= mass;
    Matrix cov = Matrix::Zero(dim, dim);
    for (std::size_t s = 0; s < support.size(); ++s) {
      const Index i = support[s];
      const double w = coreset.weights()[i] * resp(static_cast<Index>(s), j);
      const Vector z = data.point(i) - mean;
      cov.noalias() += w * z * z.transpose();
    }
    cov /= mass;
    const Matrix prec = gmm->clamp_spectrum(cov).inverse();
    params.weights[j] = mass / total;
    params.means[static_cast<std::size_t>(j)] = mean;
    params.precisions[static_cast<std::size_t>(j)] = 0.5 * (prec + prec.transpose());
  }
  if (!collapsed.empty()) {
    // Re-seed every collapsed component at the worst-fit support point.
    const auto bound = model.bind(beta);
    Index worst = support.front();
    double worst_loss = -std::numeric_limits<double>::infinity();
    for (Index i : support) {
      const double f = bound->value(data.point(i), data.response(i));
      if (f > worst_loss) {
        worst_loss = f;
        worst = i;
      }
    }
    for (Index j : collapsed) {
      params.weights[j] = 1.0 / static_cast<double>(k);
      params.means[static_cast<std::size_t>(j)] = data.point(worst);
      params.precisions[static_cast<std::size_t>(j)] = gmm->clamp_spectrum(Matrix::Identity(dim, dim));
    }
    params.weights /= params.weights.sum();
    out.reseeded = true;
  }
  out.next = params.pack();
  out.loss_next = weighted_risk(data, model, coreset, out.next);
  out.grad_norm = (out.next - beta).norm();
  out.stable = !out.reseeded && small_change(loss, out.loss_next, config.rel_loss_tol);
  return out;
}

StepOutcome host_step(HostKind kind, const LossModel& model, const Dataset& data, const Coreset& coreset,
                      const Hypothesis& beta, const HostConfig& config, int iteration) {
  switch (kind) {
    case HostKind::gradient_descent: return gd_step(model, data, coreset, beta, config);
    case HostKind::proximal: return prox_step(model, data, coreset, beta, config, iteration);
    case HostKind::subgradient: return subgradient_step(model, data, coreset, beta, config, iteration);
    case HostKind::em: return em_step(model, data, coreset, beta, config);
  }
  throw ContractError("unknown host kind");
}

HostRun run_host(HostKind kind, const LossModel& model, const Dataset& data, const Coreset& coreset,
                 const Hypothesis& start, const HostConfig& config) {
  config.validate();
  HostRun run;
  run.beta = start;
  run.loss = weighted_risk(data, model, coreset, start);
  while (run.iterations < config.max_iters) {
    StepOutcome step = host_step(kind, model, data, coreset, run.beta, config, run.iterations);
    ++run.iterations;
    run.beta = std::move(step.next);
    run.loss = step.loss_next;
    if (step.stable) {
      run.converged = true;
      break;
    }
  }
  return run;
}

}  // namespace seqcore

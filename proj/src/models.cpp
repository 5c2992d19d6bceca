#include "seqcore/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seqcore/errors.hpp"

namespace seqcore {
namespace {

double max_squared_row_norm(const Dataset& data) { return data.features().rowwise().squaredNorm().maxCoeff(); }

// log(1 + e^t) without overflow.
double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void check_lambda(double lambda, const char* model) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ParameterError(std::string(model) + ": lambda must be finite and >= 0");
  }
}

void check_p(double p) {
  if (!(p > 0.0 && p <= 2.0)) throw ParameterError("l_p exponent must lie in (0, 2], got " + std::to_string(p));
}

class RidgeLoss final : public PointLoss {
 public:
  RidgeLoss(const Hypothesis& beta, double lambda) : beta_(beta), lambda_(lambda), penalty_(lambda * beta.squaredNorm()) {}

  double value(PointView x, double y) const override {
    const double r = x.dot(beta_) - y;
    return r * r + penalty_;
  }

  double value_and_gradient(PointView x, double y, Eigen::Ref<Vector> grad) const override {
    const double r = x.dot(beta_) - y;
    grad.noalias() = (2.0 * r) * x + (2.0 * lambda_) * beta_;
    return r * r + penalty_;
  }

  Index dim() const override { return beta_.size(); }

 private:
  Hypothesis beta_;
  double lambda_;
  double penalty_;
};

class LassoLoss final : public PointLoss {
 public:
  LassoLoss(const Hypothesis& beta, double lambda, double p)
      : beta_(beta), penalty_(lasso_penalty(beta, lambda, p)), penalty_grad_(lambda * lp_subgradient(beta, p)) {}

  double value(PointView x, double y) const override {
    const double r = x.dot(beta_) - y;
    return r * r + penalty_;
  }

  double value_and_gradient(PointView x, double y, Eigen::Ref<Vector> grad) const override {
    const double r = x.dot(beta_) - y;
    grad.noalias() = (2.0 * r) * x + penalty_grad_;
    return r * r + penalty_;
  }

  double envelope_gradient_norm(PointView x, double y) const override {
    return std::abs(2.0 * (x.dot(beta_) - y)) * x.norm();
  }

  Index dim() const override { return beta_.size(); }

 private:
  Hypothesis beta_;
  double penalty_;
  Vector penalty_grad_;
};

class LogisticLoss final : public PointLoss {
 public:
  LogisticLoss(const Hypothesis& beta, double lambda)
      : beta_(beta), lambda_(lambda), penalty_(lambda * beta.squaredNorm()) {}

  double value(PointView x, double y) const override {
    const double t = x.dot(beta_);
    return y * softplus(-t) + (1.0 - y) * softplus(t) + penalty_;
  }

  double value_and_gradient(PointView x, double y, Eigen::Ref<Vector> grad) const override {
    const double t = x.dot(beta_);
    grad.noalias() = (sigmoid(t) - y) * x + (2.0 * lambda_) * beta_;
    return y * softplus(-t) + (1.0 - y) * softplus(t) + penalty_;
  }

  Index dim() const override { return beta_.size(); }

 private:
  Hypothesis beta_;
  double lambda_;
  double penalty_;
};

}  // namespace

RidgeModel::RidgeModel(double lambda) : lambda_(lambda) { check_lambda(lambda, "ridge"); }

std::unique_ptr<const PointLoss> RidgeModel::bind(const Hypothesis& beta) const {
  return std::make_unique<RidgeLoss>(beta, lambda_);
}

double RidgeModel::lipschitz(const Dataset& data, const Hypothesis&) const {
  return 2.0 * max_squared_row_norm(data) + 2.0 * lambda_;
}

LossGrad ridge_loss_grad(const Hypothesis& beta, PointView x, double y, double lambda) {
  if (beta.size() != x.size()) throw ContractError("ridge: dimension mismatch");
  RidgeLoss loss(beta, lambda);
  Vector g(beta.size());
  const double f = loss.value_and_gradient(x, y, g);
  return {f, std::move(g)};
}

LassoModel::LassoModel(double lambda, double p) : lambda_(lambda), p_(p) {
  check_lambda(lambda, "lasso");
  check_p(p);
}

std::unique_ptr<const PointLoss> LassoModel::bind(const Hypothesis& beta) const {
  return std::make_unique<LassoLoss>(beta, lambda_, p_);
}

double LassoModel::lipschitz(const Dataset& data, const Hypothesis&) const { return 2.0 * max_squared_row_norm(data); }

double LassoModel::gradient_norm_offset(Index d) const { return hoelder_term(d, p_, lambda_); }

SmoothParts lasso_smooth_parts(const Hypothesis& beta, PointView x, double y) {
  if (beta.size() != x.size()) throw ContractError("lasso: dimension mismatch");
  const double r = x.dot(beta) - y;
  return {r * r, (2.0 * r) * x};
}

double lasso_penalty(const Hypothesis& beta, double lambda, double p) {
  check_p(p);
  if (p == 1.0) return lambda * beta.lpNorm<1>();
  if (p == 2.0) return lambda * beta.norm();
  double s = 0.0;
  for (double b : beta) s += std::pow(std::abs(b), p);
  return lambda * std::pow(s, 1.0 / p);
}

double hoelder_term(Index d, double p, double lambda) {
  check_p(p);
  return lambda * std::pow(static_cast<double>(d), 1.0 / p - 0.5);
}

Vector lp_subgradient(const Hypothesis& beta, double p) {
  check_p(p);
  Vector g = Vector::Zero(beta.size());
  if (p == 1.0) {
    for (Index l = 0; l < beta.size(); ++l) g[l] = beta[l] > 0.0 ? 1.0 : (beta[l] < 0.0 ? -1.0 : 0.0);
    return g;
  }
  const double norm = lasso_penalty(beta, 1.0, p);
  if (norm == 0.0) return g;
  const double scale = std::pow(norm, 1.0 - p);
  for (Index l = 0; l < beta.size(); ++l) {
    if (beta[l] != 0.0) g[l] = std::copysign(std::pow(std::abs(beta[l]), p - 1.0), beta[l]) * scale;
  }
  return g;
}

LogisticModel::LogisticModel(double lambda) : lambda_(lambda) { check_lambda(lambda, "logistic"); }

void LogisticModel::check_dataset(const Dataset& data) const {
  for (Index i = 0; i < data.n(); ++i) {
    const double y = data.response(i);
    if (y != 0.0 && y != 1.0) {
      throw ContractError("logistic: response of point " + std::to_string(i) + " is not 0 or 1");
    }
  }
}

std::unique_ptr<const PointLoss> LogisticModel::bind(const Hypothesis& beta) const {
  return std::make_unique<LogisticLoss>(beta, lambda_);
}

double LogisticModel::lipschitz(const Dataset& data, const Hypothesis&) const {
  return 0.25 * max_squared_row_norm(data) + 2.0 * lambda_;
}

LossGrad logistic_loss_grad(const Hypothesis& beta, PointView x, double y) {
  if (beta.size() != x.size()) throw ContractError("logistic: dimension mismatch");
  LogisticLoss loss(beta, 0.0);
  Vector g(beta.size());
  const double f = loss.value_and_gradient(x, y, g);
  return {f, std::move(g)};
}

SmoothnessConstants smoothness_constants(const LossModel& model, const Dataset& data, const Hypothesis& anchor,
                                         double R) {
  if (data.n() < 1) throw ParameterError("smoothness constants need a non-empty dataset");
  if (!(R >= 0.0)) throw ParameterError("radius must be >= 0");
  const Vector norms = gradient_norms(data, model, anchor);
  const double offset = model.gradient_norm_offset(data.d());
  SmoothnessConstants c{};
  c.L = model.lipschitz(data, anchor);
  c.M = norms.maxCoeff() + offset;
  c.M_mean = norms.mean() + offset;
  c.M_prime = c.M + c.L * R;
  return c;
}

}  // namespace seqcore

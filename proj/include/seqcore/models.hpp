#pragma once

#include <vector>

#include "seqcore/core.hpp"

namespace seqcore {

struct LossGrad {
  double loss;
  Vector grad;
};

// Ridge regression: f_i = (<x_i, beta> - y_i)^2 + lambda * ||beta||^2.
class RidgeModel final : public LossModel {
 public:
  explicit RidgeModel(double lambda = 0.01);

  double lambda() const { return lambda_; }

  std::string_view name() const override { return "ridge"; }
  Index hypothesis_dim(Index d) const override { return d; }
  std::unique_ptr<const PointLoss> bind(const Hypothesis& beta) const override;
  // 2 max_i ||x_i||^2 + 2 lambda
  double lipschitz(const Dataset& data, const Hypothesis& anchor) const override;

 private:
  double lambda_;
};

LossGrad ridge_loss_grad(const Hypothesis& beta, PointView x, double y, double lambda);

// l_p penalized least squares: f_i = g_i + lambda * ||beta||_p with the
// smooth part g_i = (<x_i, beta> - y_i)^2. p in (0, 2], default 1 (Lasso).
class LassoModel final : public LossModel {
 public:
  explicit LassoModel(double lambda, double p = 1.0);

  double lambda() const { return lambda_; }
  double p() const { return p_; }

  // The smooth part g as a model of its own (unpenalized least squares).
  const LossModel& smooth_part() const { return smooth_; }

  std::string_view name() const override { return "lasso"; }
  Index hypothesis_dim(Index d) const override { return d; }
  std::unique_ptr<const PointLoss> bind(const Hypothesis& beta) const override;
  // Smoothness of g only: 2 max_i ||x_i||^2.
  double lipschitz(const Dataset& data, const Hypothesis& anchor) const override;
  // lambda * d^(1/p - 1/2), the Hoelder slack between ||.||_p and ||.||_2.
  double gradient_norm_offset(Index d) const override;

 private:
  double lambda_;
  double p_;
  RidgeModel smooth_{0.0};
};

struct SmoothParts {
  double loss;
  Vector grad;
};

// g = (<x, beta> - y)^2 and its gradient.
SmoothParts lasso_smooth_parts(const Hypothesis& beta, PointView x, double y);

// lambda * ||beta||_p. Throws ParameterError for p outside (0, 2].
double lasso_penalty(const Hypothesis& beta, double lambda, double p);

// lambda * d^(1/p - 1/2).
double hoelder_term(Index d, double p, double lambda);

// Selection from the subdifferential of ||beta||_p; zero where beta_l = 0.
Vector lp_subgradient(const Hypothesis& beta, double p);

// Binary logistic regression with optional l2 penalty lambda * ||beta||^2.
class LogisticModel final : public LossModel {
 public:
  explicit LogisticModel(double lambda = 0.0);

  double lambda() const { return lambda_; }

  std::string_view name() const override { return "logistic"; }
  Index hypothesis_dim(Index d) const override { return d; }
  // Responses must be 0 or 1.
  void check_dataset(const Dataset& data) const override;
  std::unique_ptr<const PointLoss> bind(const Hypothesis& beta) const override;
  // max_i ||x_i||^2 / 4 + 2 lambda
  double lipschitz(const Dataset& data, const Hypothesis& anchor) const override;

 private:
  double lambda_;
};

LossGrad logistic_loss_grad(const Hypothesis& beta, PointView x, double y);

// Unpacked mixture parameters. precisions hold the inverse covariances.
struct GmmParams {
  Vector weights;
  std::vector<Vector> means;
  std::vector<Matrix> precisions;

  Index k() const { return weights.size(); }
  Index dim() const { return means.empty() ? 0 : means.front().size(); }

  Hypothesis pack() const;
  static GmmParams unpack(const Hypothesis& beta, Index k, Index dim);
};

// Negative log-likelihood of a k-component full-covariance Gaussian mixture.
// Precision eigenvalues are kept in [eig_floor, 1/eig_floor].
class GmmModel final : public LossModel {
 public:
  GmmModel(Index k, Index dim, double eig_floor = 0.01);

  Index k() const { return k_; }
  Index dim() const { return dim_; }
  double eig_floor() const { return eig_floor_; }

  std::string_view name() const override { return "gmm"; }
  Index hypothesis_dim(Index d) const override;
  void check_dataset(const Dataset& data) const override;
  std::unique_ptr<const PointLoss> bind(const Hypothesis& beta) const override;

  // sqrt(k (Mt^2/mt^2 + r^2/l^2 + (sqrt(D)/l + r^2)^2)) with r the largest
  // point-to-mean distance and Mt, mt the extreme component densities at the anchor.
  double lipschitz(const Dataset& data, const Hypothesis& anchor) const override;

  // Mixture weights on the simplex (1e-9) and symmetric positive definite precisions.
  void check_mixture(const Hypothesis& beta) const;

  // Clamps the eigenvalues of a symmetric matrix into [eig_floor, 1/eig_floor].
  Matrix clamp_spectrum(const Matrix& sym) const;

 private:
  Index k_;
  Index dim_;
  double eig_floor_;
};

// Loss and gradient of one point under the mixture.
LossGrad gmm_loss_grad(const GmmModel& model, const Hypothesis& beta, PointView x);

// Posterior component probabilities for one point.
Vector gmm_responsibilities(const GmmModel& model, const Hypothesis& beta, PointView x);

// Responsibilities of the listed rows, one row per point (rows x k).
Matrix gmm_responsibility_matrix(const GmmModel& model, const Hypothesis& beta, const Dataset& data,
                                 std::span<const Index> rows);

// Hard assignment (argmax responsibility) of every point.
std::vector<int> gmm_assign(const GmmModel& model, const Hypothesis& beta, const Dataset& data);

struct SmoothnessConstants {
  double L;        // smoothness bound
  double M;        // max_i ||grad f_i(anchor)|| (plus the Hoelder term for l_p)
  double M_mean;   // mean of the same norms
  double M_prime;  // M + L R
};

SmoothnessConstants smoothness_constants(const LossModel& model, const Dataset& data, const Hypothesis& anchor,
                                         double R);

}  // namespace seqcore

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace seqcore {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

// Read-only view of one feature row.
using PointView = Eigen::Ref<const Vector>;

// Flat parameter vector. Regression models use p = d coordinates; the GMM
// packs k blocks of [weight, mean (D), precision (D*D, row-major)].
using Hypothesis = Vector;

// n labeled points in d dimensions. Immutable once constructed.
class Dataset {
 public:
  Dataset(RowMatrix features, Vector responses);

  Index n() const { return features_.rows(); }
  Index d() const { return features_.cols(); }

  PointView point(Index i) const { return features_.row(i).transpose(); }
  double response(Index i) const { return responses_[i]; }

  const RowMatrix& features() const { return features_; }
  const Vector& responses() const { return responses_; }

  // New dataset holding the listed rows, in order.
  Dataset subset(std::span<const Index> rows) const;

 private:
  RowMatrix features_;
  Vector responses_;
};

enum class Provenance { layered, uniform, importance, full };

std::string_view to_string(Provenance p);

// Nonnegative weight vector over the n points. The support is the sorted list
// of indices carrying positive weight.
class Coreset {
 public:
  static Coreset full(Index n);
  static Coreset from_weights(Vector weights, Provenance provenance);

  Index n() const { return weights_.size(); }
  Index size() const { return static_cast<Index>(support_.size()); }
  const Vector& weights() const { return weights_; }
  const std::vector<Index>& support() const { return support_; }
  Provenance provenance() const { return provenance_; }
  double total_weight() const { return total_weight_; }

 private:
  Coreset(Vector weights, std::vector<Index> support, Provenance provenance, double total);

  Vector weights_;
  std::vector<Index> support_;
  Provenance provenance_;
  double total_weight_;
};

// A loss model bound to one hypothesis. Implementations cache whatever the
// hypothesis implies (factorizations, norms) and are safe to share across
// threads.
class PointLoss {
 public:
  virtual ~PointLoss() = default;

  virtual double value(PointView x, double y) const = 0;

  // Overwrites grad (length p) with the per-point gradient and returns the loss.
  virtual double value_and_gradient(PointView x, double y, Eigen::Ref<Vector> grad) const = 0;

  // Norm of the gradient that enters the Lipschitz envelope around an anchor.
  // Penalized models report the smooth part only.
  virtual double envelope_gradient_norm(PointView x, double y) const;

  virtual Index dim() const = 0;
};

// Per-point loss f(beta, x, y) >= 0 with gradient and a global smoothness bound.
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual std::string_view name() const = 0;

  // Parameter count p for feature dimension d.
  virtual Index hypothesis_dim(Index d) const = 0;

  // Throws ContractError when the dataset does not fit the model.
  virtual void check_dataset(const Dataset& data) const;

  // Throws ContractError on dimension mismatch or non-finite coordinates.
  virtual void check_hypothesis(const Hypothesis& beta, Index d) const;

  virtual std::unique_ptr<const PointLoss> bind(const Hypothesis& beta) const = 0;

  // Smoothness constant L (gradient Lipschitz bound; for the GMM, the
  // loss Lipschitz bound) evaluated with the anchor where the model needs one.
  virtual double lipschitz(const Dataset& data, const Hypothesis& anchor) const = 0;

  // Additive term on M for penalized models (zero otherwise).
  virtual double gradient_norm_offset(Index /*d*/) const { return 0.0; }
};

// Pairwise (tree) summation.
double pairwise_sum(std::span<const double> values);

// Sorts a copy, then sums pairwise: the result depends only on the multiset.
double stable_sum(std::vector<double> values);

// f_i(beta) for every point; throws NumericError on the first non-finite loss.
Vector point_losses(const Dataset& data, const LossModel& model, const Hypothesis& beta);

// Euclidean norms of the envelope gradients at beta, one per point.
Vector gradient_norms(const Dataset& data, const LossModel& model, const Hypothesis& beta);

// (1/n) sum_i f_i(beta).
double full_risk(const Dataset& data, const LossModel& model, const Hypothesis& beta);

// (1/sum w) sum_i w_i f_i(beta), summed over the support only.
double weighted_risk(const Dataset& data, const LossModel& model, const Coreset& coreset,
                     const Hypothesis& beta);

Vector weighted_gradient(const Dataset& data, const LossModel& model, const Coreset& coreset,
                         const Hypothesis& beta);

struct RiskAndGradient {
  double risk;
  Vector gradient;
};

// Both quantities from one pass over the support.
RiskAndGradient weighted_risk_and_gradient(const Dataset& data, const LossModel& model, const Coreset& coreset,
                                           const Hypothesis& beta);

}  // namespace seqcore

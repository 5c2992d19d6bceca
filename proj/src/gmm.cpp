#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "seqcore/errors.hpp"
#include "seqcore/models.hpp"

namespace seqcore {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

Index block_size(Index dim) { return 1 + dim + dim * dim; }

// Cached per-component state for one bound hypothesis.
struct Component {
  double log_weight;
  double log_norm;  // -D/2 log(2 pi) + 1/2 log det(precision)
  Vector mean;
  Matrix precision;  // symmetrized
  Matrix covariance;
};

class GmmLoss final : public PointLoss {
 public:
  GmmLoss(const GmmModel& model, const Hypothesis& beta) : k_(model.k()), dim_(model.dim()), p_(beta.size()) {
    const GmmParams params = GmmParams::unpack(beta, k_, dim_);
    components_.reserve(static_cast<std::size_t>(k_));
    for (Index j = 0; j < k_; ++j) {
      if (params.weights[j] < 0.0) throw ContractError("gmm: negative mixture weight");
      Component c;
      c.log_weight = std::log(params.weights[j]);
      c.mean = params.means[static_cast<std::size_t>(j)];
      c.precision = 0.5 * (params.precisions[static_cast<std::size_t>(j)] +
                           params.precisions[static_cast<std::size_t>(j)].transpose());
      Eigen::LLT<Matrix> llt(c.precision);
      if (llt.info() != Eigen::Success) {
        throw NumericError("gmm: precision block " + std::to_string(j) + " is not positive definite");
      }
      const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      c.log_norm = -0.5 * static_cast<double>(dim_) * kLog2Pi + 0.5 * log_det;
      c.covariance = llt.solve(Matrix::Identity(dim_, dim_));
      components_.push_back(std::move(c));
    }
  }

  // log N(x | mu_j, Sigma_j) for every component.
  Vector log_densities(PointView x) const {
    Vector out(k_);
    for (Index j = 0; j < k_; ++j) {
      const auto& c = components_[static_cast<std::size_t>(j)];
      const Vector z = x - c.mean;
      out[j] = c.log_norm - 0.5 * z.dot(c.precision * z);
    }
    return out;
  }

  // Returns log sum_j w_j N_j and fills the joint log terms.
  double log_mixture(PointView x, Vector& joint) const {
    joint = log_densities(x);
    for (Index j = 0; j < k_; ++j) joint[j] += components_[static_cast<std::size_t>(j)].log_weight;
    const double top = joint.maxCoeff();
    if (!std::isfinite(top)) return top;
    return top + std::log((joint.array() - top).exp().sum());
  }

  Vector responsibilities(PointView x) const {
    Vector joint;
    const double lse = log_mixture(x, joint);
    return (joint.array() - lse).exp();
  }

  double value(PointView x, double) const override {
    Vector joint;
    return -log_mixture(x, joint);
  }

  double value_and_gradient(PointView x, double, Eigen::Ref<Vector> grad) const override {
    Vector joint;
    const double lse = log_mixture(x, joint);
    const Index block = block_size(dim_);
    for (Index j = 0; j < k_; ++j) {
      const auto& c = components_[static_cast<std::size_t>(j)];
      const Vector z = x - c.mean;
      const double log_density = c.log_norm - 0.5 * z.dot(c.precision * z);
      const double gamma = std::exp(joint[j] - lse);
      const Index off = j * block;
      // d/d weight of -log sum_l w_l N_l is -N_j / sum_l w_l N_l.
      grad[off] = -std::exp(log_density - lse);
      grad.segment(off + 1, dim_) = -gamma * (c.precision * z);
      const Matrix dp = -0.5 * gamma * (c.covariance - z * z.transpose());
      for (Index a = 0; a < dim_; ++a) {
        for (Index b = 0; b < dim_; ++b) grad[off + 1 + dim_ + a * dim_ + b] = dp(a, b);
      }
    }
    return -lse;
  }

  Index dim() const override { return p_; }

 private:
  Index k_;
  Index dim_;
  Index p_;
  std::vector<Component> components_;
};

}  // namespace

Hypothesis GmmParams::pack() const {
  const Index kk = k();
  const Index d = dim();
  Hypothesis beta(kk * block_size(d));
  for (Index j = 0; j < kk; ++j) {
    const Index off = j * block_size(d);
    beta[off] = weights[j];
    beta.segment(off + 1, d) = means[static_cast<std::size_t>(j)];
    for (Index a = 0; a < d; ++a) {
      for (Index b = 0; b < d; ++b) beta[off + 1 + d + a * d + b] = precisions[static_cast<std::size_t>(j)](a, b);
    }
  }
  return beta;
}

GmmParams GmmParams::unpack(const Hypothesis& beta, Index k, Index dim) {
  if (beta.size() != k * block_size(dim)) throw ContractError("gmm: hypothesis size does not match k and D");
  GmmParams params;
  params.weights.resize(k);
  for (Index j = 0; j < k; ++j) {
    const Index off = j * block_size(dim);
    params.weights[j] = beta[off];
    params.means.push_back(beta.segment(off + 1, dim));
    Matrix prec(dim, dim);
    for (Index a = 0; a < dim; ++a) {
      for (Index b = 0; b < dim; ++b) prec(a, b) = beta[off + 1 + dim + a * dim + b];
    }
    params.precisions.push_back(std::move(prec));
  }
  return params;
}

GmmModel::GmmModel(Index k, Index dim, double eig_floor) : k_(k), dim_(dim), eig_floor_(eig_floor) {
  if (k < 1) throw ParameterError("gmm: k must be >= 1");
  if (dim < 1) throw ParameterError("gmm: dimension must be >= 1");
  if (!(eig_floor > 0.0 && eig_floor <= 1.0)) throw ParameterError("gmm: eigenvalue floor must lie in (0, 1]");
}

Index GmmModel::hypothesis_dim(Index) const { return k_ * block_size(dim_); }

void GmmModel::check_dataset(const Dataset& data) const {
  if (data.d() != dim_) {
    throw ContractError("gmm: dataset has dimension " + std::to_string(data.d()) + ", model expects " +
                        std::to_string(dim_));
  }
}

std::unique_ptr<const PointLoss> GmmModel::bind(const Hypothesis& beta) const {
  return std::make_unique<GmmLoss>(*this, beta);
}

double GmmModel::lipschitz(const Dataset& data, const Hypothesis& anchor) const {
  check_dataset(data);
  const GmmLoss bound(*this, anchor);
  const GmmParams params = GmmParams::unpack(anchor, k_, dim_);
  double r = 0.0;
  double log_max = -std::numeric_limits<double>::infinity();
  double log_min = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < data.n(); ++i) {
    const auto x = data.point(i);
    for (const auto& mu : params.means) r = std::max(r, (x - mu).norm());
    const Vector logp = bound.log_densities(x);
    log_max = std::max(log_max, logp.maxCoeff());
    log_min = std::min(log_min, logp.minCoeff());
  }
  const double lam = eig_floor_;
  const double ratio_sq = std::exp(2.0 * (log_max - log_min));
  const double spread = std::sqrt(static_cast<double>(dim_)) / lam + r * r;
  return std::sqrt(static_cast<double>(k_) * (ratio_sq + r * r / (lam * lam) + spread * spread));
}

void GmmModel::check_mixture(const Hypothesis& beta) const {
  const GmmParams params = GmmParams::unpack(beta, k_, dim_);
  if ((params.weights.array() < 0.0).any()) throw ContractError("gmm: mixture weights must be nonnegative");
  if (std::abs(params.weights.sum() - 1.0) > 1e-9) throw ContractError("gmm: mixture weights must sum to 1");
  for (Index j = 0; j < k_; ++j) {
    const Matrix& p = params.precisions[static_cast<std::size_t>(j)];
    if ((p - p.transpose()).norm() > 1e-9 * std::max(1.0, p.norm())) {
      throw ContractError("gmm: precision block " + std::to_string(j) + " is not symmetric");
    }
    if (Eigen::LLT<Matrix>(p).info() != Eigen::Success) {
      throw ContractError("gmm: precision block " + std::to_string(j) + " is not positive definite");
    }
  }
}

Matrix GmmModel::clamp_spectrum(const Matrix& sym) const {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sym + sym.transpose()));
  const Vector values = eig.eigenvalues().cwiseMax(eig_floor_).cwiseMin(1.0 / eig_floor_);
  const Matrix out = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

LossGrad gmm_loss_grad(const GmmModel& model, const Hypothesis& beta, PointView x) {
  if (x.size() != model.dim()) throw ContractError("gmm: point dimension mismatch");
  const GmmLoss bound(model, beta);
  Vector g(beta.size());
  const double f = bound.value_and_gradient(x, 0.0, g);
  return {f, std::move(g)};
}

Vector gmm_responsibilities(const GmmModel& model, const Hypothesis& beta, PointView x) {
  if (x.size() != model.dim()) throw ContractError("gmm: point dimension mismatch");
  return GmmLoss(model, beta).responsibilities(x);
}

Matrix gmm_responsibility_matrix(const GmmModel& model, const Hypothesis& beta, const Dataset& data,
                                 std::span<const Index> rows) {
  model.check_dataset(data);
  const GmmLoss bound(model, beta);
  Matrix out(static_cast<Index>(rows.size()), model.k());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Index>(r)) = bound.responsibilities(data.point(rows[r])).transpose();
  }
  return out;
}

std::vector<int> gmm_assign(const GmmModel& model, const Hypothesis& beta, const Dataset& data) {
  model.check_dataset(data);
  const GmmLoss bound(model, beta);
  std::vector<int> out(static_cast<std::size_t>(data.n()));
  for (Index i = 0; i < data.n(); ++i) {
    Index best = 0;
    Vector joint;
    bound.log_mixture(data.point(i), joint);
    joint.maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace seqcore

#pragma once

#include <random>

#include "seqcore/core.hpp"
#include "seqcore/models.hpp"

namespace seqcore::testing {

// n x d standard normal features with y = <h, x> + noise.
inline Dataset random_regression(Index n, Index d, std::uint64_t seed, double noise = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix x(n, d);
  Vector h(d), y(n);
  for (Index l = 0; l < d; ++l) h[l] = normal(rng);
  for (Index i = 0; i < n; ++i) {
    for (Index l = 0; l < d; ++l) x(i, l) = normal(rng);
    y[i] = x.row(i).dot(h) + noise * normal(rng);
  }
  return Dataset(std::move(x), std::move(y));
}

inline Dataset random_binary(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RowMatrix x(n, d);
  Vector h(d), y(n);
  for (Index l = 0; l < d; ++l) h[l] = normal(rng);
  for (Index i = 0; i < n; ++i) {
    for (Index l = 0; l < d; ++l) x(i, l) = normal(rng);
    y[i] = unit(rng) < 1.0 / (1.0 + std::exp(-x.row(i).dot(h))) ? 1.0 : 0.0;
  }
  return Dataset(std::move(x), std::move(y));
}

inline Vector random_vector(Index p, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(p);
  for (Index l = 0; l < p; ++l) v[l] = normal(rng);
  return v;
}

// Random valid mixture: simplex weights, means near the origin, and SPD
// precisions with eigenvalues inside [0.2, 5].
inline Hypothesis random_mixture(Index k, Index dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.2, 1.0);
  GmmParams params;
  params.weights.resize(k);
  for (Index j = 0; j < k; ++j) params.weights[j] = unit(rng);
  params.weights /= params.weights.sum();
  for (Index j = 0; j < k; ++j) {
    params.means.push_back(random_vector(dim, rng));
    const Matrix a = random_vector(dim * dim, rng, 0.3).reshaped(dim, dim);
    Matrix q = Eigen::HouseholderQR<Matrix>(a + Matrix::Identity(dim, dim)).householderQ();
    Vector eig(dim);
    for (Index l = 0; l < dim; ++l) eig[l] = 0.3 + 2.0 * unit(rng);
    params.precisions.push_back(q * eig.asDiagonal() * q.transpose());
    params.precisions.back() = 0.5 * (params.precisions.back() + params.precisions.back().transpose()).eval();
  }
  return params.pack();
}

// Central differences of a scalar function of the hypothesis.
template <typename F>
Vector finite_difference(const F& f, const Vector& beta, double h = 1e-5) {
  Vector g(beta.size());
  for (Index l = 0; l < beta.size(); ++l) {
    Vector up = beta, down = beta;
    up[l] += h;
    down[l] -= h;
    g[l] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

// max_l |a_l - b_l| / max(1, ||b||_inf)
inline double relative_gap(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace seqcore::testing

#include "seqcore/datagen.hpp"

#include <cmath>
#include <random>

#include "seqcore/errors.hpp"
#include "seqcore/parallel.hpp"

namespace seqcore {
namespace {

constexpr std::uint64_t kMeansSalt = 1;
constexpr std::uint64_t kPointsSalt = 2;

// Means on a scaled simplex when k <= D: e_j * gap / sqrt(2) sits exactly gap
// apart. Larger k falls back to rejection sampling in a box.
std::vector<Vector> blob_means(Index dim, Index k, double gap, std::mt19937_64& rng) {
  std::vector<Vector> means;
  if (k <= dim) {
    for (Index j = 0; j < k; ++j) {
      Vector m = Vector::Zero(dim);
      m[j] = gap / std::sqrt(2.0);
      means.push_back(m);
    }
    return means;
  }
  const double box = gap * std::pow(static_cast<double>(k), 1.0 / static_cast<double>(dim)) * 2.0;
  std::uniform_real_distribution<double> coord(-box, box);
  for (int attempt = 0; static_cast<Index>(means.size()) < k; ++attempt) {
    if (attempt > 1000000) throw ParameterError("gen_gmm: could not place separated means");
    Vector m(dim);
    for (Index l = 0; l < dim; ++l) m[l] = coord(rng);
    bool ok = true;
    for (const auto& other : means) ok = ok && (m - other).norm() >= gap;
    if (ok) means.push_back(m);
  }
  return means;
}

}  // namespace

LinearSample gen_linear(Index n, Index d, double coef_lo, double coef_hi, double noise_var, std::uint64_t seed) {
  if (n < 1 || d < 1) throw ParameterError("gen_linear: n and d must be >= 1");
  if (!(coef_lo <= coef_hi)) throw ParameterError("gen_linear: empty coefficient range");
  if (!(noise_var >= 0.0)) throw ParameterError("gen_linear: noise variance must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(coef_lo, coef_hi);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector h(d);
  for (Index l = 0; l < d; ++l) h[l] = coef(rng);
  RowMatrix x(n, d);
  Vector y(n);
  const double noise_sd = std::sqrt(noise_var);
  for (Index i = 0; i < n; ++i) {
    for (Index l = 0; l < d; ++l) x(i, l) = normal(rng);
    y[i] = x.row(i).dot(h) + noise_sd * normal(rng);
  }
  return {Dataset(std::move(x), std::move(y)), std::move(h)};
}

BlobSample gen_gmm(Index n, Index dim, Index k, double separation, std::uint64_t seed) {
  if (k < 1 || n < k) throw ParameterError("gen_gmm: need n >= k >= 1");
  if (dim < 1) throw ParameterError("gen_gmm: dimension must be >= 1");
  if (!(separation >= 0.0)) throw ParameterError("gen_gmm: separation must be >= 0");
  std::mt19937_64 mean_rng(derive_seed(seed, kMeansSalt));
  std::vector<Vector> means = blob_means(dim, k, separation * std::sqrt(static_cast<double>(dim)), mean_rng);

  std::mt19937_64 rng(derive_seed(seed, kPointsSalt));
  std::uniform_int_distribution<Index> pick(0, k - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix x(n, dim);
  Vector y(n);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index j = pick(rng);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(j);
    y[i] = static_cast<double>(j);
    for (Index l = 0; l < dim; ++l) x(i, l) = means[static_cast<std::size_t>(j)][l] + normal(rng);
  }
  return {Dataset(std::move(x), std::move(y)), std::move(labels), std::move(means)};
}

}  // namespace seqcore

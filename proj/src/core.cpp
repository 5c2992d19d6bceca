#include "seqcore/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seqcore/errors.hpp"
#include "seqcore/parallel.hpp"

namespace seqcore {

Dataset::Dataset(RowMatrix features, Vector responses)
    : features_(std::move(features)), responses_(std::move(responses)) {
  if (features_.rows() < 1 || features_.cols() < 1) {
    throw ContractError("dataset needs n >= 1 and d >= 1");
  }
  if (features_.rows() != responses_.size()) {
    throw ContractError("features have " + std::to_string(features_.rows()) + " rows but responses have " +
                        std::to_string(responses_.size()));
  }
  if (!features_.allFinite() || !responses_.allFinite()) {
    throw ContractError("dataset contains non-finite entries");
  }
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  RowMatrix x(static_cast<Index>(rows.size()), d());
  Vector y(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Index>(r)) = features_.row(rows[r]);
    y[static_cast<Index>(r)] = responses_[rows[r]];
  }
  return Dataset(std::move(x), std::move(y));
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::layered: return "layered";
    case Provenance::uniform: return "uniform";
    case Provenance::importance: return "importance";
    case Provenance::full: return "full";
  }
  return "unknown";
}

Coreset::Coreset(Vector weights, std::vector<Index> support, Provenance provenance, double total)
    : weights_(std::move(weights)), support_(std::move(support)), provenance_(provenance), total_weight_(total) {}

Coreset Coreset::full(Index n) {
  std::vector<Index> support(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) support[static_cast<std::size_t>(i)] = i;
  return Coreset(Vector::Ones(n), std::move(support), Provenance::full, static_cast<double>(n));
}

Coreset Coreset::from_weights(Vector weights, Provenance provenance) {
  std::vector<Index> support;
  std::vector<double> positive;
  for (Index i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (!std::isfinite(w) || w < 0.0) throw ContractError("coreset weights must be finite and nonnegative");
    if (w > 0.0) {
      support.push_back(i);
      positive.push_back(w);
    }
  }
  if (support.empty()) throw ContractError("coreset has empty support");
  const double total = stable_sum(std::move(positive));
  return Coreset(std::move(weights), std::move(support), provenance, total);
}

double PointLoss::envelope_gradient_norm(PointView x, double y) const {
  Vector g(dim());
  value_and_gradient(x, y, g);
  return g.norm();
}

void LossModel::check_dataset(const Dataset&) const {}

void LossModel::check_hypothesis(const Hypothesis& beta, Index d) const {
  const Index p = hypothesis_dim(d);
  if (beta.size() != p) {
    throw ContractError(std::string(name()) + ": hypothesis has " + std::to_string(beta.size()) +
                        " coordinates, expected " + std::to_string(p));
  }
  if (!beta.allFinite()) throw ContractError(std::string(name()) + ": hypothesis has non-finite coordinates");
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 8;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double stable_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return pairwise_sum(values);
}

namespace {

void require_finite(double loss, Index i) {
  if (!std::isfinite(loss)) throw NumericError("non-finite loss", i);
}

void prepare(const Dataset& data, const LossModel& model, const Hypothesis& beta) {
  model.check_dataset(data);
  model.check_hypothesis(beta, data.d());
}

void check_coreset(const Dataset& data, const Coreset& coreset) {
  if (coreset.n() != data.n()) {
    throw ContractError("coreset length " + std::to_string(coreset.n()) + " does not match n = " +
                        std::to_string(data.n()));
  }
}

}  // namespace

Vector point_losses(const Dataset& data, const LossModel& model, const Hypothesis& beta) {
  prepare(data, model, beta);
  const auto bound = model.bind(beta);
  Vector out(data.n());
  for_each_chunk(static_cast<std::size_t>(data.n()), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (auto i = static_cast<Index>(begin); i < static_cast<Index>(end); ++i) {
      const double f = bound->value(data.point(i), data.response(i));
      require_finite(f, i);
      out[i] = f;
    }
  });
  return out;
}

Vector gradient_norms(const Dataset& data, const LossModel& model, const Hypothesis& beta) {
  prepare(data, model, beta);
  const auto bound = model.bind(beta);
  Vector out(data.n());
  for_each_chunk(static_cast<std::size_t>(data.n()), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (auto i = static_cast<Index>(begin); i < static_cast<Index>(end); ++i) {
      const double g = bound->envelope_gradient_norm(data.point(i), data.response(i));
      if (!std::isfinite(g)) throw NumericError("non-finite gradient", i);
      out[i] = g;
    }
  });
  return out;
}

double full_risk(const Dataset& data, const LossModel& model, const Hypothesis& beta) {
  const Vector losses = point_losses(data, model, beta);
  return stable_sum(std::vector<double>(losses.begin(), losses.end())) / static_cast<double>(data.n());
}

double weighted_risk(const Dataset& data, const LossModel& model, const Coreset& coreset,
                     const Hypothesis& beta) {
  prepare(data, model, beta);
  check_coreset(data, coreset);
  const auto bound = model.bind(beta);
  const auto& support = coreset.support();
  std::vector<double> terms(support.size());
  for_each_chunk(support.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      const Index i = support[s];
      const double f = bound->value(data.point(i), data.response(i));
      require_finite(f, i);
      terms[s] = coreset.weights()[i] * f;
    }
  });
  return stable_sum(std::move(terms)) / coreset.total_weight();
}

RiskAndGradient weighted_risk_and_gradient(const Dataset& data, const LossModel& model, const Coreset& coreset,
                                           const Hypothesis& beta) {
  prepare(data, model, beta);
  check_coreset(data, coreset);
  const auto bound = model.bind(beta);
  const auto& support = coreset.support();
  const Index p = beta.size();
  std::vector<double> terms(support.size());
  std::vector<Vector> partial(chunk_count(support.size()), Vector::Zero(p));
  for_each_chunk(support.size(), [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Vector g(p);
    Vector& acc = partial[chunk];
    for (std::size_t s = begin; s < end; ++s) {
      const Index i = support[s];
      const double w = coreset.weights()[i];
      const double f = bound->value_and_gradient(data.point(i), data.response(i), g);
      require_finite(f, i);
      if (!g.allFinite()) throw NumericError("non-finite gradient", i);
      terms[s] = w * f;
      acc.noalias() += w * g;
    }
  });
  Vector grad = Vector::Zero(p);
  for (const auto& part : partial) grad += part;
  grad /= coreset.total_weight();
  return {stable_sum(std::move(terms)) / coreset.total_weight(), std::move(grad)};
}

Vector weighted_gradient(const Dataset& data, const LossModel& model, const Coreset& coreset,
                         const Hypothesis& beta) {
  return weighted_risk_and_gradient(data, model, coreset, beta).gradient;
}

}  // namespace seqcore

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "seqcore/coreset.hpp"
#include "seqcore/diagnostics.hpp"
#include "seqcore/errors.hpp"
#include "test_util.hpp"

using namespace seqcore;
namespace t = seqcore::testing;

namespace {

// f(beta, x, y) = y: the anchor losses are whatever the responses say.
class TableLoss final : public PointLoss {
 public:
  double value(PointView, double y) const override { return y; }
  double value_and_gradient(PointView, double y, Eigen::Ref<Vector> grad) const override {
    grad.setZero();
    return y;
  }
  Index dim() const override { return 1; }
};

class TableModel final : public LossModel {
 public:
  std::string_view name() const override { return "table"; }
  Index hypothesis_dim(Index) const override { return 1; }
  std::unique_ptr<const PointLoss> bind(const Hypothesis&) const override { return std::make_unique<TableLoss>(); }
  double lipschitz(const Dataset&, const Hypothesis&) const override { return 0.0; }
};

Dataset table(std::initializer_list<double> losses) {
  const auto n = static_cast<Index>(losses.size());
  Vector y(n);
  Index i = 0;
  for (double f : losses) y[i++] = f;
  return Dataset(RowMatrix::Zero(n, 1), y);
}

const Hypothesis kAny = Hypothesis::Zero(1);

}  // namespace

TEST_CASE("layer partition hand example") {
  const LayerPartition part = partition_layers(table({1, 1, 3, 9}), TableModel(), kAny);
  CHECK(part.H == 3.5);
  CHECK(part.N == 2);
  CHECK(part.layers[0] == std::vector<Index>{0, 1, 2});
  CHECK(part.layers[1].empty());
  CHECK(part.layers[2] == std::vector<Index>{3});
  CHECK(check_claim1(part));
  CHECK(check_partition(part));
}

TEST_CASE("equal losses land in layer zero") {
  const LayerPartition part = partition_layers(table({2, 2, 2, 2, 2}), TableModel(), kAny);
  CHECK(part.layers[0].size() == 5);
  CHECK(part.non_empty_layers() == 1);
  CHECK(check_claim1(part));
}

TEST_CASE("layer thresholds are exact at the boundaries") {
  CHECK(layer_of(1.0, 1.0) == 0);
  CHECK(layer_of(std::nextafter(1.0, 2.0), 1.0) == 1);
  CHECK(layer_of(2.0, 1.0) == 1);
  CHECK(layer_of(std::nextafter(2.0, 3.0), 1.0) == 2);
  CHECK(layer_of(4.0, 1.0) == 2);
  CHECK(layer_of(1024.0, 1.0) == 10);
  CHECK(layer_of(-3.0, 1.0) == 0);
}

TEST_CASE("zero anchor risk is degenerate") {
  CHECK_THROWS_AS(partition_layers(table({0, 0, 0}), TableModel(), kAny), DegenerateAnchorError);
  CoresetRequest request;
  request.budget = 2;
  const LocalCoreset local = construct_local_coreset(table({0, 0, 0}), TableModel(), kAny, request, 1);
  CHECK(!local.partition);
  CHECK(local.coreset.weights() == Vector::Ones(3));
}

TEST_CASE("partitions of random regression anchors satisfy every invariant") {
  std::mt19937_64 rng(41);
  const RidgeModel ridge(0.01);
  const LassoModel lasso(0.2);
  const LogisticModel logistic;
  for (int s = 0; s < 60; ++s) {
    const Index n = 5 + static_cast<Index>(rng() % 500);
    const Dataset reg = t::random_regression(n, 3, rng());
    const Dataset bin = t::random_binary(n, 3, rng());
    const Vector anchor = t::random_vector(3, rng, 3.0);
    CHECK(check_partition(partition_layers(reg, ridge, anchor)));
    CHECK(check_partition(partition_layers(reg, lasso, anchor)));
    CHECK(check_partition(partition_layers(bin, logistic, anchor)));
  }
}

TEST_CASE("layer mass bound checker") {
  LayerPartition part;
  part.H = 1.0;
  part.N = 2;
  part.anchor_losses = Vector::Ones(4);
  part.layers = {{0, 1, 2}, {}, {3}};
  CHECK(check_claim1(part));
  part.layers = {{}, {}, {0, 1, 2, 3}};  // 16 > 12
  CHECK(!check_claim1(part));
  part.layers = {{0, 1, 2, 3}, {}, {}};
  CHECK(check_claim1(part));
}

TEST_CASE("theoretical layer sizes") {
  CHECK(theoretical_layer_size(1, 1, 0, 0, 0, 1, 2.0 / std::numbers::e) == 1.0);
  CHECK(theoretical_layer_size(0, 1, 0, 0, 0, 0.5, 2.0 / (std::numbers::e * std::numbers::e)) == 4.0);

  const double j5 = theoretical_layer_size(5, 1, 0.01, 0.01, 0.01, 1, 0.1);
  const double j6 = theoretical_layer_size(6, 1, 0.01, 0.01, 0.01, 1, 0.1);
  CHECK(j6 / j5 == doctest::Approx(4.0).epsilon(0.01));

  for (int j = 0; j < 5; ++j) {
    CHECK(theoretical_layer_size(j, 1, 2, 3, 0.5, 0.1, 0.01) < theoretical_layer_size(j, 1, 2, 3, 1.0, 0.1, 0.01));
  }
  CHECK_THROWS_AS(theoretical_layer_size(0, 1, 0, 0, 0, 0, 0.1), ParameterError);
  CHECK_THROWS_AS(theoretical_layer_size(0, 1, 0, 0, 0, 1, 1.5), ParameterError);
}

TEST_CASE("grid size accounting") {
  CHECK(grid_log_size(2, 2.0 * std::sqrt(std::numbers::pi * std::numbers::e)) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(grid_log_size(7, 0.01, Index{7}) == doctest::Approx(grid_log_size(7, 0.01)).epsilon(1e-12));
  CHECK(grid_log_size(1000, 0.01, Index{2}) < grid_log_size(1000, 0.01));
  CHECK(grid_log_size(3, 1e6) == 0.0);
  CHECK_THROWS_AS(grid_log_size(3, 0.1, Index{4}), ParameterError);
}

TEST_CASE("theoretical plan") {
  const Dataset data = t::random_regression(3000, 4, 3);
  const RidgeModel ridge(0.01);
  const Vector anchor = Vector::Constant(4, 0.3);
  const LayerPartition part = partition_layers(data, ridge, anchor);
  const auto c = smoothness_constants(ridge, data, anchor, 0.5);
  const SizePlan plan = theoretical_plan(part, c, 0.25, 0.5, 1.0 / 3000, 4);
  CHECK(plan.mode == SizeMode::theoretical);
  CHECK(plan.eps1 > 0.0);
  CHECK(plan.eps2 > 0.0);
  Index total = 0;
  for (std::size_t j = 0; j < plan.per_layer.size(); ++j) {
    CHECK(plan.per_layer[j] <= static_cast<Index>(part.layers[j].size()));
    if (!part.layers[j].empty()) CHECK(plan.per_layer[j] >= 1);
    total += plan.per_layer[j];
  }
  CHECK(total == plan.total);
  CHECK(plan.uncapped_total >= static_cast<double>(plan.total));

  const SizePlan smaller = theoretical_plan(part, smoothness_constants(ridge, data, anchor, 0.25), 0.25, 0.25,
                                            1.0 / 3000, 4, plan.params.m_lower);
  CHECK(smaller.uncapped_total < plan.uncapped_total);

  const SizePlan looser = theoretical_plan(part, c, 0.5, 0.5, 1.0 / 3000, 4);
  CHECK(looser.uncapped_total < plan.uncapped_total);
}

TEST_CASE("budget plan") {
  const TableModel model;
  SUBCASE("budget n takes every point") {
    const Dataset data = table({1, 1, 3, 9, 2, 5});
    const LayerPartition part = partition_layers(data, model, kAny);
    const SizePlan plan = budget_plan(part, smoothness_constants(model, data, kAny, 0.0), 6, 0.0);
    CHECK(plan.per_layer == part.layer_sizes());
    const Coreset c = build_local_coreset(part, plan, 5);
    CHECK(c.weights() == Vector::Ones(6));
  }
  SUBCASE("two equal-range layers split evenly") {
    // Layer 0 and layer 1 both have range H when L = M = 0.
    const Dataset data = table({1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2});
    const LayerPartition part = partition_layers(data, model, kAny);
    REQUIRE(part.layer_sizes()[0] == 10);
    REQUIRE(part.layer_sizes()[1] == 10);
    const SizePlan plan = budget_plan(part, smoothness_constants(model, data, kAny, 0.0), 10, 0.0);
    CHECK(plan.per_layer[0] == 5);
    CHECK(plan.per_layer[1] == 5);
    CHECK(plan.total == 10);
  }
  SUBCASE("a capped layer hands its share to the others") {
    const Dataset data = table({1, 1, 1, 9});
    const LayerPartition part = partition_layers(data, model, kAny);
    REQUIRE(part.layer_sizes() == std::vector<Index>{3, 0, 1});
    const auto c = smoothness_constants(model, data, kAny, 0.0);
    CHECK(budget_plan(part, c, 3, 0.0).per_layer == std::vector<Index>{2, 0, 1});
    CHECK(budget_plan(part, c, 4, 0.0).per_layer == std::vector<Index>{3, 0, 1});
  }
  SUBCASE("budget errors") {
    const Dataset data = table({1, 1, 1, 9});
    const LayerPartition part = partition_layers(data, model, kAny);
    const auto c = smoothness_constants(model, data, kAny, 0.0);
    CHECK_THROWS_AS(budget_plan(part, c, 1, 0.0), InfeasibleBudgetError);
    CHECK_THROWS_AS(budget_plan(part, c, 5, 0.0), ParameterError);
    CHECK_THROWS_AS(budget_plan(part, c, 0, 0.0), ParameterError);
  }
  SUBCASE("random partitions always hit the budget exactly") {
    std::mt19937_64 rng(7);
    const RidgeModel ridge(0.01);
    for (int s = 0; s < 40; ++s) {
      const Index n = 50 + static_cast<Index>(rng() % 2000);
      const Dataset data = t::random_regression(n, 3, rng());
      const Vector anchor = t::random_vector(3, rng);
      const LayerPartition part = partition_layers(data, ridge, anchor);
      const Index budget = part.non_empty_layers() + static_cast<Index>(rng() % static_cast<std::uint64_t>(n - part.non_empty_layers() + 1));
      const SizePlan plan = budget_plan(part, smoothness_constants(ridge, data, anchor, 0.3), budget, 0.3);
      CHECK(plan.total == budget);
      for (std::size_t j = 0; j < plan.per_layer.size(); ++j) {
        CHECK(plan.per_layer[j] <= static_cast<Index>(part.layers[j].size()));
        CHECK((part.layers[j].empty() || plan.per_layer[j] >= 1));
      }
    }
  }
}

TEST_CASE("layered sampling weights") {
  const Dataset data = table({1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2});
  const LayerPartition part = partition_layers(data, TableModel(), kAny);
  SizePlan plan;
  plan.per_layer = {2, 10};
  plan.per_layer.resize(part.layers.size(), 0);
  const Coreset c = build_local_coreset(part, plan, 3);
  CHECK(c.size() == 12);
  CHECK(c.provenance() == Provenance::layered);
  for (Index i : c.support()) CHECK(c.weights()[i] == (i < 10 ? 5.0 : 1.0));
  CHECK(c.total_weight() == 20.0);

  const Coreset again = build_local_coreset(part, plan, 3);
  CHECK(again.support() == c.support());
  const Coreset other = build_local_coreset(part, plan, 4);
  CHECK(other.total_weight() == 20.0);

  plan.per_layer[0] = 11;
  CHECK_THROWS_AS(build_local_coreset(part, plan, 3), ContractError);
}

TEST_CASE("layered coreset risk is unbiased over seeds") {
  const Dataset data = t::random_regression(400, 3, 19);
  const RidgeModel ridge(0.01);
  const Vector anchor = Vector::Constant(3, 0.5);
  const Vector probe = Vector::Constant(3, 0.2);
  CoresetRequest request;
  request.budget = 40;
  request.R = 0.5;
  const double truth = full_risk(data, ridge, probe);
  std::vector<double> estimates;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const LocalCoreset local = construct_local_coreset(data, ridge, anchor, request, s);
    estimates.push_back(weighted_risk(data, ridge, local.coreset, probe));
  }
  double mean = 0.0, var = 0.0;
  for (double e : estimates) mean += e;
  mean /= static_cast<double>(estimates.size());
  for (double e : estimates) var += (e - mean) * (e - mean);
  const double stderr_mean = std::sqrt(var / static_cast<double>(estimates.size() - 1) / static_cast<double>(estimates.size()));
  CHECK(std::abs(mean - truth) <= 4.0 * stderr_mean);
}

TEST_CASE("uniform baseline") {
  const Dataset data = t::random_regression(6, 2, 1);
  const Coreset two = uniform_baseline(data, 2, 9);
  CHECK(two.size() == 2);
  for (Index i : two.support()) CHECK(two.weights()[i] == 3.0);
  CHECK(uniform_baseline(data, 6, 9).weights() == Vector::Ones(6));
  CHECK(uniform_baseline(data, 2, 9).support() == two.support());
  const Dataset big = t::random_regression(997, 2, 2);
  CHECK(uniform_baseline(big, 101, 1).total_weight() == doctest::Approx(997.0).epsilon(1e-12));
  CHECK_THROWS_AS(uniform_baseline(data, 7, 1), ParameterError);
}

TEST_CASE("importance sampling") {
  SUBCASE("draw ratio follows the scores") {
    Vector s(2);
    s << 1.0, 3.0;
    const auto pure = importance_draws(s, 100000, 5, 0.0);
    CHECK(static_cast<double>(pure[1]) / static_cast<double>(pure[0]) == doctest::Approx(3.0).epsilon(0.03));
    const auto mixed = importance_draws(s, 100000, 5, 0.5);
    CHECK(static_cast<double>(mixed[1]) / static_cast<double>(mixed[0]) == doctest::Approx(5.0 / 3.0).epsilon(0.03));
  }
  SUBCASE("identical scores reduce to uniform probabilities") {
    const Dataset data = t::random_regression(50, 2, 3);
    const Vector s = Vector::Constant(50, 2.0);
    const Coreset c = importance_from_scores(data, s, 10, 4);
    const auto counts = importance_draws(s, 10, 4, 0.5);
    // Each weight is proportional to the draw count.
    for (Index i : c.support()) {
      CHECK(c.weights()[i] / static_cast<double>(counts[static_cast<std::size_t>(i)]) ==
            doctest::Approx(50.0 / 10.0).epsilon(1e-12));
    }
    CHECK(c.total_weight() == doctest::Approx(50.0).epsilon(1e-12));
  }
  SUBCASE("weights sum to n and zero scores fall back to uniform") {
    const Dataset data = t::random_regression(300, 2, 5);
    std::mt19937_64 rng(1);
    Vector s(300);
    for (Index i = 0; i < 300; ++i) s[i] = std::abs(t::random_vector(1, rng)[0]);
    const Coreset c = importance_from_scores(data, s, 37, 8);
    CHECK(c.total_weight() == doctest::Approx(300.0).epsilon(1e-9));
    CHECK(c.provenance() == Provenance::importance);
    CHECK(importance_from_scores(data, Vector::Zero(300), 37, 8).provenance() == Provenance::uniform);
  }
  SUBCASE("pilot-based baseline") {
    const Dataset data = t::random_regression(500, 3, 6);
    const RidgeModel ridge(0.01);
    Index pilot_points = 0;
    const PilotFit fit = [&](const Coreset& pilot) {
      pilot_points = pilot.size();
      return Hypothesis(Vector::Zero(3));
    };
    const Coreset c = importance_baseline(data, ridge, 50, 11, fit);
    CHECK(pilot_points == 25);
    CHECK(c.total_weight() == doctest::Approx(500.0).epsilon(1e-9));
  }
}

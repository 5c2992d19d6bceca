#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "seqcore/errors.hpp"
#include "seqcore/optimizers.hpp"
#include "test_util.hpp"

using namespace seqcore;
namespace t = seqcore::testing;

namespace {

Dataset rows(std::initializer_list<std::initializer_list<double>> xs, std::initializer_list<double> ys) {
  RowMatrix x(static_cast<Index>(xs.size()), static_cast<Index>(xs.begin()->size()));
  Index i = 0;
  for (const auto& r : xs) {
    Index l = 0;
    for (double v : r) x(i, l++) = v;
    ++i;
  }
  Vector y(static_cast<Index>(ys.size()));
  i = 0;
  for (double v : ys) y[i++] = v;
  return Dataset(x, y);
}

HostConfig fixed(double eta) {
  HostConfig c;
  c.step_size = eta;
  return c;
}

// Two unit blobs at -4 and +4 along the first axis.
Dataset blobs(Index per_blob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix x(2 * per_blob, 2);
  for (Index i = 0; i < 2 * per_blob; ++i) {
    x(i, 0) = (i < per_blob ? -4.0 : 4.0) + normal(rng);
    x(i, 1) = normal(rng);
  }
  return Dataset(x, Vector::Zero(2 * per_blob));
}

Hypothesis two_component_start(double spread) {
  GmmParams p;
  p.weights = Vector::Constant(2, 0.5);
  p.means = {Vector::Zero(2), Vector::Zero(2)};
  p.means[0][0] = -spread;
  p.means[1][0] = spread;
  p.precisions = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  return p.pack();
}

}  // namespace

TEST_CASE("host names and defaults") {
  CHECK(default_host(RidgeModel()) == HostKind::gradient_descent);
  CHECK(default_host(LogisticModel()) == HostKind::gradient_descent);
  CHECK(default_host(LassoModel(0.1)) == HostKind::proximal);
  CHECK(default_host(LassoModel(0.1, 1.5)) == HostKind::subgradient);
  CHECK(default_host(GmmModel(2, 2)) == HostKind::em);
  for (auto kind : {HostKind::gradient_descent, HostKind::proximal, HostKind::subgradient, HostKind::em}) {
    CHECK(host_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(host_kind_from_string("newton"), ParameterError);
  HostConfig bad;
  bad.armijo_c = 1.5;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("gradient descent step") {
  SUBCASE("stationary point") {
    const Dataset data = rows({{1, 0}}, {1});
    Vector beta(2);
    beta << 1, 0;
    const StepOutcome out = gd_step(RidgeModel(0.0), data, Coreset::full(1), beta, HostConfig{});
    CHECK(out.stable);
    CHECK(out.next == beta);
  }
  SUBCASE("quadratic hand step") {
    const Dataset data = rows({{1}}, {0});
    const Vector beta = Vector::Constant(1, 0.8);
    const StepOutcome out = gd_step(RidgeModel(0.0), data, Coreset::full(1), beta, fixed(0.25));
    CHECK(out.next[0] == doctest::Approx(0.4));
  }
  SUBCASE("descent lemma with a fixed step below 1/L") {
    const Dataset data = t::random_regression(80, 3, 4);
    const RidgeModel ridge(0.01);
    const double L = ridge.lipschitz(data, Vector::Zero(3));
    const Coreset all = Coreset::full(80);
    Vector beta = Vector::Constant(3, 4.0);
    double loss = weighted_risk(data, ridge, all, beta);
    for (int it = 0; it < 100; ++it) {
      const StepOutcome out = gd_step(ridge, data, all, beta, fixed(1.0 / L));
      CHECK(out.loss_next <= loss + 1e-12);
      loss = out.loss_next;
      beta = out.next;
    }
  }
  SUBCASE("backtracking reaches the least-squares solution") {
    const Dataset data = t::random_regression(200, 4, 6);
    const RidgeModel ridge(0.0);
    HostConfig cfg;
    cfg.rel_loss_tol = 1e-15;
    cfg.grad_tol = 1e-10;
    const HostRun run = run_host(HostKind::gradient_descent, ridge, data, Coreset::full(200), Vector::Zero(4), cfg);
    const Matrix x = data.features();
    const Vector ols = (x.transpose() * x).ldlt().solve(x.transpose() * data.responses());
    CHECK(run.converged);
    CHECK((run.beta - ols).norm() < 1e-6);
  }
  SUBCASE("step length cap") {
    const Dataset data = rows({{1}}, {0});
    HostConfig cfg = fixed(0.25);
    cfg.max_step_length = 0.01;
    const StepOutcome out = gd_step(RidgeModel(0.0), data, Coreset::full(1), Vector::Constant(1, 10.0), cfg);
    CHECK(std::abs(out.next[0] - 10.0) == doctest::Approx(0.01));
  }
}

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
}

TEST_CASE("proximal step") {
  SUBCASE("lambda zero equals gradient descent on the smooth part") {
    const Dataset data = t::random_regression(30, 3, 2);
    const Vector beta = Vector::Constant(3, 0.7);
    const StepOutcome prox = prox_step(LassoModel(0.0), data, Coreset::full(30), beta, fixed(0.05));
    const StepOutcome gd = gd_step(RidgeModel(0.0), data, Coreset::full(30), beta, fixed(0.05));
    CHECK((prox.next - gd.next).norm() < 1e-14);
  }
  SUBCASE("fixed point satisfies the subgradient optimality conditions") {
    const Dataset data = rows({{1, 2}, {-1, 0.5}, {0.3, -1}}, {1, -2, 0.5});
    const double lambda = 0.4;
    const LassoModel lasso(lambda);
    HostConfig cfg;
    cfg.grad_tol = 1e-12;
    cfg.rel_loss_tol = 1e-16;
    const HostRun run = run_host(HostKind::proximal, lasso, data, Coreset::full(3), Vector::Zero(2), cfg);
    const Vector g = weighted_gradient(data, lasso.smooth_part(), Coreset::full(3), run.beta);
    for (Index l = 0; l < 2; ++l) {
      if (run.beta[l] != 0.0) {
        CHECK(std::abs(g[l] + lambda * std::copysign(1.0, run.beta[l])) < 1e-6);
      } else {
        CHECK(std::abs(g[l]) <= lambda + 1e-6);
      }
    }
  }
  SUBCASE("requires an l_p model") {
    const Dataset data = t::random_regression(5, 2, 1);
    CHECK_THROWS_AS(prox_step(RidgeModel(), data, Coreset::full(5), Vector::Zero(2), HostConfig{}), ContractError);
  }
}

TEST_CASE("subgradient step") {
  SUBCASE("lambda zero is gradient descent with a decaying step") {
    const Dataset data = t::random_regression(20, 2, 3);
    const Vector beta = Vector::Constant(2, 1.0);
    const StepOutcome sub = subgradient_step(LassoModel(0.0, 1.0), data, Coreset::full(20), beta, fixed(0.1), 3);
    const StepOutcome gd = gd_step(RidgeModel(0.0), data, Coreset::full(20), beta, fixed(0.05));
    CHECK((sub.next - gd.next).norm() < 1e-14);
  }
  SUBCASE("absolute value descends below 0.1") {
    // Zero features and responses leave only lambda |beta|.
    const Dataset data = rows({{0}}, {0});
    const LassoModel lasso(1.0, 1.0);
    Vector beta = Vector::Constant(1, 1.0);
    int reached = -1;
    for (int it = 0; it < 200 && reached < 0; ++it) {
      beta = subgradient_step(lasso, data, Coreset::full(1), beta, fixed(0.3), it).next;
      if (std::abs(beta[0]) < 0.1) reached = it;
    }
    CHECK(reached >= 0);
    CHECK(reached < 50);
  }
}

TEST_CASE("weighted EM") {
  SUBCASE("full-data EM never increases the negative log-likelihood") {
    const Dataset data = blobs(200, 5);
    const GmmModel model(2, 2);
    Hypothesis beta = two_component_start(0.5);
    double loss = full_risk(data, model, beta);
    for (int it = 0; it < 30; ++it) {
      const StepOutcome out = em_step(model, data, Coreset::full(data.n()), beta, HostConfig{});
      CHECK(out.loss_next <= loss + 1e-10);
      loss = out.loss_next;
      beta = out.next;
    }
  }
  SUBCASE("one component lands on the weighted moments") {
    const Dataset data = blobs(50, 8);
    const GmmModel model(1, 2);
    Vector w = Vector::Zero(data.n());
    for (Index i = 0; i < data.n(); i += 3) w[i] = 1.0 + static_cast<double>(i % 4);
    const Coreset c = Coreset::from_weights(w, Provenance::importance);
    GmmParams start;
    start.weights = Vector::Ones(1);
    start.means = {Vector::Zero(2)};
    start.precisions = {Matrix::Identity(2, 2)};
    const GmmParams next = GmmParams::unpack(em_step(model, data, c, start.pack(), HostConfig{}).next, 1, 2);

    Vector mean = Vector::Zero(2);
    for (Index i : c.support()) mean += w[i] * data.point(i);
    mean /= c.total_weight();
    Matrix cov = Matrix::Zero(2, 2);
    for (Index i : c.support()) cov += w[i] * (data.point(i) - mean) * (data.point(i) - mean).transpose();
    cov /= c.total_weight();
    CHECK((next.means[0] - mean).norm() < 1e-12);
    CHECK((next.precisions[0] - model.clamp_spectrum(cov).inverse()).norm() < 1e-9);
    CHECK(next.weights[0] == doctest::Approx(1.0));
  }
  SUBCASE("symmetric start on symmetric data keeps equal weights") {
    RowMatrix x(4, 2);
    x << -1, 0, 1, 0, 0, -1, 0, 1;
    const Dataset data(x, Vector::Zero(4));
    const GmmModel model(2, 2);
    GmmParams start;
    start.weights = Vector::Constant(2, 0.5);
    start.means = {Vector::Zero(2), Vector::Zero(2)};
    start.precisions = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
    const Matrix resp = gmm_responsibility_matrix(model, start.pack(), data, Coreset::full(4).support());
    CHECK((resp.array() - 0.5).abs().maxCoeff() < 1e-15);
    const GmmParams next = GmmParams::unpack(em_step(model, data, Coreset::full(4), start.pack(), HostConfig{}).next, 2, 2);
    CHECK(next.weights[0] == doctest::Approx(0.5));
  }
  SUBCASE("a collapsed component is re-seeded") {
    const Dataset data = blobs(20, 3);
    const GmmModel model(2, 2);
    GmmParams start;
    start.weights = Vector::Constant(2, 0.5);
    start.means = {Vector::Zero(2), Vector::Constant(2, 1e4)};
    start.precisions = {Matrix::Identity(2, 2), Matrix::Identity(2, 2) * 50.0};
    const StepOutcome out = em_step(model, data, Coreset::full(data.n()), start.pack(), HostConfig{});
    CHECK(out.reseeded);
    CHECK(!out.stable);
    CHECK_NOTHROW(model.check_mixture(out.next));
  }
}

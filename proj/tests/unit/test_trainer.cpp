#include <doctest.h>

#include <cmath>

#include "ecbm/errors.hpp"
#include "ecbm/losses.hpp"
#include "ecbm/trainer.hpp"
#include "support/fixtures.hpp"

using namespace ecbm;

namespace {

// f(x) = 0.5 x^T A x - b^T x with A SPD; minimizer solves A x = b.
struct Quadratic {
  Matrix a;
  Vector b;
  double operator()(const Vector& x, Vector& g) const {
    g = a * x - b;
    return 0.5 * x.dot(a * x) - b.dot(x);
  }
};

Quadratic make_quadratic(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix m = ecbm::testing::random_matrix(n, n, rng);
  Quadratic q{m * m.transpose() + Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
              ecbm::testing::random_vector(n, rng)};
  return q;
}

}  // namespace

TEST_CASE("line-search descent reaches the minimizer of a quadratic") {
  const auto q = make_quadratic(6, 1);
  TrainConfig cfg;
  cfg.grad_tol = 1e-10;
  const auto r = minimize(q, Vector::Zero(6), cfg);
  CHECK(r.converged);
  const Vector exact = q.a.ldlt().solve(q.b);
  CHECK((r.x - exact).norm() < 1e-8);
  CHECK(r.grad_norm <= 1e-10);
}

TEST_CASE("fixed-step descent converges for a safe step and diverges for a large one") {
  const auto q = make_quadratic(4, 2);
  const double lmax = q.a.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
  TrainConfig cfg;
  cfg.line_search = false;
  cfg.step_size = 1.0 / lmax;
  cfg.grad_tol = 1e-9;
  cfg.max_iters = 200000;
  const auto r = minimize(q, Vector::Zero(4), cfg);
  CHECK(r.converged);
  cfg.step_size = 10.0 / lmax;
  CHECK_THROWS_AS(minimize(q, Vector::Zero(4), cfg), DivergenceError);
}

TEST_CASE("iteration cap stops without claiming convergence") {
  const auto q = make_quadratic(5, 3);
  TrainConfig cfg;
  cfg.max_iters = 2;
  cfg.grad_tol = 1e-14;
  const auto r = minimize(q, Vector::Zero(5), cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 2);
}

TEST_CASE("invalid training configs are rejected") {
  TrainConfig cfg;
  cfg.step_size = 0.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = TrainConfig{};
  cfg.l2_reg = -1.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = TrainConfig{};
  cfg.max_iters = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("cbm training is deterministic and reaches a stationary point") {
  const auto d = ecbm::testing::random_dataset(60, 4, 3, 3, 9);
  const CbmSpec spec{{6}, ConceptLink::SigmoidBce, LabelLoss::SoftmaxCe, true};
  TrainConfig cfg;
  cfg.seed = 5;
  cfg.l2_reg = 0.5;
  const auto a = train_cbm(d, spec, cfg);
  const auto b = train_cbm(d, spec, cfg);
  CHECK(a.model.g.parameters() == b.model.g.parameters());
  CHECK(a.model.f.parameters() == b.model.f.parameters());
  CHECK(a.concept_stage.converged);
  CHECK(a.label_stage.converged);

  Vector grad;
  concept_objective(a.model.g, d.inputs, d.concepts, TermMask::all(d.size(), 3), cfg.l2_reg, &grad);
  CHECK(grad.norm() <= cfg.grad_tol);
  const RowMatrix c = concept_outputs(a.model.g, d.inputs);
  label_objective(a.model.f, c, d.labels, all_indices(d.size()), cfg.l2_reg, &grad);
  CHECK(grad.norm() <= cfg.grad_tol);

  cfg.seed = 6;
  const auto other = train_cbm(d, spec, cfg);
  CHECK(other.concept_stage.converged);
}

TEST_CASE("training rejects mismatched initial models") {
  const auto d = ecbm::testing::random_dataset(10, 4, 3, 2, 1);
  const CbmSpec spec{{}, ConceptLink::SigmoidBce, LabelLoss::SoftmaxCe, true};
  const auto wrong = init_concept_predictor(5, 3, spec, 0);
  CHECK_THROWS_AS(train_concept_stage(d, wrong, TrainConfig{}), DimensionError);
}

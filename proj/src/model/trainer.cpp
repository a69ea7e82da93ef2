#include "ecbm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "ecbm/errors.hpp"

namespace ecbm {

void validate(const TrainConfig& c) {
  if (c.max_iters == 0) throw ConfigError("max_iters must be positive");
  if (!(c.step_size > 0.0) || !std::isfinite(c.step_size)) throw ConfigError("step_size must be positive");
  if (!(c.grad_tol > 0.0)) throw ConfigError("grad_tol must be positive");
  if (!(c.l2_reg >= 0.0) || !std::isfinite(c.l2_reg)) throw ConfigError("l2_reg must be non-negative");
}

MinimizeResult minimize(const Objective& fn, Vector x0, const TrainConfig& config) {
  validate(config);
  constexpr double armijo = 1e-4;
  constexpr std::size_t history = 10;
  constexpr double eps = std::numeric_limits<double>::epsilon();

  MinimizeResult r;
  r.x = std::move(x0);
  Vector g;
  double f = fn(r.x, g);
  if (!std::isfinite(f) || !g.allFinite()) throw DivergenceError("objective is not finite at the initial point");

  std::deque<double> recent{f};
  Vector x_prev, g_prev, x_new, g_new;
  double t = config.step_size;
  bool have_prev = false;

  for (r.iterations = 0; r.iterations < config.max_iters; ++r.iterations) {
    const double gsq = g.squaredNorm();
    if (std::sqrt(gsq) <= config.grad_tol) break;
    double f_new = 0.0;
    if (config.line_search) {
      if (have_prev) {
        const Vector s = r.x - x_prev;
        const Vector y = g - g_prev;
        const double sy = s.dot(y);
        t = sy > 0.0 ? s.squaredNorm() / sy : t * 2.0;
      }
      const double f_ref = *std::max_element(recent.begin(), recent.end());
      const double slack = 8.0 * eps * std::abs(f_ref);
      bool accepted = false;
      for (int bt = 0; bt < 80; ++bt) {
        x_new = r.x - t * g;
        f_new = fn(x_new, g_new);
        if (std::isfinite(f_new) && g_new.allFinite() && f_new <= f_ref - armijo * t * gsq + slack) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
    } else {
      x_new = r.x - t * g;
      f_new = fn(x_new, g_new);
      if (!std::isfinite(f_new) || !g_new.allFinite())
        throw DivergenceError("loss became non-finite during fixed-step descent");
    }
    x_prev.swap(r.x);
    g_prev.swap(g);
    r.x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    have_prev = true;
    recent.push_back(f);
    if (recent.size() > history) recent.pop_front();
  }
  r.loss = f;
  r.grad_norm = g.norm();
  r.converged = r.grad_norm <= config.grad_tol;
  return r;
}

TrainResult<ConceptPredictor> train_concept_stage(const Dataset& data, const CbmSpec& spec,
                                                  const TrainConfig& config) {
  return train_concept_stage(
      data, init_concept_predictor(data.input_dim(), data.num_concepts(), spec, mix_seed(config.seed, 1)), config);
}

TrainResult<ConceptPredictor> train_concept_stage(const Dataset& data, ConceptPredictor init,
                                                  const TrainConfig& config) {
  validate(data);
  if (init.input_dim() != data.input_dim() || init.num_concepts() != data.num_concepts())
    throw DimensionError("concept predictor shape does not match dataset");
  const auto mask = TermMask::all(data.size(), data.num_concepts());
  ConceptPredictor work = init;
  Objective fn = [&](const Vector& theta, Vector& grad) {
    work.set_parameters(theta);
    return concept_objective(work, data.inputs, data.concepts, mask, config.l2_reg, &grad);
  };
  auto m = minimize(fn, init.parameters(), config);
  TrainResult<ConceptPredictor> out{std::move(init), m.loss, m.grad_norm, m.iterations, m.converged};
  out.model.set_parameters(m.x);
  return out;
}

TrainResult<LabelPredictor> train_label_stage(const RowMatrix& concept_batch, const std::vector<int>& labels,
                                              std::size_t num_classes, const CbmSpec& spec,
                                              const TrainConfig& config) {
  return train_label_stage(
      concept_batch, labels,
      init_label_predictor(static_cast<std::size_t>(concept_batch.cols()), num_classes, spec, mix_seed(config.seed, 2)),
      config);
}

TrainResult<LabelPredictor> train_label_stage(const RowMatrix& concept_batch, const std::vector<int>& labels,
                                              LabelPredictor init, const TrainConfig& config) {
  if (static_cast<std::size_t>(concept_batch.rows()) != labels.size()) throw DimensionError("label count mismatch");
  const auto rows = all_indices(labels.size());
  LabelPredictor work = init;
  Objective fn = [&](const Vector& theta, Vector& grad) {
    work.set_parameters(theta);
    return label_objective(work, concept_batch, labels, rows, config.l2_reg, &grad);
  };
  auto m = minimize(fn, init.parameters(), config);
  TrainResult<LabelPredictor> out{std::move(init), m.loss, m.grad_norm, m.iterations, m.converged};
  out.model.set_parameters(m.x);
  return out;
}

CbmTrainResult train_cbm(const Dataset& data, const CbmSpec& spec, const TrainConfig& config) {
  auto g = train_concept_stage(data, spec, config);
  const RowMatrix batch = concept_outputs(g.model, data.inputs);
  auto f = train_label_stage(batch, data.labels, data.num_classes, spec, config);
  return CbmTrainResult{Cbm{g.model, f.model}, std::move(g), std::move(f)};
}

}  // namespace ecbm

#pragma once

#include <cstdint>
#include <functional>

#include "ecbm/losses.hpp"
#include "ecbm/model.hpp"

namespace ecbm {

struct TrainConfig {
  std::size_t max_iters = 20000;
  double step_size = 1e-2;  // initial step; the fixed step when line_search is off
  double grad_tol = 1e-6;
  double l2_reg = 1e-2;
  bool line_search = true;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& c);

struct MinimizeResult {
  Vector x;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Objective returns the value and writes the gradient.
using Objective = std::function<double(const Vector&, Vector&)>;

// Deterministic full-batch gradient descent. With line search on, each step
// tries a Barzilai-Borwein length and backtracks until the Armijo condition holds.
MinimizeResult minimize(const Objective& fn, Vector x0, const TrainConfig& config);

template <class Model>
struct TrainResult {
  Model model;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

TrainResult<ConceptPredictor> train_concept_stage(const Dataset& data, const CbmSpec& spec,
                                                  const TrainConfig& config);
TrainResult<ConceptPredictor> train_concept_stage(const Dataset& data, ConceptPredictor init,
                                                  const TrainConfig& config);
TrainResult<LabelPredictor> train_label_stage(const RowMatrix& concept_batch, const std::vector<int>& labels,
                                              std::size_t num_classes, const CbmSpec& spec,
                                              const TrainConfig& config);
TrainResult<LabelPredictor> train_label_stage(const RowMatrix& concept_batch, const std::vector<int>& labels,
                                              LabelPredictor init, const TrainConfig& config);

struct CbmTrainResult {
  Cbm model;
  TrainResult<ConceptPredictor> concept_stage;
  TrainResult<LabelPredictor> label_stage;
};

// Sequential training: g on (x, c), then f on (g(x), y).
CbmTrainResult train_cbm(const Dataset& data, const CbmSpec& spec, const TrainConfig& config);

}  // namespace ecbm

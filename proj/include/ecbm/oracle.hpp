#pragma once

#include <string>
#include <vector>

#include "ecbm/editor.hpp"
#include "ecbm/model.hpp"
#include "ecbm/trainer.hpp"

namespace ecbm {

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);
// Mean per-class F1 over classes that occur in the truth or the predictions.
double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth, std::size_t num_classes);

struct ComparisonReport {
  double concept_distance = 0.0;
  double concept_relative = 0.0;  // relative to model b
  double label_distance = 0.0;
  double label_relative = 0.0;
  double accuracy_a = 0.0;
  double accuracy_b = 0.0;
  double f1_a = 0.0;
  double f1_b = 0.0;
  double agreement = 0.0;
  std::size_t test_rows = 0;
};

ComparisonReport compare(const Cbm& a, const Cbm& b, const Dataset& test);
std::string report_to_json(const ComparisonReport& r);

// Applies the request to the data and trains from scratch with the same seeds.
CbmTrainResult retrain_after_edit(const Dataset& d, const EditRequest& r, const CbmSpec& spec,
                                  const TrainConfig& config);

struct BoundInputs {
  EditLevel level = EditLevel::ConceptLabel;
  double c_h = 0.0;        // Lipschitz constant of one loss unit's hessian
  double c_h_minus = 0.0;  // the same for the edited objective
  double c_l_prime = 0.0;  // gradient norm of one edited unit (the whole edited part at concept_label level)
  double sigma_min = 0.0;
  double sigma_prime_min = 0.0;
  double delta = 0.0;
  std::size_t multiplicity = 1;  // |M| or |G|; 1 at concept_label level
};

// Upper bound on the distance between the concept-stage edit and retraining.
double error_bound(const BoundInputs& in);
// Concrete constants for a linear concept predictor at g_hat.
BoundInputs estimate_bound_inputs(const Dataset& d, const ConceptPredictor& g_hat, const EditRequest& r, double delta);
// sup |d^3 loss / dz^3| for a link: 1/(6 sqrt 3) for sigmoid-bce, 0 for mse.
double link_third_derivative_bound(ConceptLink link);

}  // namespace ecbm

#pragma once

#include <vector>

#include "ecbm/model.hpp"

namespace ecbm {

// Which concept-stage terms enter a loss: rows x concepts.
struct TermMask {
  IndexList rows;
  std::vector<unsigned char> concepts;  // 1 = included, size k

  static TermMask all(std::size_t n, std::size_t k);
  TermMask& exclude_concepts(const IndexList& js);
};

struct ForwardCache {
  std::vector<Vector> inputs;  // input to each layer
  std::vector<Vector> pre;     // pre-activation of each layer
};

void forward(const ConceptPredictor& g, const double* x, ForwardCache& cache);
Vector concept_logits(const ConceptPredictor& g, const double* x);
// n x k concept outputs: sigmoid probabilities or raw values for the mse link.
RowMatrix concept_outputs(const ConceptPredictor& g, const RowMatrix& inputs);
// As above with the listed concept slots forced to zero.
RowMatrix concept_outputs(const ConceptPredictor& g, const RowMatrix& inputs, const IndexList& zero_slots);

// dL/ds for each layer given dL/d(logits).
void backward(const ConceptPredictor& g, const ForwardCache& cache, const Vector& out_delta,
              std::vector<Vector>& deltas);
void accumulate_layer_gradients(const ParamLayout& layout, const ForwardCache& cache,
                                const std::vector<Vector>& deltas, double scale, double* grad);

double link_loss(ConceptLink link, double z, double target);
double link_grad(ConceptLink link, double z, double target);
double link_curv(ConceptLink link, double z);
double link_output(ConceptLink link, double z);

// Sum over masked terms plus (l2/2)||theta||^2. Writes the gradient when grad != nullptr.
double concept_objective(const ConceptPredictor& g, const RowMatrix& inputs, const RowMatrix& targets,
                         const TermMask& mask, double l2, Vector* grad);
// Gradient of the masked concept terms of a single sample.
Vector concept_sample_gradient(const ConceptPredictor& g, const double* x, const double* target,
                               const std::vector<unsigned char>& concepts);

Vector label_logits(const LabelPredictor& f, const double* c);
double label_sample_loss(const LabelPredictor& f, const double* c, int y);
// dL/dz and d2L/dz2 for one sample.
void label_output_derivatives(const LabelPredictor& f, const Vector& logits, int y, Vector& grad, Matrix* hess);
double label_objective(const LabelPredictor& f, const RowMatrix& concept_batch, const std::vector<int>& labels,
                       const IndexList& rows, double l2, Vector* grad);
Vector label_sample_gradient(const LabelPredictor& f, const double* c, int y);
// Jacobian of logits w.r.t. label parameters, d_o x P.
Matrix label_jacobian(const LabelPredictor& f, const double* c);

std::vector<int> predict_labels(const LabelPredictor& f, const RowMatrix& concept_batch);
std::vector<int> predict(const Cbm& m, const RowMatrix& inputs);

}  // namespace ecbm

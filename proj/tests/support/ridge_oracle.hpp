#pragma once

#include "ecbm/model.hpp"

namespace ecbm::testing {

// Closed-form minimizer of sum_i 0.5 |W [a_i; 1] - t_i|^2 + 0.5 delta |W|^2 over `rows`.
inline RowMatrix ridge_fit(const RowMatrix& a, const RowMatrix& t, const IndexList& rows, double delta) {
  const auto cols = a.cols() + 1;
  Matrix gram = delta * Matrix::Identity(cols, cols);
  Matrix rhs = Matrix::Zero(cols, t.cols());
  Vector h(cols);
  for (auto i : rows) {
    const auto r = static_cast<Eigen::Index>(i);
    h.head(a.cols()) = a.row(r).transpose();
    h(a.cols()) = 1.0;
    gram += h * h.transpose();
    rhs += h * t.row(r);
  }
  return gram.ldlt().solve(rhs).transpose();
}

// Exact two-stage fit of a linear-mse concept predictor and a linear-mse label predictor.
inline Cbm exact_linear_cbm(const Dataset& d, double delta) {
  const CbmSpec spec{{}, ConceptLink::Mse, LabelLoss::Mse, true};
  Cbm m{init_concept_predictor(d.input_dim(), d.num_concepts(), spec, 0),
        init_label_predictor(d.num_concepts(), d.num_classes, spec, 0)};
  const auto rows = all_indices(d.size());
  const RowMatrix wg = ridge_fit(d.inputs, d.concepts, rows, delta);
  m.g.layers[0].weight = wg.leftCols(wg.cols() - 1);
  m.g.layers[0].bias = wg.col(wg.cols() - 1);
  const RowMatrix c = d.inputs * m.g.layers[0].weight.transpose() +
                      Vector::Ones(static_cast<Eigen::Index>(d.size())) * m.g.layers[0].bias.transpose();
  RowMatrix onehot = RowMatrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.num_classes));
  for (std::size_t i = 0; i < d.size(); ++i) onehot(static_cast<Eigen::Index>(i), d.labels[i]) = 1.0;
  const RowMatrix wf = ridge_fit(c, onehot, rows, delta);
  m.f.weight = wf.leftCols(wf.cols() - 1);
  m.f.bias = wf.col(wf.cols() - 1);
  return m;
}

}  // namespace ecbm::testing

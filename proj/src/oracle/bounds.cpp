#include <Eigen/Eigenvalues>
#include <cmath>

#include "ecbm/curvature.hpp"
#include "ecbm/errors.hpp"
#include "ecbm/losses.hpp"
#include "ecbm/oracle.hpp"

namespace ecbm {

double link_third_derivative_bound(ConceptLink link) {
  return link == ConceptLink::SigmoidBce ? 1.0 / (6.0 * std::sqrt(3.0)) : 0.0;
}

double error_bound(const BoundInputs& in) {
  if (!(in.delta > 0.0)) throw ConfigError("the error bound needs a positive regularizer");
  if (in.c_h < 0.0 || in.c_h_minus < 0.0 || in.c_l_prime < 0.0) throw ConfigError("bound constants must be non-negative");
  const double s = std::max(0.0, in.sigma_min);
  const double sp = std::max(0.0, in.sigma_prime_min);
  const double d = in.delta;
  const double grad = in.c_l_prime * static_cast<double>(in.multiplicity);
  const double newton = in.c_h_minus * grad * grad / (2.0 * std::pow(sp + d, 3));
  const double swap = std::abs((2.0 * d + s + sp) / ((d + sp) * (d + s))) * grad;
  return newton + swap;
}

namespace {

double min_eigenvalue(const Matrix& h) {
  if (h.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
  return std::max(0.0, es.eigenvalues()(0));
}

Matrix restrict(const Matrix& h, const IndexList& keep) {
  const auto m = static_cast<Eigen::Index>(keep.size());
  Matrix out(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      out(a, b) = h(static_cast<Eigen::Index>(keep[static_cast<std::size_t>(a)]),
                    static_cast<Eigen::Index>(keep[static_cast<std::size_t>(b)]));
  return out;
}

}  // namespace

BoundInputs estimate_bound_inputs(const Dataset& d, const ConceptPredictor& g, const EditRequest& r, double delta) {
  if (!g.is_linear()) throw UnsupportedError("bound constants are available for a linear concept predictor only");
  if (!(delta > 0.0)) throw ConfigError("the error bound needs a positive regularizer");
  validate(d);
  validate(r, d, g.link);
  const auto n = d.size();
  const auto k = d.num_concepts();
  const double third = link_third_derivative_bound(g.link);
  double max_cube = 0.0, sum_cube = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::pow(d.inputs.row(static_cast<Eigen::Index>(i)).squaredNorm() + 1.0, 1.5);
    max_cube = std::max(max_cube, c);
    sum_cube += c;
  }

  BoundInputs in;
  in.level = level_of(r);
  in.delta = delta;
  const auto all = TermMask::all(n, k);
  in.sigma_min = min_eigenvalue(concept_curvature(g, d.inputs, d.concepts, all, CurvatureMode::Hessian));

  if (const auto* e = std::get_if<ConceptLabelEdit>(&r)) {
    RowMatrix edited = d.concepts;
    Vector diff = Vector::Zero(static_cast<Eigen::Index>(g.layout().size));
    for (const auto& c : e->cells) {
      edited(static_cast<Eigen::Index>(c.row), static_cast<Eigen::Index>(c.concept_id)) = c.value;
      std::vector<unsigned char> one(k, 0);
      one[c.concept_id] = 1;
      const auto row = static_cast<Eigen::Index>(c.row);
      std::vector<double> t_old(d.concepts.row(row).data(), d.concepts.row(row).data() + k);
      std::vector<double> t_new = t_old;
      t_new[c.concept_id] = c.value;
      diff += concept_sample_gradient(g, d.inputs.row(row).data(), t_new.data(), one);
      diff -= concept_sample_gradient(g, d.inputs.row(row).data(), t_old.data(), one);
    }
    in.sigma_prime_min = min_eigenvalue(concept_curvature(g, d.inputs, edited, all, CurvatureMode::Hessian));
    in.c_l_prime = diff.norm();
    in.c_h = max_cube * third;
    in.c_h_minus = static_cast<double>(n * k + e->cells.size()) * in.c_h;
    in.multiplicity = 1;
  } else if (const auto* m = std::get_if<ConceptRemoval>(&r)) {
    auto kept = all;
    kept.exclude_concepts(m->concepts);
    const auto layout = g.layout();
    const auto& slot = layout.slots[0];
    IndexList frozen;
    for (auto j : m->concepts) {
      for (std::size_t c = 0; c < slot.cols; ++c) frozen.push_back(slot.weight_index(j, c));
      frozen.push_back(slot.bias_offset + j);
    }
    const Matrix h = concept_curvature(g, d.inputs, d.concepts, kept, CurvatureMode::Hessian);
    in.sigma_prime_min = min_eigenvalue(restrict(h, complement(frozen, layout.size)));
    for (auto j : m->concepts) {
      TermMask one = all;
      one.concepts.assign(k, 0);
      one.concepts[j] = 1;
      Vector grad;
      concept_objective(g, d.inputs, d.concepts, one, 0.0, &grad);
      in.c_l_prime = std::max(in.c_l_prime, grad.norm());
    }
    in.c_h = sum_cube * third;
    in.c_h_minus = static_cast<double>(k + m->concepts.size()) * in.c_h;
    in.multiplicity = m->concepts.size();
  } else {
    const auto& rows = std::get<DataRemoval>(r).rows;
    TermMask kept = all;
    kept.rows = complement(rows, n);
    in.sigma_prime_min = min_eigenvalue(concept_curvature(g, d.inputs, d.concepts, kept, CurvatureMode::Hessian));
    const std::vector<unsigned char> every(k, 1);
    for (auto i : rows) {
      const auto row = static_cast<Eigen::Index>(i);
      in.c_l_prime = std::max(
          in.c_l_prime, concept_sample_gradient(g, d.inputs.row(row).data(), d.concepts.row(row).data(), every).norm());
    }
    in.c_h = max_cube * third;
    in.c_h_minus = static_cast<double>(n + rows.size()) * in.c_h;
    in.multiplicity = rows.size();
  }
  return in;
}

}  // namespace ecbm

#pragma once

#include <cstdint>
#include <memory>

#include "ecbm/losses.hpp"
#include "ecbm/model.hpp"

namespace ecbm {

// GaussNewton is the empirical Fisher: the sum of per-sample gradient outer products.
enum class CurvatureMode { Hessian, GaussNewton, Ggn };

std::string_view to_string(CurvatureMode m);
CurvatureMode parse_curvature_mode(std::string_view s);

inline constexpr std::size_t kDenseParamCap = 2000;

// Undamped curvature of the masked concept terms. Hessian mode needs a linear g.
Matrix concept_curvature(const ConceptPredictor& g, const RowMatrix& inputs, const RowMatrix& targets,
                         const TermMask& mask, CurvatureMode mode);
// Undamped curvature of the label terms over `rows`.
Matrix label_curvature(const LabelPredictor& f, const RowMatrix& concept_batch, const std::vector<int>& labels,
                       const IndexList& rows, CurvatureMode mode);

std::uint64_t fingerprint(const Vector& theta);

// Applies an approximate inverse curvature to full-length parameter vectors.
// Frozen coordinates receive zero.
class InverseCurvature {
 public:
  virtual ~InverseCurvature() = default;
  virtual Vector apply(const Vector& v) const = 0;
  virtual std::size_t dim() const = 0;

  std::uint64_t fingerprint() const { return fingerprint_; }
  // Throws StaleOperatorError when `current` is not the parameter vector the operator was built at.
  Vector apply_checked(const Vector& v, const Vector& current) const;

 protected:
  explicit InverseCurvature(std::uint64_t fp) : fingerprint_(fp) {}
  std::uint64_t fingerprint_;
};

// Cholesky solve with (H + damping I) restricted to the free coordinates.
class DenseInverse final : public InverseCurvature {
 public:
  DenseInverse(const Matrix& h, double damping, std::uint64_t fp, IndexList free = {},
               std::size_t cap = kDenseParamCap);
  Vector apply(const Vector& v) const override;
  std::size_t dim() const override { return dim_; }
  const Matrix& damped() const { return damped_; }

 private:
  std::size_t dim_;
  IndexList free_;
  Matrix damped_;
  Eigen::LLT<Matrix> llt_;
};

// Minimum-norm solve against an explicit (possibly rank-deficient) operator.
class PseudoInverse final : public InverseCurvature {
 public:
  PseudoInverse(const Matrix& a, std::uint64_t fp);
  Vector apply(const Vector& v) const override;
  std::size_t dim() const override { return static_cast<std::size_t>(cod_.cols()); }

 private:
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod_;
};

// A with A u = w: a reflection taking u/|u| to w/|w|, scaled by |w|/|u|.
Matrix householder_estimate(const Vector& u, const Vector& w);
// argmin_A ||A U - W||_F^2 + alpha ||A||_F^2 = W (U^T U + alpha I)^{-1} U^T.
Matrix ridge_estimate(const Matrix& u, const Matrix& w, double alpha);
double ridge_stationarity_residual(const Matrix& a, const Matrix& u, const Matrix& w, double alpha);

}  // namespace ecbm

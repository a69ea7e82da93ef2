#pragma once

#include <vector>

#include "ecbm/curvature.hpp"
#include "ecbm/losses.hpp"
#include "ecbm/model.hpp"

namespace ecbm {

// Per-layer eigenvalue-corrected Kronecker factors. A layer gradient is viewed as a
// fan_out x cols matrix G (bias as the last column when present); with column-major
// vec, (omega kron gamma) vec(G) = vec(gamma G omega).
struct KroneckerFactor {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = npos;
  std::size_t samples = 0;
  Matrix omega;        // mean of homogeneous input outer products
  Matrix gamma;        // mean of pre-activation gradient outer products
  Matrix q_omega;
  Matrix q_gamma;
  Vector eig_omega;
  Vector eig_gamma;
  Matrix lambda;       // fan_out x cols corrected eigenvalues
  bool rank_deficient = false;

  std::size_t cols() const { return bias_offset == npos ? fan_in : fan_in + 1; }
  std::size_t size() const { return fan_out * cols(); }
};

std::vector<KroneckerFactor> collect_concept_factors(const ConceptPredictor& g, const RowMatrix& inputs,
                                                     const RowMatrix& targets, const TermMask& mask);
std::vector<KroneckerFactor> collect_label_factors(const LabelPredictor& f, const RowMatrix& concept_batch,
                                                   const std::vector<int>& labels, const IndexList& rows);

// Layer block of a parameter vector as a fan_out x cols matrix, and back.
Matrix layer_block(const KroneckerFactor& k, const Vector& v);
void scatter_block(const KroneckerFactor& k, const Matrix& block, Vector& v);

// fraction * mean(lambda)
double default_layer_damping(const KroneckerFactor& k, double fraction = 0.01);

// Per layer: Q_gamma [(Q_gamma^T V Q_omega) ./ (scale (lambda + lambda_l) + damping)] Q_omega^T.
Vector ekfac_apply(const std::vector<KroneckerFactor>& factors, const Vector& v, const std::vector<double>& layer_damping,
                   double scale, double damping);
// Mean-scale inverse: scale 1 and no extra damping.
Vector ekfac_ihvp(const std::vector<KroneckerFactor>& factors, const Vector& v,
                  const std::vector<double>& layer_damping);

struct KronEig {
  Vector values;   // index a * rows(gamma) + b holds eig_omega(a) * eig_gamma(b)
  Matrix vectors;  // matching columns q_omega(a) kron q_gamma(b)
};
KronEig kron_eig_check(const Matrix& omega, const Matrix& gamma);

// Edit-scale operator: (scale * Q (lambda + lambda_l) Q^T + damping)^{-1}, frozen coordinates zeroed.
class EkfacInverse final : public InverseCurvature {
 public:
  EkfacInverse(std::vector<KroneckerFactor> factors, std::vector<double> layer_damping, double scale,
               double damping, std::size_t dim, std::uint64_t fp, IndexList frozen = {});
  Vector apply(const Vector& v) const override;
  std::size_t dim() const override { return dim_; }
  const std::vector<KroneckerFactor>& factors() const { return factors_; }

 private:
  std::vector<KroneckerFactor> factors_;
  std::vector<double> layer_damping_;
  double scale_;
  double damping_;
  std::size_t dim_;
  IndexList frozen_;
};

}  // namespace ecbm

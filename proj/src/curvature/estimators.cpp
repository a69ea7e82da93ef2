#include <cmath>

#include "ecbm/curvature.hpp"
#include "ecbm/errors.hpp"

namespace ecbm {

Matrix householder_estimate(const Vector& u, const Vector& w) {
  if (u.size() != w.size()) throw DimensionError("householder vectors differ in length");
  const double nu = u.norm();
  const double nw = w.norm();
  if (!(nu > 0.0)) throw NumericalError("householder estimate needs a nonzero source vector");
  const auto n = u.size();
  if (nw == 0.0) return Matrix::Zero(n, n);
  const Vector v = u / nu - w / nw;
  const double vv = v.squaredNorm();
  Matrix a = Matrix::Identity(n, n);
  if (vv > 1e-28) a.noalias() -= (2.0 / vv) * v * v.transpose();
  return (nw / nu) * a;
}

Matrix ridge_estimate(const Matrix& u, const Matrix& w, double alpha) {
  if (u.rows() != w.rows() || u.cols() != w.cols()) throw DimensionError("ridge inputs differ in shape");
  if (!(alpha > 0.0)) throw ConfigError("ridge alpha must be positive");
  Matrix gram = u.transpose() * u;
  gram.diagonal().array() += alpha;
  return w * gram.ldlt().solve(u.transpose());
}

double ridge_stationarity_residual(const Matrix& a, const Matrix& u, const Matrix& w, double alpha) {
  return ((a * u - w) * u.transpose() + alpha * a).norm();
}

}  // namespace ecbm

#pragma once

#include "ecbm/ekfac.hpp"

namespace ecbm::testing {

// Parameter index of entry `e` of the column-major vec of a layer block.
inline std::size_t param_index(const KroneckerFactor& k, std::size_t e) {
  const auto o = e % k.fan_out;
  const auto c = e / k.fan_out;
  return c == k.fan_in ? k.bias_offset + o : k.weight_offset + o * k.fan_in + c;
}

inline Matrix restrict_to_layer(const Matrix& full, const KroneckerFactor& k) {
  const auto m = static_cast<Eigen::Index>(k.size());
  Matrix out(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      out(a, b) = full(static_cast<Eigen::Index>(param_index(k, static_cast<std::size_t>(a))),
                       static_cast<Eigen::Index>(param_index(k, static_cast<std::size_t>(b))));
  return out;
}

inline Vector layer_vec(const KroneckerFactor& k, const Vector& v) {
  Vector out(static_cast<Eigen::Index>(k.size()));
  for (std::size_t e = 0; e < k.size(); ++e)
    out(static_cast<Eigen::Index>(e)) = v(static_cast<Eigen::Index>(param_index(k, e)));
  return out;
}

// Corrected eigenvalues in the column order of kron_eig_check.
inline Vector lambda_vec(const KroneckerFactor& k) {
  Vector out(k.lambda.size());
  for (Eigen::Index a = 0; a < k.lambda.cols(); ++a)
    for (Eigen::Index b = 0; b < k.lambda.rows(); ++b) out(a * k.lambda.rows() + b) = k.lambda(b, a);
  return out;
}

}  // namespace ecbm::testing

#pragma once

#include <functional>
#include <random>

#include "ecbm/model.hpp"

namespace ecbm::testing {

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = scale * standard_normal(rng);
  return v;
}

inline RowMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  RowMatrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scale * standard_normal(rng);
  return m;
}

// Small dataset with binary concepts and labels from a fixed linear rule.
inline Dataset random_dataset(std::size_t n, std::size_t di, std::size_t k, std::size_t d_o, std::uint64_t seed,
                              bool binary_concepts = true) {
  std::mt19937_64 rng(seed);
  Dataset d;
  d.inputs = random_matrix(n, di, rng);
  const RowMatrix wc = random_matrix(k, di, rng);
  const RowMatrix wy = random_matrix(d_o, k, rng);
  d.concepts.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < d.concepts.rows(); ++i) {
    const Vector z = wc * d.inputs.row(i).transpose();
    for (Eigen::Index j = 0; j < z.size(); ++j)
      d.concepts(i, j) = binary_concepts ? (z(j) > 0.0 ? 1.0 : 0.0) : z(j) + 0.3 * standard_normal(rng);
  }
  d.num_classes = d_o;
  for (Eigen::Index i = 0; i < d.concepts.rows(); ++i) {
    const Vector s = wy * d.concepts.row(i).transpose();
    Eigen::Index best = 0;
    s.maxCoeff(&best);
    d.labels.push_back(static_cast<int>(best));
  }
  for (std::size_t j = 0; j < k; ++j) d.concept_names.push_back("c" + std::to_string(j));
  return d;
}

// Central differences of a scalar function.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& fn, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  Vector y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    y(i) = x(i) + h;
    const double up = fn(y);
    y(i) = x(i) - h;
    const double down = fn(y);
    y(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Vector& a, const Vector& b) {
  const double scale = std::max(b.norm(), 1e-12);
  return (a - b).norm() / scale;
}

}  // namespace ecbm::testing

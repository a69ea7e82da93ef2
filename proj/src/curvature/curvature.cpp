#include "ecbm/curvature.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "ecbm/errors.hpp"
#include "ecbm/simd/kernels.hpp"

namespace ecbm {

std::string_view to_string(CurvatureMode m) {
  switch (m) {
    case CurvatureMode::Hessian:
      return "hessian";
    case CurvatureMode::GaussNewton:
      return "gauss-newton";
    case CurvatureMode::Ggn:
      return "ggn";
  }
  return "?";
}

CurvatureMode parse_curvature_mode(std::string_view s) {
  if (s == "hessian") return CurvatureMode::Hessian;
  if (s == "gauss-newton") return CurvatureMode::GaussNewton;
  if (s == "ggn") return CurvatureMode::Ggn;
  throw ConfigError("unknown curvature mode: " + std::string(s));
}

namespace {

void check_cap(std::size_t p) {
  if (p > kDenseParamCap)
    throw UnsupportedError("dense curvature limited to " + std::to_string(kDenseParamCap) +
                           " parameters; use the ekfac backend");
}

}  // namespace

Matrix concept_curvature(const ConceptPredictor& g, const RowMatrix& inputs, const RowMatrix& targets,
                         const TermMask& mask, CurvatureMode mode) {
  const auto layout = g.layout();
  const auto p = layout.size;
  check_cap(p);
  const auto k = g.num_concepts();
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  if (mode == CurvatureMode::GaussNewton) {
    for (auto i : mask.rows) {
      const auto r = static_cast<Eigen::Index>(i);
      const Vector grad = concept_sample_gradient(g, inputs.row(r).data(), targets.row(r).data(), mask.concepts);
      simd::ger(1.0, grad.data(), grad.data(), h.data(), p, p);
    }
    return h;
  }
  if (mode == CurvatureMode::Ggn) {
    ForwardCache cache;
    std::vector<Vector> deltas;
    Vector unit = Vector::Zero(static_cast<Eigen::Index>(k));
    Vector v(static_cast<Eigen::Index>(p));
    for (auto i : mask.rows) {
      forward(g, inputs.row(static_cast<Eigen::Index>(i)).data(), cache);
      const Vector& z = cache.pre.back();
      for (std::size_t j = 0; j < k; ++j) {
        if (!mask.concepts[j]) continue;
        const double c = link_curv(g.link, z(static_cast<Eigen::Index>(j)));
        unit.setZero();
        unit(static_cast<Eigen::Index>(j)) = std::sqrt(c);
        backward(g, cache, unit, deltas);
        v.setZero();
        accumulate_layer_gradients(layout, cache, deltas, 1.0, v.data());
        simd::ger(1.0, v.data(), v.data(), h.data(), p, p);
      }
    }
    return h;
  }
  if (!g.is_linear())
    throw UnsupportedError("exact hessian is available for a linear concept predictor only; use gauss-newton");
  const auto& slot = layout.slots[0];
  const auto di = g.input_dim();
  Vector xh(static_cast<Eigen::Index>(di + 1));
  for (auto i : mask.rows) {
    const auto r = static_cast<Eigen::Index>(i);
    xh.head(static_cast<Eigen::Index>(di)) = inputs.row(r).transpose();
    xh(static_cast<Eigen::Index>(di)) = 1.0;
    const Vector z = concept_logits(g, inputs.row(r).data());
    for (std::size_t j = 0; j < k; ++j) {
      if (!mask.concepts[j]) continue;
      const double c = link_curv(g.link, z(static_cast<Eigen::Index>(j)));
      const auto w0 = static_cast<Eigen::Index>(slot.weight_index(j, 0));
      const auto b0 = static_cast<Eigen::Index>(slot.bias_offset + j);
      const auto dn = static_cast<Eigen::Index>(di);
      h.block(w0, w0, dn, dn).noalias() += c * xh.head(dn) * xh.head(dn).transpose();
      h.block(w0, b0, dn, 1) += c * xh.head(dn);
      h.block(b0, w0, 1, dn) += c * xh.head(dn).transpose();
      h(b0, b0) += c;
    }
  }
  return h;
}

Matrix label_curvature(const LabelPredictor& f, const RowMatrix& concept_batch, const std::vector<int>& labels,
                       const IndexList& rows, CurvatureMode mode) {
  const auto p = f.layout().size;
  check_cap(p);
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  Vector dz;
  Matrix hz;
  for (auto i : rows) {
    const double* c = concept_batch.row(static_cast<Eigen::Index>(i)).data();
    if (mode == CurvatureMode::GaussNewton) {
      const Vector grad = label_sample_gradient(f, c, labels[i]);
      simd::ger(1.0, grad.data(), grad.data(), h.data(), p, p);
    } else {
      label_output_derivatives(f, label_logits(f, c), labels[i], dz, &hz);
      const Matrix j = label_jacobian(f, c);
      h.noalias() += j.transpose() * hz * j;
    }
  }
  return h;
}

std::uint64_t fingerprint(const Vector& theta) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    std::uint64_t bits = 0;
    const double v = theta(i);
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h ^ static_cast<std::uint64_t>(theta.size());
}

Vector InverseCurvature::apply_checked(const Vector& v, const Vector& current) const {
  if (ecbm::fingerprint(current) != fingerprint_)
    throw StaleOperatorError("inverse curvature was built for different parameters");
  return apply(v);
}

DenseInverse::DenseInverse(const Matrix& h, double damping, std::uint64_t fp, IndexList free, std::size_t cap)
    : InverseCurvature(fp), dim_(static_cast<std::size_t>(h.rows())), free_(std::move(free)) {
  if (h.rows() != h.cols()) throw DimensionError("curvature must be square");
  if (damping < 0.0) throw ConfigError("damping must be non-negative");
  if (free_.empty()) free_ = all_indices(dim_);
  if (free_.size() > cap) throw UnsupportedError("dense curvature exceeds the parameter cap");
  const auto m = static_cast<Eigen::Index>(free_.size());
  damped_.resize(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      damped_(a, b) = h(static_cast<Eigen::Index>(free_[static_cast<std::size_t>(a)]),
                        static_cast<Eigen::Index>(free_[static_cast<std::size_t>(b)]));
  damped_ = 0.5 * (damped_ + damped_.transpose()).eval();
  damped_.diagonal().array() += damping;
  llt_.compute(damped_);
  if (llt_.info() != Eigen::Success) throw NotPositiveDefiniteError("damped curvature is not positive definite");
  if (llt_.rcond() < 1e-15) throw NotPositiveDefiniteError("damped curvature is numerically singular");
}

Vector DenseInverse::apply(const Vector& v) const {
  if (static_cast<std::size_t>(v.size()) != dim_) throw DimensionError("vector length does not match curvature");
  const auto m = static_cast<Eigen::Index>(free_.size());
  Vector sub(m);
  for (Eigen::Index a = 0; a < m; ++a) sub(a) = v(static_cast<Eigen::Index>(free_[static_cast<std::size_t>(a)]));
  const Vector sol = llt_.solve(sub);
  Vector out = Vector::Zero(v.size());
  for (Eigen::Index a = 0; a < m; ++a) out(static_cast<Eigen::Index>(free_[static_cast<std::size_t>(a)])) = sol(a);
  return out;
}

PseudoInverse::PseudoInverse(const Matrix& a, std::uint64_t fp) : InverseCurvature(fp) {
  if (a.rows() != a.cols()) throw DimensionError("operator must be square");
  cod_.compute(a);
}

Vector PseudoInverse::apply(const Vector& v) const {
  if (v.size() != cod_.rows()) throw DimensionError("vector length does not match operator");
  return cod_.solve(v);
}

}  // namespace ecbm

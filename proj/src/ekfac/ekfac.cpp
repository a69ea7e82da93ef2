#include "ecbm/ekfac.hpp"

#include <Eigen/Eigenvalues>

#include "ecbm/errors.hpp"
#include "ecbm/simd/kernels.hpp"

namespace ecbm {

namespace {

struct LayerSamples {
  std::vector<Vector> inputs;  // homogeneous when the layer has a bias
  std::vector<Vector> deltas;
};

void eig(const Matrix& m, Matrix& q, Vector& values) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  q = es.eigenvectors();
  values = es.eigenvalues();
}

void finish(KroneckerFactor& k, const LayerSamples& s) {
  const auto n = s.inputs.size();
  if (n == 0) throw DimensionError("ekfac needs at least one sample");
  k.samples = n;
  const auto cols = static_cast<Eigen::Index>(k.cols());
  const auto outs = static_cast<Eigen::Index>(k.fan_out);
  RowMatrix omega = RowMatrix::Zero(cols, cols);
  RowMatrix gamma = RowMatrix::Zero(outs, outs);
  for (std::size_t j = 0; j < n; ++j) {
    simd::ger(1.0, s.inputs[j].data(), s.inputs[j].data(), omega.data(), k.cols(), k.cols());
    simd::ger(1.0, s.deltas[j].data(), s.deltas[j].data(), gamma.data(), k.fan_out, k.fan_out);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  k.omega = omega * inv_n;
  k.gamma = gamma * inv_n;
  eig(k.omega, k.q_omega, k.eig_omega);
  eig(k.gamma, k.q_gamma, k.eig_gamma);
  const double tol = 1e-12;
  k.rank_deficient = k.eig_omega.minCoeff() <= tol * std::max(1.0, k.eig_omega.maxCoeff()) ||
                     k.eig_gamma.minCoeff() <= tol * std::max(1.0, k.eig_gamma.maxCoeff());
  RowMatrix lambda = RowMatrix::Zero(outs, cols);
  Vector pg(outs), pa(cols);
  for (std::size_t j = 0; j < n; ++j) {
    pg.noalias() = k.q_gamma.transpose() * s.deltas[j];
    pa.noalias() = k.q_omega.transpose() * s.inputs[j];
    pg = pg.array().square();
    pa = pa.array().square();
    simd::ger(inv_n, pg.data(), pa.data(), lambda.data(), k.fan_out, k.cols());
  }
  k.lambda = lambda;
}

Vector homogeneous(const Vector& a, bool bias) {
  if (!bias) return a;
  Vector h(a.size() + 1);
  h.head(a.size()) = a;
  h(a.size()) = 1.0;
  return h;
}

}  // namespace

std::vector<KroneckerFactor> collect_concept_factors(const ConceptPredictor& g, const RowMatrix& inputs,
                                                     const RowMatrix& targets, const TermMask& mask) {
  const auto layout = g.layout();
  const auto layers = g.layers.size();
  std::vector<LayerSamples> samples(layers);
  ForwardCache cache;
  std::vector<Vector> deltas;
  Vector out_delta(static_cast<Eigen::Index>(g.num_concepts()));
  for (auto i : mask.rows) {
    const auto r = static_cast<Eigen::Index>(i);
    forward(g, inputs.row(r).data(), cache);
    const auto& z = cache.pre.back();
    for (Eigen::Index j = 0; j < z.size(); ++j)
      out_delta(j) = mask.concepts[static_cast<std::size_t>(j)] ? link_grad(g.link, z(j), targets(r, j)) : 0.0;
    backward(g, cache, out_delta, deltas);
    for (std::size_t l = 0; l < layers; ++l) {
      samples[l].inputs.push_back(homogeneous(cache.inputs[l], true));
      samples[l].deltas.push_back(deltas[l]);
    }
  }
  std::vector<KroneckerFactor> out(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& slot = layout.slots[l];
    out[l].fan_in = slot.cols;
    out[l].fan_out = slot.rows;
    out[l].weight_offset = slot.weight_offset;
    out[l].bias_offset = slot.bias_offset;
    finish(out[l], samples[l]);
  }
  return out;
}

std::vector<KroneckerFactor> collect_label_factors(const LabelPredictor& f, const RowMatrix& concept_batch,
                                                   const std::vector<int>& labels, const IndexList& rows) {
  const auto layout = f.layout();
  const auto& slot = layout.slots[0];
  LayerSamples s;
  Vector dz;
  for (auto i : rows) {
    const auto r = static_cast<Eigen::Index>(i);
    const Vector c = concept_batch.row(r).transpose();
    label_output_derivatives(f, label_logits(f, c.data()), labels[i], dz, nullptr);
    s.inputs.push_back(homogeneous(c, f.has_bias));
    s.deltas.push_back(dz);
  }
  KroneckerFactor k;
  k.fan_in = slot.cols;
  k.fan_out = slot.rows;
  k.weight_offset = slot.weight_offset;
  k.bias_offset = slot.bias_offset;
  finish(k, s);
  return {k};
}

Matrix layer_block(const KroneckerFactor& k, const Vector& v) {
  Matrix b(static_cast<Eigen::Index>(k.fan_out), static_cast<Eigen::Index>(k.cols()));
  for (std::size_t o = 0; o < k.fan_out; ++o) {
    const auto r = static_cast<Eigen::Index>(o);
    for (std::size_t c = 0; c < k.fan_in; ++c)
      b(r, static_cast<Eigen::Index>(c)) = v(static_cast<Eigen::Index>(k.weight_offset + o * k.fan_in + c));
    if (k.bias_offset != npos) b(r, static_cast<Eigen::Index>(k.fan_in)) = v(static_cast<Eigen::Index>(k.bias_offset + o));
  }
  return b;
}

void scatter_block(const KroneckerFactor& k, const Matrix& block, Vector& v) {
  for (std::size_t o = 0; o < k.fan_out; ++o) {
    const auto r = static_cast<Eigen::Index>(o);
    for (std::size_t c = 0; c < k.fan_in; ++c)
      v(static_cast<Eigen::Index>(k.weight_offset + o * k.fan_in + c)) = block(r, static_cast<Eigen::Index>(c));
    if (k.bias_offset != npos) v(static_cast<Eigen::Index>(k.bias_offset + o)) = block(r, static_cast<Eigen::Index>(k.fan_in));
  }
}

double default_layer_damping(const KroneckerFactor& k, double fraction) { return fraction * k.lambda.mean(); }

Vector ekfac_apply(const std::vector<KroneckerFactor>& factors, const Vector& v, const std::vector<double>& layer_damping,
                   double scale, double damping) {
  if (layer_damping.size() != factors.size()) throw DimensionError("one damping value per layer is required");
  Vector out = Vector::Zero(v.size());
  for (std::size_t l = 0; l < factors.size(); ++l) {
    const auto& k = factors[l];
    const Matrix vb = layer_block(k, v);
    Matrix proj = k.q_gamma.transpose() * vb * k.q_omega;
    const Matrix denom = (scale * (k.lambda.array() + layer_damping[l]) + damping).matrix();
    if ((denom.array() <= 0.0).any()) throw NotPositiveDefiniteError("ekfac eigenvalues are not positive; add damping");
    proj = proj.cwiseQuotient(denom);
    scatter_block(k, k.q_gamma * proj * k.q_omega.transpose(), out);
  }
  return out;
}

Vector ekfac_ihvp(const std::vector<KroneckerFactor>& factors, const Vector& v,
                  const std::vector<double>& layer_damping) {
  return ekfac_apply(factors, v, layer_damping, 1.0, 0.0);
}

KronEig kron_eig_check(const Matrix& omega, const Matrix& gamma) {
  Matrix qo, qg;
  Vector eo, eg;
  eig(omega, qo, eo);
  eig(gamma, qg, eg);
  const auto a_n = omega.rows();
  const auto b_n = gamma.rows();
  KronEig out;
  out.values.resize(a_n * b_n);
  out.vectors.resize(a_n * b_n, a_n * b_n);
  for (Eigen::Index a = 0; a < a_n; ++a) {
    for (Eigen::Index b = 0; b < b_n; ++b) {
      const auto col = a * b_n + b;
      out.values(col) = eo(a) * eg(b);
      for (Eigen::Index i = 0; i < a_n; ++i) out.vectors.col(col).segment(i * b_n, b_n) = qo(i, a) * qg.col(b);
    }
  }
  return out;
}

EkfacInverse::EkfacInverse(std::vector<KroneckerFactor> factors, std::vector<double> layer_damping, double scale,
                           double damping, std::size_t dim, std::uint64_t fp, IndexList frozen)
    : InverseCurvature(fp),
      factors_(std::move(factors)),
      layer_damping_(std::move(layer_damping)),
      scale_(scale),
      damping_(damping),
      dim_(dim),
      frozen_(std::move(frozen)) {
  if (layer_damping_.size() != factors_.size()) throw DimensionError("one damping value per layer is required");
  for (std::size_t l = 0; l < factors_.size(); ++l) {
    const double floor = scale_ * (factors_[l].lambda.minCoeff() + layer_damping_[l]) + damping_;
    if (!(floor > 0.0)) throw NotPositiveDefiniteError("ekfac curvature is singular; increase damping");
  }
}

Vector EkfacInverse::apply(const Vector& v) const {
  if (static_cast<std::size_t>(v.size()) != dim_) throw DimensionError("vector length does not match curvature");
  Vector in = v;
  for (auto i : frozen_) in(static_cast<Eigen::Index>(i)) = 0.0;
  Vector out = ekfac_apply(factors_, in, layer_damping_, scale_, damping_);
  for (auto i : frozen_) out(static_cast<Eigen::Index>(i)) = 0.0;
  return out;
}

}  // namespace ecbm

#include "ecbm/losses.hpp"

#include <cmath>

#include "ecbm/errors.hpp"
#include "ecbm/simd/kernels.hpp"

namespace ecbm {

TermMask TermMask::all(std::size_t n, std::size_t k) {
  TermMask m;
  m.rows = all_indices(n);
  m.concepts.assign(k, 1);
  return m;
}

TermMask& TermMask::exclude_concepts(const IndexList& js) {
  for (auto j : js) {
    if (j >= concepts.size()) throw DimensionError("concept index out of range");
    concepts[j] = 0;
  }
  return *this;
}

void forward(const ConceptPredictor& g, const double* x, ForwardCache& cache) {
  const auto layers = g.layers.size();
  cache.inputs.resize(layers);
  cache.pre.resize(layers);
  cache.inputs[0] = Eigen::Map<const Vector>(x, static_cast<Eigen::Index>(g.input_dim()));
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& layer = g.layers[l];
    auto& pre = cache.pre[l];
    pre.resize(layer.weight.rows());
    simd::gemv(layer.weight.data(), cache.inputs[l].data(), pre.data(), layer.fan_out(), layer.fan_in());
    pre += layer.bias;
    if (l + 1 < layers) {
      cache.inputs[l + 1] = layer.activation == Activation::Tanh ? Vector(pre.array().tanh()) : pre;
    }
  }
}

Vector concept_logits(const ConceptPredictor& g, const double* x) {
  ForwardCache cache;
  forward(g, x, cache);
  return cache.pre.back();
}

double link_output(ConceptLink link, double z) {
  return link == ConceptLink::SigmoidBce ? 1.0 / (1.0 + std::exp(-z)) : z;
}

RowMatrix concept_outputs(const ConceptPredictor& g, const RowMatrix& inputs) {
  return concept_outputs(g, inputs, {});
}

RowMatrix concept_outputs(const ConceptPredictor& g, const RowMatrix& inputs, const IndexList& zero_slots) {
  if (static_cast<std::size_t>(inputs.cols()) != g.input_dim()) throw DimensionError("input width mismatch");
  RowMatrix out(inputs.rows(), static_cast<Eigen::Index>(g.num_concepts()));
  ForwardCache cache;
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    forward(g, inputs.row(i).data(), cache);
    const auto& z = cache.pre.back();
    for (Eigen::Index j = 0; j < z.size(); ++j) out(i, j) = link_output(g.link, z(j));
  }
  for (auto j : zero_slots) out.col(static_cast<Eigen::Index>(j)).setZero();
  return out;
}

void backward(const ConceptPredictor& g, const ForwardCache& cache, const Vector& out_delta,
              std::vector<Vector>& deltas) {
  const auto layers = g.layers.size();
  deltas.resize(layers);
  deltas[layers - 1] = out_delta;
  for (std::size_t l = layers - 1; l > 0; --l) {
    const auto& layer = g.layers[l];
    Vector da = Vector::Zero(static_cast<Eigen::Index>(layer.fan_in()));
    simd::gemv_t(layer.weight.data(), deltas[l].data(), da.data(), layer.fan_out(), layer.fan_in());
    if (g.layers[l - 1].activation == Activation::Tanh) {
      const auto& act = cache.inputs[l];
      da.array() *= 1.0 - act.array().square();
    }
    deltas[l - 1] = std::move(da);
  }
}

void accumulate_layer_gradients(const ParamLayout& layout, const ForwardCache& cache,
                                const std::vector<Vector>& deltas, double scale, double* grad) {
  for (std::size_t l = 0; l < layout.slots.size(); ++l) {
    const auto& s = layout.slots[l];
    simd::ger(scale, deltas[l].data(), cache.inputs[l].data(), grad + s.weight_offset, s.rows, s.cols);
    if (s.has_bias()) simd::axpy(scale, deltas[l].data(), grad + s.bias_offset, s.rows);
  }
}

double link_loss(ConceptLink link, double z, double target) {
  if (link == ConceptLink::Mse) return 0.5 * (z - target) * (z - target);
  const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - target * z;
}

double link_grad(ConceptLink link, double z, double target) {
  if (link == ConceptLink::Mse) return z - target;
  return 1.0 / (1.0 + std::exp(-z)) - target;
}

double link_curv(ConceptLink link, double z) {
  if (link == ConceptLink::Mse) return 1.0;
  const double p = 1.0 / (1.0 + std::exp(-z));
  return p * (1.0 - p);
}

double concept_objective(const ConceptPredictor& g, const RowMatrix& inputs, const RowMatrix& targets,
                         const TermMask& mask, double l2, Vector* grad) {
  const auto k = g.num_concepts();
  if (mask.concepts.size() != k || static_cast<std::size_t>(targets.cols()) != k)
    throw DimensionError("concept mask or target width mismatch");
  const auto layout = g.layout();
  const Vector theta = g.parameters();
  if (grad != nullptr) *grad = Vector::Zero(theta.size());
  double loss = 0.0;
  ForwardCache cache;
  std::vector<Vector> deltas;
  Vector out_delta(static_cast<Eigen::Index>(k));
  for (auto i : mask.rows) {
    if (i >= static_cast<std::size_t>(inputs.rows())) throw DimensionError("row index out of range");
    const auto r = static_cast<Eigen::Index>(i);
    forward(g, inputs.row(r).data(), cache);
    const auto& z = cache.pre.back();
    for (std::size_t j = 0; j < k; ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      if (mask.concepts[j]) {
        loss += link_loss(g.link, z(c), targets(r, c));
        out_delta(c) = link_grad(g.link, z(c), targets(r, c));
      } else {
        out_delta(c) = 0.0;
      }
    }
    if (grad != nullptr) {
      backward(g, cache, out_delta, deltas);
      accumulate_layer_gradients(layout, cache, deltas, 1.0, grad->data());
    }
  }
  loss += 0.5 * l2 * theta.squaredNorm();
  if (grad != nullptr) *grad += l2 * theta;
  return loss;
}

Vector concept_sample_gradient(const ConceptPredictor& g, const double* x, const double* target,
                               const std::vector<unsigned char>& concepts) {
  const auto layout = g.layout();
  ForwardCache cache;
  forward(g, x, cache);
  const auto& z = cache.pre.back();
  Vector out_delta(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j)
    out_delta(j) = concepts[static_cast<std::size_t>(j)] ? link_grad(g.link, z(j), target[j]) : 0.0;
  std::vector<Vector> deltas;
  backward(g, cache, out_delta, deltas);
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(layout.size));
  accumulate_layer_gradients(layout, cache, deltas, 1.0, grad.data());
  return grad;
}

Vector label_logits(const LabelPredictor& f, const double* c) {
  Vector z(f.weight.rows());
  simd::gemv(f.weight.data(), c, z.data(), f.num_classes(), f.num_concepts());
  if (f.has_bias) z += f.bias;
  return z;
}

namespace {

Vector softmax(const Vector& z) {
  const double m = z.maxCoeff();
  Vector p = (z.array() - m).exp();
  return p / p.sum();
}

double label_loss_from_logits(const LabelPredictor& f, const Vector& z, int y) {
  if (f.loss == LabelLoss::SoftmaxCe) {
    const double m = z.maxCoeff();
    return m + std::log((z.array() - m).exp().sum()) - z(y);
  }
  Vector r = z;
  r(y) -= 1.0;
  return 0.5 * r.squaredNorm();
}

}  // namespace

double label_sample_loss(const LabelPredictor& f, const double* c, int y) {
  return label_loss_from_logits(f, label_logits(f, c), y);
}

void label_output_derivatives(const LabelPredictor& f, const Vector& logits, int y, Vector& grad, Matrix* hess) {
  if (f.loss == LabelLoss::SoftmaxCe) {
    const Vector p = softmax(logits);
    grad = p;
    grad(y) -= 1.0;
    if (hess != nullptr) {
      *hess = -p * p.transpose();
      hess->diagonal() += p;
    }
  } else {
    grad = logits;
    grad(y) -= 1.0;
    if (hess != nullptr) *hess = Matrix::Identity(logits.size(), logits.size());
  }
}

double label_objective(const LabelPredictor& f, const RowMatrix& concept_batch, const std::vector<int>& labels,
                       const IndexList& rows, double l2, Vector* grad) {
  if (static_cast<std::size_t>(concept_batch.cols()) != f.num_concepts())
    throw DimensionError("concept batch width does not match label predictor");
  const auto layout = f.layout();
  const auto& slot = layout.slots[0];
  const Vector theta = f.parameters();
  if (grad != nullptr) *grad = Vector::Zero(theta.size());
  double loss = 0.0;
  Vector dz;
  for (auto i : rows) {
    if (i >= labels.size()) throw DimensionError("row index out of range");
    const double* c = concept_batch.row(static_cast<Eigen::Index>(i)).data();
    const Vector z = label_logits(f, c);
    loss += label_loss_from_logits(f, z, labels[i]);
    if (grad != nullptr) {
      label_output_derivatives(f, z, labels[i], dz, nullptr);
      simd::ger(1.0, dz.data(), c, grad->data() + slot.weight_offset, slot.rows, slot.cols);
      if (slot.has_bias()) simd::axpy(1.0, dz.data(), grad->data() + slot.bias_offset, slot.rows);
    }
  }
  loss += 0.5 * l2 * theta.squaredNorm();
  if (grad != nullptr) *grad += l2 * theta;
  return loss;
}

Vector label_sample_gradient(const LabelPredictor& f, const double* c, int y) {
  const auto layout = f.layout();
  const auto& slot = layout.slots[0];
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(layout.size));
  Vector dz;
  label_output_derivatives(f, label_logits(f, c), y, dz, nullptr);
  simd::ger(1.0, dz.data(), c, grad.data() + slot.weight_offset, slot.rows, slot.cols);
  if (slot.has_bias()) simd::axpy(1.0, dz.data(), grad.data() + slot.bias_offset, slot.rows);
  return grad;
}

Matrix label_jacobian(const LabelPredictor& f, const double* c) {
  const auto layout = f.layout();
  const auto& slot = layout.slots[0];
  Matrix j = Matrix::Zero(static_cast<Eigen::Index>(slot.rows), static_cast<Eigen::Index>(layout.size));
  for (std::size_t o = 0; o < slot.rows; ++o) {
    for (std::size_t q = 0; q < slot.cols; ++q)
      j(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(slot.weight_index(o, q))) = c[q];
    if (slot.has_bias()) j(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(slot.bias_offset + o)) = 1.0;
  }
  return j;
}

std::vector<int> predict_labels(const LabelPredictor& f, const RowMatrix& concept_batch) {
  std::vector<int> out(static_cast<std::size_t>(concept_batch.rows()));
  for (Eigen::Index i = 0; i < concept_batch.rows(); ++i) {
    const Vector z = label_logits(f, concept_batch.row(i).data());
    Eigen::Index best = 0;
    z.maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict(const Cbm& m, const RowMatrix& inputs) {
  return predict_labels(m.f, concept_outputs(m.g, inputs));
}

}  // namespace ecbm

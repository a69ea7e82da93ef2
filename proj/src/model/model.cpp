#include "ecbm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ecbm/errors.hpp"

namespace ecbm {

std::string_view to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "identity"; }
std::string_view to_string(ConceptLink l) { return l == ConceptLink::SigmoidBce ? "sigmoid-bce" : "mse"; }
std::string_view to_string(LabelLoss l) { return l == LabelLoss::SoftmaxCe ? "softmax-ce" : "mse"; }

Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "identity" || s == "linear") return Activation::Identity;
  throw ConfigError("unknown activation: " + std::string(s));
}

ConceptLink parse_concept_link(std::string_view s) {
  if (s == "sigmoid-bce") return ConceptLink::SigmoidBce;
  if (s == "mse") return ConceptLink::Mse;
  throw ConfigError("unknown concept link: " + std::string(s));
}

LabelLoss parse_label_loss(std::string_view s) {
  if (s == "softmax-ce") return LabelLoss::SoftmaxCe;
  if (s == "mse") return LabelLoss::Mse;
  throw ConfigError("unknown label loss: " + std::string(s));
}

void validate(const Dataset& d) {
  const auto n = d.size();
  if (n == 0) throw DimensionError("dataset has no rows");
  if (static_cast<std::size_t>(d.concepts.rows()) != n || d.labels.size() != n)
    throw DimensionError("dataset row counts disagree");
  if (d.num_classes < 2) throw DimensionError("dataset needs at least two classes");
  if (!d.concept_names.empty() && d.concept_names.size() != d.num_concepts())
    throw DimensionError("concept name count does not match concept columns");
  for (int y : d.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= d.num_classes) throw DimensionError("label out of range");
  if (!d.inputs.allFinite() || !d.concepts.allFinite()) throw DimensionError("dataset contains non-finite values");
}

IndexList all_indices(std::size_t n) {
  IndexList out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  return out;
}

IndexList complement(const IndexList& removed, std::size_t n) {
  std::vector<unsigned char> drop(n, 0);
  for (auto i : removed)
    if (i < n) drop[i] = 1;
  IndexList out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!drop[i]) out.push_back(i);
  return out;
}

IndexList normalize_indices(IndexList idx, std::size_t n, std::string_view what) {
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  if (!idx.empty() && idx.back() >= n) throw DimensionError(std::string(what) + " index out of range");
  return idx;
}

Dataset select_rows(const Dataset& d, const IndexList& rows) {
  Dataset out;
  out.num_classes = d.num_classes;
  out.concept_names = d.concept_names;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), d.inputs.cols());
  out.concepts.resize(static_cast<Eigen::Index>(rows.size()), d.concepts.cols());
  out.labels.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= d.size()) throw DimensionError("row index out of range");
    const auto src = static_cast<Eigen::Index>(rows[r]);
    out.inputs.row(static_cast<Eigen::Index>(r)) = d.inputs.row(src);
    out.concepts.row(static_cast<Eigen::Index>(r)) = d.concepts.row(src);
    out.labels[r] = d.labels[rows[r]];
  }
  return out;
}

Dataset drop_rows(const Dataset& d, const IndexList& rows) {
  return select_rows(d, complement(normalize_indices(rows, d.size(), "row"), d.size()));
}

Dataset drop_concepts(const Dataset& d, const IndexList& concepts) {
  const auto keep = complement(normalize_indices(concepts, d.num_concepts(), "concept"), d.num_concepts());
  Dataset out;
  out.inputs = d.inputs;
  out.labels = d.labels;
  out.num_classes = d.num_classes;
  out.concepts.resize(d.concepts.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.concepts.col(static_cast<Eigen::Index>(c)) = d.concepts.col(static_cast<Eigen::Index>(keep[c]));
    if (!d.concept_names.empty()) out.concept_names.push_back(d.concept_names[keep[c]]);
  }
  return out;
}

namespace {

void write_layer(const DenseLayer& l, bool with_bias, Vector& theta, std::size_t& at) {
  const auto w = l.weight.size();
  theta.segment(static_cast<Eigen::Index>(at), w) = Eigen::Map<const Vector>(l.weight.data(), w);
  at += static_cast<std::size_t>(w);
  if (with_bias) {
    theta.segment(static_cast<Eigen::Index>(at), l.bias.size()) = l.bias;
    at += static_cast<std::size_t>(l.bias.size());
  }
}

void read_layer(DenseLayer& l, bool with_bias, const Vector& theta, std::size_t& at) {
  const auto w = l.weight.size();
  Eigen::Map<Vector>(l.weight.data(), w) = theta.segment(static_cast<Eigen::Index>(at), w);
  at += static_cast<std::size_t>(w);
  if (with_bias) {
    l.bias = theta.segment(static_cast<Eigen::Index>(at), l.bias.size());
    at += static_cast<std::size_t>(l.bias.size());
  }
}

LayerSlot slot_for(std::size_t& at, std::size_t rows, std::size_t cols, bool bias) {
  LayerSlot s;
  s.weight_offset = at;
  s.rows = rows;
  s.cols = cols;
  at += rows * cols;
  if (bias) {
    s.bias_offset = at;
    at += rows;
  }
  return s;
}

}  // namespace

ParamLayout ConceptPredictor::layout() const {
  ParamLayout p;
  std::size_t at = 0;
  for (const auto& l : layers) p.slots.push_back(slot_for(at, l.fan_out(), l.fan_in(), true));
  p.size = at;
  return p;
}

Vector ConceptPredictor::parameters() const {
  Vector theta(static_cast<Eigen::Index>(layout().size));
  std::size_t at = 0;
  for (const auto& l : layers) write_layer(l, true, theta, at);
  return theta;
}

void ConceptPredictor::set_parameters(const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != layout().size) throw DimensionError("concept parameter size mismatch");
  std::size_t at = 0;
  for (auto& l : layers) read_layer(l, true, theta, at);
}

ParamLayout LabelPredictor::layout() const {
  ParamLayout p;
  std::size_t at = 0;
  p.slots.push_back(slot_for(at, num_classes(), num_concepts(), has_bias));
  p.size = at;
  return p;
}

Vector LabelPredictor::parameters() const {
  Vector theta(static_cast<Eigen::Index>(layout().size));
  const auto w = weight.size();
  theta.head(w) = Eigen::Map<const Vector>(weight.data(), w);
  if (has_bias) theta.tail(bias.size()) = bias;
  return theta;
}

void LabelPredictor::set_parameters(const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != layout().size) throw DimensionError("label parameter size mismatch");
  const auto w = weight.size();
  Eigen::Map<Vector>(weight.data(), w) = theta.head(w);
  if (has_bias) bias = theta.tail(bias.size());
}

void validate(const Cbm& m) {
  const auto& ls = m.g.layers;
  if (ls.empty()) throw DimensionError("concept predictor has no layers");
  for (std::size_t i = 0; i < ls.size(); ++i) {
    if (ls[i].weight.rows() == 0 || ls[i].weight.cols() == 0) throw DimensionError("empty layer");
    if (ls[i].bias.size() != ls[i].weight.rows()) throw DimensionError("bias length does not match layer");
    if (i > 0 && ls[i].fan_in() != ls[i - 1].fan_out()) throw DimensionError("layer widths do not chain");
  }
  if (ls.back().activation != Activation::Identity) throw DimensionError("concept output layer must be identity");
  if (m.f.num_concepts() != m.g.num_concepts())
    throw DimensionError("label predictor width does not match concept count");
  if (m.f.num_classes() < 2) throw DimensionError("label predictor needs at least two classes");
  if (m.f.has_bias && static_cast<std::size_t>(m.f.bias.size()) != m.f.num_classes())
    throw DimensionError("label bias length mismatch");
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

DenseLayer xavier_layer(std::size_t fan_in, std::size_t fan_out, Activation act, std::mt19937_64& rng) {
  DenseLayer l;
  l.activation = act;
  l.weight.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = (2.0 * uniform01(rng) - 1.0) * a;
  l.bias = Vector::Zero(static_cast<Eigen::Index>(fan_out));
  return l;
}

}  // namespace

ConceptPredictor init_concept_predictor(std::size_t input_dim, std::size_t num_concepts, const CbmSpec& spec,
                                        std::uint64_t seed) {
  if (input_dim == 0 || num_concepts == 0) throw DimensionError("concept predictor needs positive dimensions");
  std::mt19937_64 rng(seed);
  ConceptPredictor g;
  g.link = spec.link;
  std::size_t in = input_dim;
  for (auto h : spec.hidden) {
    if (h == 0) throw DimensionError("hidden width must be positive");
    g.layers.push_back(xavier_layer(in, h, Activation::Tanh, rng));
    in = h;
  }
  g.layers.push_back(xavier_layer(in, num_concepts, Activation::Identity, rng));
  return g;
}

LabelPredictor init_label_predictor(std::size_t num_concepts, std::size_t num_classes, const CbmSpec& spec,
                                    std::uint64_t seed) {
  if (num_concepts == 0 || num_classes < 2) throw DimensionError("label predictor needs k >= 1 and d_o >= 2");
  std::mt19937_64 rng(seed);
  const auto l = xavier_layer(num_concepts, num_classes, Activation::Identity, rng);
  LabelPredictor f;
  f.weight = l.weight;
  f.has_bias = spec.label_bias;
  if (f.has_bias) f.bias = l.bias;
  f.loss = spec.label_loss;
  return f;
}

CbmSpec spec_of(const Cbm& m) {
  CbmSpec s;
  for (std::size_t i = 0; i + 1 < m.g.layers.size(); ++i) s.hidden.push_back(m.g.layers[i].fan_out());
  s.link = m.g.link;
  s.label_loss = m.f.loss;
  s.label_bias = m.f.has_bias;
  return s;
}

Cbm delete_concepts(const Cbm& m, const IndexList& concepts) {
  const auto k = m.g.num_concepts();
  const auto keep = complement(normalize_indices(concepts, k, "concept"), k);
  if (keep.empty()) throw DimensionError("cannot remove every concept");
  Cbm out = m;
  auto& last = out.g.layers.back();
  const auto& src = m.g.layers.back();
  last.weight.resize(static_cast<Eigen::Index>(keep.size()), src.weight.cols());
  last.bias.resize(static_cast<Eigen::Index>(keep.size()));
  out.f.weight.resize(m.f.weight.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto s = static_cast<Eigen::Index>(keep[r]);
    const auto d = static_cast<Eigen::Index>(r);
    last.weight.row(d) = src.weight.row(s);
    last.bias(d) = src.bias(s);
    out.f.weight.col(d) = m.f.weight.col(s);
  }
  return out;
}

Cbm insert_zero_concepts(const Cbm& m, const IndexList& concepts) {
  const auto k_small = m.g.num_concepts();
  const auto k = k_small + concepts.size();
  const auto added = normalize_indices(concepts, k, "concept");
  if (added.size() != concepts.size()) throw DimensionError("duplicate concept index");
  const auto keep = complement(added, k);
  Cbm out = m;
  auto& last = out.g.layers.back();
  const auto& src = m.g.layers.back();
  last.weight = RowMatrix::Zero(static_cast<Eigen::Index>(k), src.weight.cols());
  last.bias = Vector::Zero(static_cast<Eigen::Index>(k));
  out.f.weight = RowMatrix::Zero(m.f.weight.rows(), static_cast<Eigen::Index>(k));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto d = static_cast<Eigen::Index>(keep[r]);
    const auto s = static_cast<Eigen::Index>(r);
    last.weight.row(d) = src.weight.row(s);
    last.bias(d) = src.bias(s);
    out.f.weight.col(d) = m.f.weight.col(s);
  }
  return out;
}

}  // namespace ecbm

#include <chrono>
#include <map>

#include "ecbm/editor.hpp"
#include "ecbm/ekfac.hpp"
#include "ecbm/errors.hpp"
#include "ecbm/losses.hpp"

namespace ecbm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::unique_ptr<InverseCurvature> concept_inverse(const ConceptPredictor& g, const RowMatrix& inputs,
                                                  const RowMatrix& targets, const TermMask& mask,
                                                  const EditOptions& opt, const IndexList& frozen = {}) {
  const Vector theta = g.parameters();
  const auto p = static_cast<std::size_t>(theta.size());
  const auto fp = fingerprint(theta);
  if (opt.backend == Backend::Ekfac) {
    auto factors = collect_concept_factors(g, inputs, targets, mask);
    std::vector<double> damp;
    for (const auto& k : factors) damp.push_back(default_layer_damping(k, opt.ekfac_damping_fraction));
    return std::make_unique<EkfacInverse>(std::move(factors), std::move(damp), static_cast<double>(mask.rows.size()),
                                          opt.l2_reg, p, fp, frozen);
  }
  const auto mode = opt.concept_mode.value_or(g.is_linear() ? CurvatureMode::Hessian : CurvatureMode::GaussNewton);
  const Matrix h = concept_curvature(g, inputs, targets, mask, mode);
  return std::make_unique<DenseInverse>(h, opt.l2_reg, fp, frozen.empty() ? IndexList{} : complement(frozen, p));
}

std::unique_ptr<InverseCurvature> label_inverse(const LabelPredictor& f, const RowMatrix& batch,
                                                const std::vector<int>& labels, const IndexList& rows,
                                                const EditOptions& opt, const IndexList& frozen = {}) {
  const Vector theta = f.parameters();
  const auto p = static_cast<std::size_t>(theta.size());
  const auto fp = fingerprint(theta);
  if (opt.ekfac_label_stage) {
    auto factors = collect_label_factors(f, batch, labels, rows);
    std::vector<double> damp{default_layer_damping(factors[0], opt.ekfac_damping_fraction)};
    return std::make_unique<EkfacInverse>(std::move(factors), std::move(damp), static_cast<double>(rows.size()),
                                          opt.l2_reg, p, fp, frozen);
  }
  const Matrix h = label_curvature(f, batch, labels, rows, opt.label_mode);
  return std::make_unique<DenseInverse>(h, opt.l2_reg, fp, frozen.empty() ? IndexList{} : complement(frozen, p));
}

Vector label_gradient_sum(const LabelPredictor& f, const RowMatrix& batch, const std::vector<int>& labels,
                          const IndexList& rows) {
  Vector grad;
  label_objective(f, batch, labels, rows, 0.0, &grad);
  return grad;
}

void zero_coords(Vector& v, const IndexList& idx) {
  for (auto i : idx) v(static_cast<Eigen::Index>(i)) = 0.0;
}

EditResult edit_concept_labels(const Cbm& m, const Dataset& d, const ConceptLabelEdit& e, const EditOptions& opt) {
  EditResult out{m, {}};
  out.report.level = EditLevel::ConceptLabel;
  const auto n = d.size();
  const auto k = d.num_concepts();
  const Vector g_hat = m.g.parameters();

  auto t0 = Clock::now();
  RowMatrix edited = d.concepts;
  std::map<std::size_t, std::vector<unsigned char>> touched;
  for (const auto& c : e.cells) {
    edited(static_cast<Eigen::Index>(c.row), static_cast<Eigen::Index>(c.concept_id)) = c.value;
    auto& mask = touched[c.row];
    if (mask.empty()) mask.assign(k, 0);
    mask[c.concept_id] = 1;
  }
  Vector diff = Vector::Zero(g_hat.size());
  for (const auto& [row, mask] : touched) {
    const auto r = static_cast<Eigen::Index>(row);
    diff += concept_sample_gradient(m.g, d.inputs.row(r).data(), edited.row(r).data(), mask);
    diff -= concept_sample_gradient(m.g, d.inputs.row(r).data(), d.concepts.row(r).data(), mask);
  }
  const auto mask_all = TermMask::all(n, k);
  const RowMatrix& site_targets = opt.site == CurvatureSite::Target ? edited : d.concepts;
  const auto hg = concept_inverse(m.g, d.inputs, site_targets, mask_all, opt);
  const Vector g_bar = g_hat - hg->apply_checked(diff, g_hat);
  out.model.g.set_parameters(g_bar);
  out.report.concept_seconds = seconds_since(t0);

  t0 = Clock::now();
  const auto rows = all_indices(n);
  const RowMatrix c_old = concept_outputs(m.g, d.inputs);
  const RowMatrix c_new = concept_outputs(out.model.g, d.inputs);
  const Vector f_hat = m.f.parameters();
  const Vector diff2 =
      label_gradient_sum(m.f, c_new, d.labels, rows) - label_gradient_sum(m.f, c_old, d.labels, rows);
  const auto hf = label_inverse(m.f, opt.site == CurvatureSite::Target ? c_new : c_old, d.labels, rows, opt);
  const Vector f_bar = f_hat - hf->apply_checked(diff2, f_hat);
  out.model.f.set_parameters(f_bar);
  out.report.label_seconds = seconds_since(t0);
  out.report.concept_update_norm = (g_bar - g_hat).norm();
  out.report.label_update_norm = (f_bar - f_hat).norm();
  return out;
}

EditResult edit_remove_concepts(const Cbm& m, const Dataset& d, const ConceptRemoval& req, const EditOptions& opt) {
  EditResult out{m, {}};
  out.report.level = EditLevel::Concept;
  const auto removed = normalize_indices(req.concepts, d.num_concepts(), "concept");
  out.report.removed_concepts = removed;
  const auto n = d.size();
  const auto k = d.num_concepts();

  auto t0 = Clock::now();
  const auto layout = m.g.layout();
  const auto& last = layout.slots.back();
  IndexList frozen;
  for (auto j : removed) {
    for (std::size_t c = 0; c < last.cols; ++c) frozen.push_back(last.weight_index(j, c));
    frozen.push_back(last.bias_offset + j);
  }
  const Vector g_hat = m.g.parameters();
  auto kept_mask = TermMask::all(n, k);
  kept_mask.exclude_concepts(removed);
  Vector grad;
  concept_objective(m.g, d.inputs, d.concepts, kept_mask, opt.l2_reg, &grad);
  zero_coords(grad, frozen);
  const auto site_mask = opt.site == CurvatureSite::Target ? kept_mask : TermMask::all(n, k);
  const auto hg = concept_inverse(m.g, d.inputs, d.concepts, site_mask, opt, frozen);
  Vector g_bar = g_hat - hg->apply_checked(grad, g_hat);
  zero_coords(g_bar, frozen);
  ConceptPredictor g_new = m.g;
  g_new.set_parameters(g_bar);
  out.report.concept_seconds = seconds_since(t0);

  t0 = Clock::now();
  const auto rows = all_indices(n);
  const auto f_layout = m.f.layout();
  const auto& fs = f_layout.slots[0];
  IndexList f_frozen;
  for (std::size_t o = 0; o < fs.rows; ++o)
    for (auto j : removed) f_frozen.push_back(fs.weight_index(o, j));
  const RowMatrix c_new = concept_outputs(g_new, d.inputs, removed);
  const Vector f_hat = m.f.parameters();
  Vector f_grad;
  label_objective(m.f, c_new, d.labels, rows, opt.l2_reg, &f_grad);
  zero_coords(f_grad, f_frozen);
  const RowMatrix site_batch =
      opt.site == CurvatureSite::Target ? c_new : concept_outputs(m.g, d.inputs);
  const auto hf = label_inverse(m.f, site_batch, d.labels, rows, opt, f_frozen);
  Vector f_bar = f_hat - hf->apply_checked(f_grad, f_hat);
  zero_coords(f_bar, f_frozen);
  out.report.label_seconds = seconds_since(t0);

  out.report.concept_update_norm = (g_bar - g_hat).norm();
  out.report.label_update_norm = (f_bar - f_hat).norm();
  Cbm full{g_new, m.f};
  full.f.set_parameters(f_bar);
  out.model = delete_concepts(full, removed);
  return out;
}

EditResult edit_remove_data(const Cbm& m, const Dataset& d, const DataRemoval& req, const EditOptions& opt) {
  EditResult out{m, {}};
  out.report.level = EditLevel::Data;
  const auto n = d.size();
  const auto k = d.num_concepts();
  const auto removed = normalize_indices(req.rows, n, "row");
  const auto kept = complement(removed, n);
  const auto all = all_indices(n);

  auto t0 = Clock::now();
  const Vector g_hat = m.g.parameters();
  const auto full_concepts = std::vector<unsigned char>(k, 1);
  Vector diff = Vector::Zero(g_hat.size());
  for (auto r : removed) {
    const auto i = static_cast<Eigen::Index>(r);
    diff += concept_sample_gradient(m.g, d.inputs.row(i).data(), d.concepts.row(i).data(), full_concepts);
  }
  TermMask site_mask = TermMask::all(n, k);
  if (opt.site == CurvatureSite::Target) site_mask.rows = kept;
  const auto hg = concept_inverse(m.g, d.inputs, d.concepts, site_mask, opt);
  const Vector g_bar = g_hat + hg->apply_checked(diff, g_hat);
  out.model.g.set_parameters(g_bar);
  out.report.concept_seconds = seconds_since(t0);

  t0 = Clock::now();
  const RowMatrix c_hat = concept_outputs(m.g, d.inputs);
  const RowMatrix c_bar = concept_outputs(out.model.g, d.inputs);
  const Vector f_hat = m.f.parameters();
  const IndexList& f_rows = opt.site == CurvatureSite::Target ? kept : all;
  const Vector u = label_gradient_sum(m.f, c_hat, d.labels, removed);
  const auto hf = label_inverse(m.f, c_hat, d.labels, f_rows, opt);
  out.report.label_a = hf->apply_checked(u, f_hat);
  const Vector f_star = f_hat + out.report.label_a;

  LabelPredictor at_star = m.f;
  at_star.set_parameters(f_star);
  const Vector shift = label_gradient_sum(at_star, c_bar, d.labels, kept) - label_gradient_sum(at_star, c_hat, d.labels, kept);
  const auto fp_star = fingerprint(f_star);
  std::unique_ptr<InverseCurvature> hb;
  if (opt.h_tilde == HTildeMode::Recompute) {
    const RowMatrix& b_batch = opt.site == CurvatureSite::Target ? c_bar : c_hat;
    hb = label_inverse(at_star, b_batch, d.labels, kept, opt);
  } else {
    Matrix h = label_curvature(m.f, c_hat, d.labels, f_rows, opt.label_mode);
    h.diagonal().array() += opt.l2_reg;
    const Vector w = h * u;
    const Matrix est = opt.h_tilde == HTildeMode::Householder
                           ? householder_estimate(u, w)
                           : ridge_estimate(Matrix(u), Matrix(w), opt.ridge_alpha);
    hb = std::make_unique<PseudoInverse>(est, fp_star);
  }
  out.report.label_b = -hb->apply_checked(shift, f_star);
  const Vector f_bar = f_star + out.report.label_b;
  out.model.f.set_parameters(f_bar);
  out.report.label_seconds = seconds_since(t0);
  out.report.concept_update_norm = (g_bar - g_hat).norm();
  out.report.label_update_norm = (f_bar - f_hat).norm();
  return out;
}

}  // namespace

EditResult apply_edit(const Cbm& m, const Dataset& d, const EditRequest& r, const EditOptions& opt) {
  validate(m);
  validate(d);
  if (m.g.input_dim() != d.input_dim() || m.g.num_concepts() != d.num_concepts() ||
      m.f.num_classes() != d.num_classes)
    throw DimensionError("model does not match dataset dimensions");
  if (!(opt.l2_reg >= 0.0)) throw ConfigError("l2_reg must be non-negative");
  validate(r, d, m.g.link);
  if (is_empty(r)) {
    EditResult out{m, {}};
    out.report.level = level_of(r);
    out.report.noop = true;
    return out;
  }
  if (level_of(r) != EditLevel::Data && opt.h_tilde != HTildeMode::Recompute)
    throw ConfigError("householder and ridge modes apply to data-level edits only");
  switch (level_of(r)) {
    case EditLevel::ConceptLabel:
      return edit_concept_labels(m, d, std::get<ConceptLabelEdit>(r), opt);
    case EditLevel::Concept:
      return edit_remove_concepts(m, d, std::get<ConceptRemoval>(r), opt);
    case EditLevel::Data:
      return edit_remove_data(m, d, std::get<DataRemoval>(r), opt);
  }
  throw ConfigError("unknown edit level");
}

}  // namespace ecbm

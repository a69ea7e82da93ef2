#include <cmath>

#include "ecbm/errors.hpp"
#include "ecbm/harness.hpp"

namespace ecbm {

CbmSpec cbm_spec(const ScenarioConfig& c) {
  CbmSpec s;
  if (c.model == "mlp") s.hidden = c.hidden;
  s.link = c.link;
  s.label_loss = c.label_loss;
  s.label_bias = c.label_bias;
  return s;
}

EditOptions edit_options(const ScenarioConfig& c) {
  EditOptions o;
  o.backend = c.backend;
  o.l2_reg = c.training.l2_reg;
  o.h_tilde = c.h_tilde;
  o.ridge_alpha = c.ridge_alpha;
  o.site = c.site;
  o.concept_mode = c.concept_curvature;
  o.ekfac_damping_fraction = c.ekfac_damping_fraction;
  return o;
}

TrainConfig train_config(const ScenarioConfig& c, std::uint64_t seed) {
  TrainConfig t = c.training;
  t.seed = seed;
  return t;
}

SynthData synth_dataset(const ScenarioConfig& c, std::uint64_t seed) {
  validate(c);
  std::mt19937_64 rng(mix_seed(seed, 100));
  const auto di = static_cast<Eigen::Index>(c.d_i);
  const auto k = static_cast<Eigen::Index>(c.k);
  const auto d_o = static_cast<Eigen::Index>(c.d_o);
  RowMatrix wc(k, di);
  Vector bc(k);
  RowMatrix wy(d_o, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index q = 0; q < di; ++q) wc(r, q) = standard_normal(rng);
  for (Eigen::Index r = 0; r < k; ++r) bc(r) = 0.5 * standard_normal(rng);
  for (Eigen::Index r = 0; r < d_o; ++r)
    for (Eigen::Index q = 0; q < k; ++q) wy(r, q) = standard_normal(rng);

  Dataset all;
  const auto n = static_cast<Eigen::Index>(c.n);
  all.inputs.resize(n, di);
  all.concepts.resize(n, k);
  all.labels.resize(c.n);
  all.num_classes = c.d_o;
  for (std::size_t j = 0; j < c.k; ++j) all.concept_names.push_back("concept_" + std::to_string(j));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index q = 0; q < di; ++q) all.inputs(i, q) = standard_normal(rng);
    const Vector z = wc * all.inputs.row(i).transpose() + bc;
    for (Eigen::Index j = 0; j < k; ++j) all.concepts(i, j) = 1.0 / (1.0 + std::exp(-z(j))) > 0.5 ? 1.0 : 0.0;
    const Vector s = wy * (2.0 * all.concepts.row(i).transpose().array() - 1.0).matrix();
    Eigen::Index best = 0;
    s.maxCoeff(&best);
    all.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  const auto test_rows = static_cast<std::size_t>(std::llround(c.test_fraction * static_cast<double>(c.n)));
  if (test_rows == 0 || test_rows >= c.n) throw ConfigError("test split leaves an empty partition");
  const auto train_rows = c.n - test_rows;
  IndexList train_idx, test_idx;
  for (std::size_t i = 0; i < c.n; ++i) (i < train_rows ? train_idx : test_idx).push_back(i);
  return SynthData{select_rows(all, train_idx), select_rows(all, test_idx)};
}

}  // namespace ecbm

#include <algorithm>
#include <cmath>

#include "ecbm/editor.hpp"
#include "ecbm/losses.hpp"
#include "ecbm/oracle.hpp"

namespace ecbm {

std::vector<ConceptScore> concept_importance(const Cbm& m, const Dataset& d, const EditOptions& opt,
                                             ImportanceMetric metric, const Dataset* eval) {
  const Dataset& ev = eval != nullptr ? *eval : d;
  const auto k = d.num_concepts();
  double base_f1 = 0.0;
  if (metric == ImportanceMetric::F1Delta) base_f1 = macro_f1(predict(m, ev.inputs), ev.labels, ev.num_classes);
  std::vector<ConceptScore> scores;
  for (std::size_t j = 0; j < k; ++j) {
    const auto res = apply_edit(m, d, ConceptRemoval{{j}}, opt);
    double score = 0.0;
    if (metric == ImportanceMetric::ParamNorm) {
      const Cbm before = delete_concepts(m, {j});
      score = std::sqrt((res.model.g.parameters() - before.g.parameters()).squaredNorm() +
                        (res.model.f.parameters() - before.f.parameters()).squaredNorm());
    } else {
      score = base_f1 - macro_f1(predict(res.model, ev.inputs), ev.labels, ev.num_classes);
    }
    scores.push_back({j, score});
  }
  std::stable_sort(scores.begin(), scores.end(),
                   [](const ConceptScore& a, const ConceptScore& b) { return a.score > b.score; });
  return scores;
}

}  // namespace ecbm
